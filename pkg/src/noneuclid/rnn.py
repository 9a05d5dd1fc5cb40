"""Equilibria and l-infinity Lipschitz certificates of recurrent networks.

The network ``xdot = -x + Phi(A x + B u + b)`` has equilibria solving
``x = Phi(A x + B u + b)``. With ``gamma = mu_{inf,[eta]^-1}(A) < 1`` the
equilibrium is unique and equals the zero of ``F + dg`` with

    F(z) = (I - A) z - (B u + b),     prox_g = Phi,

so forward-step, forward-backward and Peaceman-Rachford iterations all
apply with certified contraction factors.
"""

from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from . import io
from .norms import NormSpec, induced_matrix_norm, log_norm
from .operators import AffineOperator, ScalarActivation, SeparableProx, parse_activation
from .projection import project_matrix
from .solvers import CertificationError, InvalidStepSize, SolveConfig, _drive

__all__ = [
    "RnnModel",
    "ContractionCertificate",
    "rnn_residual",
    "contraction_certificate",
    "equilibrium_forward_step",
    "equilibrium_fb",
    "equilibrium_pr",
    "equilibrium",
    "theoretical_factor",
    "lipschitz_bound",
    "lipschitz_bound_prior",
    "empirical_lipschitz",
    "random_model",
    "save_model",
    "load_model",
    "METHODS",
]

METHODS = ("forward_step", "fb", "pr")


class RnnModel:
    """Weights ``A (n, n)``, ``B (n, m)``, bias ``b (n,)`` and a scalar activation.

    ``gamma`` is recomputed from ``A`` and the weights ``eta`` on
    construction.
    """

    def __init__(self, A, B, b=None, activation="relu", weights=None):
        A = np.array(A, dtype=float)
        B = np.array(B, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"A must be square, got shape {A.shape}")
        n = A.shape[0]
        if B.ndim == 1:
            B = B.reshape(n, -1)
        if B.ndim != 2 or B.shape[0] != n:
            raise ValueError(f"B must have {n} rows, got shape {B.shape}")
        b = np.zeros(n) if b is None else np.array(b, dtype=float).reshape(-1)
        if b.size != n:
            raise ValueError(f"b must have {n} entries, got {b.size}")
        if not isinstance(activation, ScalarActivation):
            activation = parse_activation(activation)
        for arr in (A, B, b):
            arr.setflags(write=False)
        self.A, self.B, self.b = A, B, b
        self.activation = activation
        self.spec = NormSpec.linf(weights)
        self.eta = self.spec.eta(n)
        self.gamma = log_norm(A, self.spec)
        self._lu = {}

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    def input_term(self, u):
        u = np.asarray(u, dtype=float).reshape(-1)
        if u.size != self.m:
            raise ValueError(f"input must have {self.m} entries, got {u.size}")
        return self.B @ u + self.b

    @property
    def alpha_max(self):
        """Largest certified step for forward-backward and Peaceman-Rachford."""
        return 1.0 / (1.0 - float(np.min(np.diag(self.A))))

    @property
    def alpha_max_forward_step(self):
        """Largest certified step for the forward-step iteration."""
        d = np.diag(self.A)
        act = self.activation
        return 1.0 / (1.0 - float(np.min(np.minimum(act.d1 * d, act.d2 * d))))

    def split_operators(self, u):
        """``(F, prox_g)`` with ``F(z) = (I - A) z - (B u + b)`` and ``prox_g = Phi``."""
        F = AffineOperator(np.eye(self.n) - self.A, -self.input_term(u), norm=self.spec)
        return F, SeparableProx(self.activation)

    def pr_lu(self, alpha):
        key = float(alpha)
        if key not in self._lu:
            M = (1.0 + key) * np.eye(self.n) - key * self.A
            self._lu[key] = linalg.lu_factor(M)
        return self._lu[key]

    def __repr__(self):
        return (f"RnnModel(n={self.n}, m={self.m}, activation={self.activation.spec_string!r}, "
                f"gamma={self.gamma:.6g})")


@dataclass(frozen=True)
class ContractionCertificate:
    gamma: float
    rate: float


def rnn_residual(model, x, u):
    """Right-hand side ``-x + Phi(A x + B u + b)``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (model.n,):
        raise ValueError(f"state must have shape ({model.n},), got {x.shape}")
    return -x + model.activation(model.A @ x + model.input_term(u))


def _require_contracting(model):
    if not model.gamma < 1:
        raise CertificationError(f"need gamma < 1, got gamma = {model.gamma}")


def contraction_certificate(model):
    """``gamma`` and the contraction rate ``1 - max(d1 gamma, d2 gamma)``."""
    _require_contracting(model)
    act = model.activation
    g = model.gamma
    return ContractionCertificate(g, 1.0 - max(act.d1 * g, act.d2 * g))


def theoretical_factor(model, method, alpha):
    """Certified per-iteration contraction factor of an equilibrium iteration."""
    g = model.gamma
    if method == "forward_step":
        return 1.0 - alpha * contraction_certificate(model).rate
    if method == "fb":
        return 1.0 - alpha * (1.0 - g)
    if method == "pr":
        return (1.0 - alpha * (1.0 - g)) / (1.0 + alpha * (1.0 - g))
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def _prepare(model, config, method):
    _require_contracting(model)
    config = config or SolveConfig(alpha=None)
    amax = model.alpha_max_forward_step if method == "forward_step" else model.alpha_max
    alpha = amax if config.alpha is None else config.alpha
    if not config.force and not (0 < alpha <= amax * (1 + 1e-12)):
        raise InvalidStepSize(f"alpha={alpha} outside ]0, {amax}] for {method}")
    return dataclasses.replace(config, alpha=alpha), alpha


def _residual(model, x, c):
    return float(np.max(np.abs(x - model.activation(model.A @ x + c)), initial=0.0))


def equilibrium_forward_step(model, u, config=None, x0=None):
    """``x <- (1 - alpha) x + alpha Phi(A x + B u + b)``."""
    config, alpha = _prepare(model, config, "forward_step")
    c = model.input_term(u)
    phi, A = model.activation, model.A

    def evaluate(x):
        pre = A @ x + c
        px = phi(pre)
        r = float(np.max(np.abs(x - px), initial=0.0))
        return x, r, (1.0 - alpha) * x + alpha * px

    x0 = np.zeros(model.n) if x0 is None else x0
    res = _drive(evaluate, x0, config, "forward_step", theoretical_factor(model, "forward_step", alpha))
    res.extra["alpha"] = alpha
    return res


def equilibrium_fb(model, u, config=None, x0=None):
    """``x <- prox_{alpha g}((1 - alpha) x + alpha (A x + B u + b))``."""
    config, alpha = _prepare(model, config, "fb")
    c = model.input_term(u)
    act, A = model.activation, model.A

    def evaluate(x):
        pre = A @ x + c
        r = float(np.max(np.abs(x - act(pre)), initial=0.0))
        return x, r, act.prox((1.0 - alpha) * x + alpha * pre, alpha)

    x0 = np.zeros(model.n) if x0 is None else x0
    res = _drive(evaluate, x0, config, "fb", theoretical_factor(model, "fb", alpha))
    res.extra["alpha"] = alpha
    return res


def equilibrium_pr(model, u, config=None, z0=None):
    """Peaceman-Rachford on the split ``(I - A) z - (B u + b)`` plus ``dg``.

    ``x = (I + alpha (I - A))^-1 (z + alpha (B u + b))`` using a cached LU
    factorization, then ``z <- z + 2 prox_{alpha g}(2x - z) - 2x``. The
    residual trace is that of the ``x`` sequence.
    """
    config, alpha = _prepare(model, config, "pr")
    c = model.input_term(u)
    act = model.activation
    lu = model.pr_lu(alpha)

    def evaluate(z):
        x = linalg.lu_solve(lu, z + alpha * c)
        r = _residual(model, x, c)
        return x, r, z + 2.0 * (act.prox(2.0 * x - z, alpha) - x)

    z0 = np.zeros(model.n) if z0 is None else z0
    res = _drive(evaluate, z0, config, "pr", theoretical_factor(model, "pr", alpha))
    res.extra["alpha"] = alpha
    return res


_DISPATCH = {
    "forward_step": equilibrium_forward_step,
    "fb": equilibrium_fb,
    "pr": equilibrium_pr,
}


def equilibrium(model, u, method="fb", config=None):
    try:
        fn = _DISPATCH[method]
    except KeyError:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}") from None
    return fn(model, u, config)


def _eta_ratio(model):
    return float(model.eta.max() / model.eta.min())


def lipschitz_bound(model):
    """``(eta_max / eta_min) ||B||_inf / (1 - gamma)``."""
    _require_contracting(model)
    return _eta_ratio(model) * _b_norm(model) / (1.0 - model.gamma)


def lipschitz_bound_prior(model):
    """``(eta_max / eta_min) ||B||_inf / (1 - max(gamma, 0))``."""
    _require_contracting(model)
    return _eta_ratio(model) * _b_norm(model) / (1.0 - max(model.gamma, 0.0))


def _b_norm(model):
    # ||B||_inf for rectangular B: maximum absolute row sum
    return float(np.max(np.sum(np.abs(model.B), axis=1)))


def empirical_lipschitz(model, pair_count=100, seed=0, scale=1.0, offset=0.0,
                        tol=1e-10, max_iter=100_000, method="fb"):
    """Largest sampled ``||x_u - x_v||_inf / ||u - v||_inf``; a lower bound on the true constant.

    Inputs are drawn as ``offset + scale * N(0, I)``.
    """
    rng = np.random.default_rng(seed)
    config = SolveConfig(alpha=None, tol=tol, max_iter=max_iter, record_trace=False)
    best = 0.0
    for _ in range(pair_count):
        u = offset + scale * rng.standard_normal(model.m)
        v = offset + scale * rng.standard_normal(model.m)
        xs = []
        for w in (u, v):
            res = equilibrium(model, w, method, config)
            if not res.converged:
                raise RuntimeError(f"equilibrium solve did not converge: {res.message}")
            xs.append(res.x_star)
        du = float(np.max(np.abs(u - v)))
        if du > 0:
            best = max(best, float(np.max(np.abs(xs[0] - xs[1]))) / du)
    return best


def random_model(n, m, gamma, activation="relu", seed=0, weights=None):
    """Draw ``A, B, b, u`` with i.i.d. standard normal entries and project ``A``.

    The generator is numpy's PCG64 seeded with ``seed``; normals come from
    its ziggurat sampler, drawn in the order ``A`` (row-major), ``B``,
    ``b``, ``u``. ``A`` is then projected onto ``mu_{inf,[eta]^-1}(A) <= gamma``.
    Returns ``(model, u)``.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    A = rng.standard_normal((n, n))
    B = rng.standard_normal((n, m))
    b = rng.standard_normal(n)
    u = rng.standard_normal(m)
    A = project_matrix(A, gamma, weights)
    return RnnModel(A, B, b, activation, weights), u


def save_model(model, directory):
    os.makedirs(directory, exist_ok=True)
    io.write_matrix(os.path.join(directory, "A.csv"), model.A)
    io.write_matrix(os.path.join(directory, "B.csv"), model.B)
    io.write_vector(os.path.join(directory, "b.csv"), model.b)
    meta = {"activation": model.activation.spec_string}
    if model.spec.weights is not None:
        meta["eta"] = ",".join(io.format_float(v) for v in model.eta)
    io.write_keyvalue(os.path.join(directory, "meta.txt"), meta)


def load_model(directory):
    """Load ``A.csv``, ``B.csv``, ``b.csv`` and ``meta.txt``; ``gamma`` is recomputed."""
    A = io.read_matrix(os.path.join(directory, "A.csv"))
    B = io.read_matrix(os.path.join(directory, "B.csv"))
    b_path = os.path.join(directory, "b.csv")
    b = io.read_vector(b_path) if os.path.exists(b_path) else None
    meta_path = os.path.join(directory, "meta.txt")
    meta = io.read_keyvalue(meta_path) if os.path.exists(meta_path) else {}
    eta = None
    if meta.get("eta"):
        eta = [float(v) for v in meta["eta"].split(",")]
    return RnnModel(A, B, b, meta.get("activation", "relu"), eta)
