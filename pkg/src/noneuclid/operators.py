"""Operator descriptors with monotonicity / Lipschitz certificates.

An operator is a map ``F: R^n -> R^n`` paired with a norm and a
:class:`Certificate` recording

* ``lip``   -- a Lipschitz constant ``l`` of ``F``,
* ``mono``  -- a monotonicity parameter ``c >= 0`` (``-osL(-F) >= c``),
* ``diagl`` -- an upper bound on the diagonal Jacobian entries of ``F``.

Scalar activations double as proximal operators of convex scalar
functions; a list of them is a separable proximal operator, i.e. the
resolvent of the subdifferential of a separable convex function.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .norms import NormSpec, induced_matrix_norm, log_norm

__all__ = [
    "Certificate",
    "Operator",
    "AffineOperator",
    "Subdifferential",
    "ScalarActivation",
    "SeparableProx",
    "MonotonicityReport",
    "affine_certificates",
    "scalar_prox_catalog",
    "parse_activation",
    "separable_prox_apply",
    "finite_difference_jacobian",
    "sampled_monotonicity_check",
    "estimate_diagl",
    "identity_operator",
    "zero_operator",
]


@dataclass(frozen=True)
class Certificate:
    lip: float
    mono: float
    diagl: float
    certified: bool = True
    monotone: bool = True

    def __post_init__(self):
        if self.lip < 0:
            raise ValueError("Lipschitz constant must be nonnegative")
        # c is stored clamped at 0; a negative input marks a non-monotone map
        if self.mono < 0:
            object.__setattr__(self, "monotone", False)
        object.__setattr__(self, "mono", max(0.0, float(self.mono)))

    @property
    def strongly_monotone(self):
        return self.monotone and self.mono > 0

    @property
    def kappa(self):
        return self.lip / self.mono if self.mono > 0 else math.inf

    @property
    def kappa_inf(self):
        return self.diagl / self.mono if self.mono > 0 else math.inf


def affine_certificates(A, spec):
    """Certificates of ``F(x) = Ax + b`` in the norm ``spec``.

    ``lip = ||A||``, ``mono = max(0, -mu(-A))`` and ``diagl = max_i A_ii``.
    """
    A = np.asarray(A, dtype=float)
    mono = -log_norm(-A, spec)
    if mono < 0 and mono > -1e-12 * max(1.0, float(np.abs(A).max(initial=0.0))):
        mono = 0.0  # rounding noise on an exactly monotone matrix
    return Certificate(
        lip=induced_matrix_norm(A, spec),
        mono=mono,
        diagl=float(np.max(np.diag(A))),
    )


class Operator:
    """A single-valued map on ``R^n``.

    Parameters
    ----------
    func : callable
        ``func(x) -> ndarray`` of the same shape. Must be pure.
    jacobian : callable, optional
        ``jacobian(x) -> (n, n) ndarray``.
    cert : Certificate, optional
    norm : NormSpec, optional
        The norm in which ``cert`` holds. Defaults to unweighted l-infinity.
    """

    def __init__(self, func, jacobian=None, cert=None, norm=None, dim=None):
        self._func = func
        self._jacobian = jacobian
        self.cert = cert
        self.norm = norm if norm is not None else NormSpec.linf()
        self.dim = dim

    def __call__(self, x):
        return np.asarray(self._func(np.asarray(x, dtype=float)), dtype=float)

    @property
    def has_jacobian(self):
        return self._jacobian is not None

    def jacobian(self, x):
        if self._jacobian is None:
            raise ValueError("operator has no analytic Jacobian")
        return np.asarray(self._jacobian(np.asarray(x, dtype=float)), dtype=float)

    def require_cert(self):
        if self.cert is None:
            raise ValueError("operator carries no certificate")
        return self.cert


class AffineOperator(Operator):
    """``F(x) = A x + b`` with certificates computed from ``A``."""

    def __init__(self, A, b=None, norm=None):
        A = np.array(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"A must be square, got shape {A.shape}")
        n = A.shape[0]
        b = np.zeros(n) if b is None else np.array(b, dtype=float).reshape(-1)
        if b.size != n:
            raise ValueError(f"dimension mismatch: A is {A.shape}, b has {b.size} entries")
        A.setflags(write=False)
        b.setflags(write=False)
        self.A = A
        self.b = b
        norm = norm if norm is not None else NormSpec.linf()
        norm.eta(n)
        super().__init__(self._apply, lambda x: self.A, affine_certificates(A, norm), norm, n)
        self._lu = {}

    def _apply(self, x):
        return self.A @ x + self.b

    def shifted_lu(self, alpha):
        """Cached LU factors of ``I + alpha A``."""
        key = float(alpha)
        if key not in self._lu:
            M = np.eye(self.dim) + key * self.A
            with np.errstate(all="raise"), warnings.catch_warnings():
                # singularity is reported below as LinAlgError
                warnings.simplefilter("ignore", linalg.LinAlgWarning)
                lu, piv = linalg.lu_factor(M, check_finite=True)
            if np.any(np.abs(np.diag(lu)) <= 1e-14 * max(1.0, np.abs(M).max())):
                raise np.linalg.LinAlgError("I + alpha*A is singular")
            self._lu[key] = (lu, piv)
        return self._lu[key]

    def resolvent_matrix(self, alpha):
        """Matrix of ``J_{alpha F}`` restricted to the linear part: ``(I + alpha A)^-1``."""
        return linalg.lu_solve(self.shifted_lu(alpha), np.eye(self.dim))

    def reflected_resolvent_matrix(self, alpha):
        return 2.0 * self.resolvent_matrix(alpha) - np.eye(self.dim)


def identity_operator(n, norm=None):
    return AffineOperator(np.eye(n), norm=norm)


def zero_operator(n, norm=None):
    return AffineOperator(np.zeros((n, n)), norm=norm)


# --------------------------------------------------------------------------
# scalar activations / proximal operators


class ScalarActivation:
    """A scalar slope-bounded map ``phi`` that is the prox of a convex ``f``.

    ``prox(x, alpha)`` evaluates ``prox_{alpha f}`` elementwise; for
    ``alpha = 1`` it equals ``phi``. ``d1``/``d2`` are the infimum and
    supremum of the difference quotients of ``phi``.
    """

    def __init__(self, tag, phi, d1, d2, scaled=None, params=()):
        if not (0.0 <= d1 <= d2 <= 1.0):
            raise ValueError(f"slope bounds must satisfy 0 <= d1 <= d2 <= 1, got ({d1}, {d2})")
        self.tag = tag
        self.params = tuple(params)
        self.d1 = float(d1)
        self.d2 = float(d2)
        self._phi = phi
        self._scaled = scaled

    def __call__(self, x):
        return self._phi(np.asarray(x, dtype=float))

    def prox(self, x, alpha=1.0):
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        if alpha == 1.0:
            return self(x)
        if self._scaled is None:
            raise ValueError(f"activation {self.tag!r} has no alpha-scaling rule")
        return self._scaled(np.asarray(x, dtype=float), float(alpha))

    @property
    def spec_string(self):
        return ":".join([self.tag, *(repr(float(p)) for p in self.params)])

    def __repr__(self):
        return f"ScalarActivation({self.spec_string!r}, d1={self.d1}, d2={self.d2})"


def _relu(x):
    return np.maximum(x, 0.0)


def scalar_prox_catalog(tag, *params, phi=None, d1=None, d2=None, scaled=None):
    """Build a catalog activation.

    Tags: ``relu``, ``leaky_relu`` (slope ``a``), ``clamp`` (``lo, hi``),
    ``soft_threshold`` (``lam``), ``identity`` and ``custom`` (requires
    ``phi``, ``d1``, ``d2``; ``scaled(x, alpha)`` optional).
    """
    tag = tag.lower().replace("-", "_")
    if tag == "relu":
        # indicator of [0, inf): prox is alpha-invariant
        return ScalarActivation("relu", _relu, 0.0, 1.0, lambda x, a: _relu(x))
    if tag == "leaky_relu":
        (a,) = params or (0.1,)
        a = float(a)
        if not 0.0 <= a <= 1.0:
            raise ValueError("leaky_relu slope must lie in [0, 1]")

        def scaled(x, alpha):
            # f(z) = (1 - a) / (2a) z^2 on z < 0
            s = a / (a + alpha * (1.0 - a)) if a > 0 else 0.0
            return np.where(x >= 0, x, s * x)

        return ScalarActivation("leaky_relu", lambda x: np.where(x >= 0, x, a * x),
                                a, 1.0, scaled, (a,))
    if tag == "clamp":
        lo, hi = (float(p) for p in (params or (-1.0, 1.0)))
        if lo > hi:
            raise ValueError("clamp requires lo <= hi")
        d2_ = 1.0 if hi > lo else 0.0
        return ScalarActivation("clamp", lambda x: np.clip(x, lo, hi), 0.0, d2_,
                                lambda x, a: np.clip(x, lo, hi), (lo, hi))
    if tag == "soft_threshold":
        (lam,) = params or (1.0,)
        lam = float(lam)
        if lam < 0:
            raise ValueError("soft_threshold requires lam >= 0")

        def soft(x, alpha=1.0):
            return np.sign(x) * np.maximum(np.abs(x) - alpha * lam, 0.0)

        return ScalarActivation("soft_threshold", soft, 0.0, 1.0, soft, (lam,))
    if tag == "identity":
        return ScalarActivation("identity", lambda x: x.copy(), 1.0, 1.0,
                                lambda x, a: x.copy())
    if tag == "custom":
        if phi is None or d1 is None or d2 is None:
            raise ValueError("custom activation needs phi, d1 and d2")
        return ScalarActivation("custom", phi, d1, d2, scaled, params)
    raise ValueError(f"unknown activation tag {tag!r}")


def parse_activation(text):
    """Parse ``"relu"``, ``"leaky_relu:0.1"``, ``"clamp:-1:1"``, ..."""
    parts = [p.strip() for p in str(text).split(":")]
    try:
        params = [float(p) for p in parts[1:]]
    except ValueError:
        raise ValueError(f"bad activation parameters in {text!r}") from None
    return scalar_prox_catalog(parts[0], *params)


class SeparableProx:
    """Coordinatewise proximal operator ``prox_{alpha g}`` of a separable ``g``.

    ``activations`` is a single :class:`ScalarActivation` (broadcast to every
    coordinate) or a sequence with one entry per coordinate.
    """

    def __init__(self, activations):
        if isinstance(activations, ScalarActivation):
            self.activations = activations
        else:
            self.activations = tuple(activations)
            if not self.activations:
                raise ValueError("need at least one activation")

    @property
    def broadcast(self):
        return isinstance(self.activations, ScalarActivation)

    @property
    def is_zero(self):
        """True when ``g = 0`` (every coordinate is the identity prox)."""
        acts = [self.activations] if self.broadcast else self.activations
        return all(a.tag == "identity" for a in acts)

    def __call__(self, x, alpha=1.0):
        x = np.asarray(x, dtype=float)
        if self.broadcast:
            return self.activations.prox(x, alpha)
        if x.shape[-1] != len(self.activations):
            raise ValueError("dimension mismatch between prox and input")
        return np.array([act.prox(x[i], alpha) for i, act in enumerate(self.activations)])


def separable_prox_apply(prox, alpha, x):
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return prox(x, alpha)


class Subdifferential(Operator):
    """``G = dg`` for separable convex ``g``; only its resolvent is available.

    Evaluating ``G`` itself is not supported (it is set-valued).
    """

    def __init__(self, prox, norm=None, dim=None):
        self.prox = prox if isinstance(prox, SeparableProx) else SeparableProx(prox)
        norm = norm if norm is not None else NormSpec.linf()
        # monotone in every monotonic norm; no finite Lipschitz constant in general
        super().__init__(self._undefined, None, Certificate(math.inf, 0.0, math.inf, False),
                         norm, dim)

    @staticmethod
    def _undefined(x):
        raise TypeError("a subdifferential is set-valued; use its resolvent instead")


# --------------------------------------------------------------------------
# sampling-based checks


def finite_difference_jacobian(op, x, step=1e-6):
    """Central-difference Jacobian of ``op`` at ``x``."""
    if step <= 0:
        raise ValueError("step must be positive")
    x = np.asarray(x, dtype=float)
    n = x.size
    J = np.empty((op(x).size, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = step
        J[:, j] = (op(x + e) - op(x - e)) / (2.0 * step)
    return J


@dataclass
class MonotonicityReport:
    min_value: float
    claimed: float | None
    violated: bool
    samples: int


def sampled_monotonicity_check(op, samples=100, rng=None, scale=1.0, claimed=None, points=None):
    """Minimum of ``-mu(-DF(x))`` over sampled points.

    A violation is flagged when the minimum drops below ``claimed - 1e-9``;
    ``claimed`` defaults to the operator's certified ``mono``.
    """
    if not op.has_jacobian:
        raise ValueError("sampled monotonicity check needs an analytic Jacobian")
    if points is None:
        rng = np.random.default_rng(rng)
        n = op.dim
        if n is None:
            raise ValueError("operator dimension unknown; pass points explicitly")
        points = scale * rng.standard_normal((samples, n))
    values = [-log_norm(-op.jacobian(x), op.norm) for x in points]
    low = float(min(values))
    if claimed is None and op.cert is not None:
        claimed = op.cert.mono
    violated = claimed is not None and low < claimed - 1e-9
    return MonotonicityReport(low, claimed, violated, len(values))


def estimate_diagl(op, samples=100, rng=None, scale=1.0, step=1e-6):
    """Largest sampled diagonal entry of finite-difference Jacobians.

    The result is an estimate, not a certificate.
    """
    rng = np.random.default_rng(rng)
    best = -math.inf
    for _ in range(samples):
        x = scale * rng.standard_normal(op.dim)
        J = op.jacobian(x) if op.has_jacobian else finite_difference_jacobian(op, x, step)
        best = max(best, float(np.max(np.diag(J))))
    return best
