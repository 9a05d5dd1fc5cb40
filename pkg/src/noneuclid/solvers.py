"""Fixed-point and zero-finding iterations with certified step ranges.

Every solver returns a :class:`SolveResult` carrying the l-infinity
residual trace. Residuals:

* Picard / Krasnosel'skii-Mann: ``||x - T(x)||``
* forward step, proximal point, Cayley: ``||F(x)||``
* forward-backward: ``||x - J_{aG}(x - a F(x))|| / a``
* Peaceman-Rachford, Douglas-Rachford: ``||J_{aF}(2x - z) - x|| / a``
  with ``x = J_{aG}(z)``

Each vanishes exactly at a solution. Step sizes are checked against the
range in which the iteration is certified to converge; ``force=True``
skips the check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .operators import Certificate, Operator, SeparableProx, Subdifferential
from .resolvents import (
    ResolventSettings,
    alpha_star,
    lip_forward_step_general,
    lip_reflected_general,
    reflected_resolvent,
    resolvent,
)

__all__ = [
    "STRONG",
    "MONOTONE",
    "CertificationError",
    "InvalidStepSize",
    "SolveConfig",
    "SolveResult",
    "picard_solve",
    "km_solve",
    "forward_step_solve",
    "proximal_point_solve",
    "cayley_solve",
    "forward_backward_solve",
    "peaceman_rachford_solve",
    "douglas_rachford_solve",
    "km_residual_bound",
    "asymptotic_ratio",
]

STRONG = "strong"
MONOTONE = "monotone"


class CertificationError(ValueError):
    """The operator's certificates do not support the requested iteration."""


class InvalidStepSize(CertificationError):
    """The step size lies outside the certified range."""


@dataclass(frozen=True)
class SolveConfig:
    alpha: float = 1.0
    theta: float = 0.5
    tol: float = 1e-10
    max_iter: int = 10_000
    mode: str = STRONG
    record_trace: bool = True
    record_iterates: bool = False
    force: bool = False
    divergence_factor: float = 1e6

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if not 0.0 < self.theta < 1.0:
            raise ValueError("theta must lie in ]0, 1[")
        if self.mode not in (STRONG, MONOTONE):
            raise ValueError(f"mode must be {STRONG!r} or {MONOTONE!r}")
        if self.max_iter < 0:
            raise ValueError("max_iter must be nonnegative")


@dataclass
class SolveResult:
    x_star: np.ndarray
    iterations: int
    converged: bool
    residuals: np.ndarray
    empirical_ratio: float
    method: str = ""
    factor: float | None = None
    diverged: bool = False
    message: str = ""
    iterates: list | None = None
    states: list | None = None  # z-sequence of the splitting methods
    extra: dict = field(default_factory=dict)

    @property
    def final_residual(self):
        return float(self.residuals[-1]) if len(self.residuals) else math.nan

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("iter,residual\n")
            for k, r in enumerate(self.residuals):
                fh.write(f"{k},{float(r)!r}\n")


def _inf(v):
    return float(np.max(np.abs(v), initial=0.0))


def _max_ratio(res):
    res = np.asarray(res)
    if res.size < 2:
        return 0.0
    prev, nxt = res[:-1], res[1:]
    ok = prev > 0
    return float(np.max(nxt[ok] / prev[ok])) if np.any(ok) else 0.0


def _drive(evaluate, state0, config, method, factor=None):
    """Run ``state -> (x, residual, next_state)`` until tolerance or cap."""
    state = np.array(state0, dtype=float)
    residuals = []
    iterates = [] if config.record_iterates else None
    states = [] if config.record_iterates else None
    converged = diverged = False
    message = ""
    x = state
    k = 0
    for k in range(config.max_iter + 1):
        x, r, nxt = evaluate(state)
        residuals.append(r)
        if iterates is not None:
            iterates.append(np.array(x))
            states.append(np.array(state))
        if r <= config.tol:
            converged = True
            message = "converged"
            break
        if not math.isfinite(r) or (residuals[0] > 0 and r > config.divergence_factor * residuals[0]):
            diverged = True
            message = f"diverged: residual {r:.3e} exceeds {config.divergence_factor:g} x initial"
            break
        if k == config.max_iter:
            message = f"max_iter={config.max_iter} reached"
            break
        state = nxt
    residuals = np.array(residuals)
    return SolveResult(
        x_star=np.array(x),
        iterations=k,
        converged=converged,
        residuals=residuals if config.record_trace else residuals[-1:],
        empirical_ratio=_max_ratio(residuals),
        method=method,
        factor=factor,
        diverged=diverged,
        message=message,
        iterates=iterates,
        states=states,
    )


# --------------------------------------------------------------------------
# basic fixed-point iterations


def picard_solve(T, x0, config=None):
    """Picard iteration ``x <- T(x)`` for a contraction ``T``."""
    config = config or SolveConfig()

    def evaluate(x):
        t = np.asarray(T(x), dtype=float)
        return x, _inf(x - t), t

    return _drive(evaluate, x0, config, "picard")


def km_solve(T, theta, x0, config=None):
    """Krasnosel'skii-Mann iteration ``x <- (1 - theta) x + theta T(x)``."""
    config = config or SolveConfig()
    if not 0.0 < theta < 1.0:
        raise ValueError("theta must lie in ]0, 1[")

    def evaluate(x):
        t = np.asarray(T(x), dtype=float)
        return x, _inf(x - t), (1.0 - theta) * x + theta * t

    return _drive(evaluate, x0, config, "km")


def km_residual_bound(dist0, k, theta):
    """Upper bound ``2 d0 / sqrt(k pi theta (1 - theta))`` on ``||x^k - T(x^k)||``."""
    if k == 0:
        return math.inf
    return 2.0 * dist0 / math.sqrt(k * math.pi * theta * (1.0 - theta))


# --------------------------------------------------------------------------
# certification helpers


def _cert(op):
    if isinstance(op, (SeparableProx, Subdifferential)):
        return Certificate(math.inf, 0.0, math.inf, certified=False)
    if op.cert is None:
        raise CertificationError("operator carries no certificate")
    return op.cert


def _alpha_le(alpha, bound, closed=True):
    if not alpha > 0:
        return False
    if math.isinf(bound):
        return True
    return alpha <= bound * (1 + 1e-12) if closed else alpha < bound


def _inv(d):
    return math.inf if d <= 0 else 1.0 / d


def _require(cond, msg, exc=CertificationError):
    if not cond:
        raise exc(msg)


def _require_diag_family(op):
    _require(op.norm.is_diagonal_family,
             "this iteration is certified only for weighted l1 / l-infinity norms")


def _require_monotone(cert):
    _require(cert.monotone, "operator is not monotone in the certified norm")


def _require_strong(cert):
    _require(cert.strongly_monotone,
             f"strong mode needs c > 0 (certified c = {cert.mono}); use mode='monotone'")


def _x0(op, x0):
    if x0 is not None:
        return np.asarray(x0, dtype=float)
    if op.dim is None:
        raise ValueError("x0 is required when the operator dimension is unknown")
    return np.zeros(op.dim)


# --------------------------------------------------------------------------
# single-operator methods


def _forward_step_factor(op, config):
    cert = _cert(op)
    alpha = config.alpha
    if config.mode == STRONG:
        _require_strong(cert)
        if op.norm.is_diagonal_family:
            _require(_alpha_le(alpha, _inv(cert.diagl)),
                     f"alpha={alpha} outside ]0, 1/diagl] = ]0, {_inv(cert.diagl)}]", InvalidStepSize)
            return 1.0 - alpha * cert.mono
        a_star = alpha_star(cert.mono, cert.lip)
        _require(0 < alpha < a_star, f"alpha={alpha} outside ]0, alpha*[ = ]0, {a_star}[",
                 InvalidStepSize)
        return lip_forward_step_general(cert.mono, cert.lip, alpha)
    _require_monotone(cert)
    _require_diag_family(op)
    _require(_alpha_le(alpha, _inv(cert.diagl), closed=False),
             f"alpha={alpha} outside ]0, 1/diagl[ = ]0, {_inv(cert.diagl)}[", InvalidStepSize)
    return 1.0


def forward_step_solve(op, config, x0=None):
    """Forward step method ``x <- x - alpha F(x)``."""
    factor = None if config.force else _forward_step_factor(op, config)
    alpha = config.alpha

    def evaluate(x):
        fx = op(x)
        return x, _inf(fx), x - alpha * fx

    return _drive(evaluate, _x0(op, x0), config, "forward_step", factor)


def _proximal_point_factor(op, config):
    cert = _cert(op)
    _require(config.alpha > 0, "alpha must be positive", InvalidStepSize)
    if config.mode == STRONG:
        _require_strong(cert)
        return 1.0 / (1.0 + config.alpha * cert.mono)
    _require_monotone(cert)
    _require_diag_family(op)
    _require(cert.diagl != 0, "monotone-mode proximal point needs diagl != 0")
    return 1.0


def proximal_point_solve(op, config, settings=None, x0=None):
    """Proximal point method ``x <- J_{alpha F}(x)``."""
    factor = None if config.force else _proximal_point_factor(op, config)
    alpha = config.alpha
    settings = settings or ResolventSettings()

    def evaluate(x):
        return x, _inf(op(x)), resolvent(op, alpha, x, settings)

    return _drive(evaluate, _x0(op, x0), config, "proximal_point", factor)


def _cayley_factor(op, config):
    cert = _cert(op)
    alpha = config.alpha
    if config.mode == STRONG:
        _require_strong(cert)
        if op.norm.is_diagonal_family:
            _require(_alpha_le(alpha, _inv(cert.diagl)),
                     f"alpha={alpha} outside ]0, 1/diagl] = ]0, {_inv(cert.diagl)}]", InvalidStepSize)
            return (1.0 - alpha * cert.mono) / (1.0 + alpha * cert.mono)
        bound = lip_reflected_general(cert.mono, cert.lip, alpha)
        _require(bound < 1.0, f"reflected resolvent bound {bound:.6g} >= 1 at alpha={alpha}",
                 InvalidStepSize)
        return bound
    return _proximal_point_factor(op, config)


def cayley_solve(op, config, settings=None, x0=None):
    """Cayley method ``x <- R_{alpha F}(x)``.

    In monotone mode the Krasnosel'skii-Mann average with ``theta = 1/2`` is
    run instead, which coincides with the proximal point method.
    """
    factor = None if config.force else _cayley_factor(op, config)
    alpha = config.alpha
    settings = settings or ResolventSettings()
    averaged = config.mode == MONOTONE

    def evaluate(x):
        rx = reflected_resolvent(op, alpha, x, settings)
        nxt = 0.5 * (x + rx) if averaged else rx
        return x, _inf(op(x)), nxt

    return _drive(evaluate, _x0(op, x0), config, "cayley", factor)


# --------------------------------------------------------------------------
# splitting methods


def _g_cert(G):
    if isinstance(G, (SeparableProx, Subdifferential)):
        return None  # separable subdifferential: R_{aG} nonexpansive for every a
    cert = _cert(G)
    _require_monotone(cert)
    return cert


def _is_zero_g(G):
    prox = G if isinstance(G, SeparableProx) else getattr(G, "prox", None)
    return isinstance(prox, SeparableProx) and prox.is_zero


def _forward_backward_factor(F, G, config):
    _require_diag_family(F)
    cert = _cert(F)
    _g_cert(G)
    alpha = config.alpha
    _require(_alpha_le(alpha, _inv(cert.diagl)),
             f"alpha={alpha} outside ]0, 1/diagl_F] = ]0, {_inv(cert.diagl)}]", InvalidStepSize)
    if config.mode == STRONG:
        _require_strong(cert)
        return 1.0 - alpha * cert.mono
    _require_monotone(cert)
    return 1.0


def forward_backward_solve(F, G, config, settings=None, x0=None):
    """Forward-backward splitting ``x <- J_{aG}(x - a F(x))`` for ``0 in F(x) + G(x)``.

    ``G`` is a :class:`SeparableProx`, a :class:`Subdifferential` or any
    monotone operator with a computable resolvent. Monotone mode runs the
    averaged iteration ``x <- x/2 + J_{aG}(x - a F(x))/2``.
    """
    factor = None if config.force else _forward_backward_factor(F, G, config)
    alpha = config.alpha
    settings = settings or ResolventSettings()
    averaged = config.mode == MONOTONE

    def evaluate(x):
        p = resolvent(G, alpha, x - alpha * F(x), settings)
        nxt = 0.5 * (x + p) if averaged else p
        return x, _inf(x - p) / alpha, nxt

    return _drive(evaluate, _x0(F, x0), config, "forward_backward", factor)


def _rachford_bound(F, G, config, strong):
    _require_diag_family(F)
    cert = _cert(F)
    g_cert = _g_cert(G)
    alpha = config.alpha
    bound = _inv(cert.diagl)
    if g_cert is not None:
        bound = min(bound, _inv(g_cert.diagl))
    if not strong and _is_zero_g(G):
        # G = 0: Douglas-Rachford is the proximal point method, any alpha works
        _require(cert.diagl != 0, "monotone F with G = 0 needs diagl != 0")
        bound = math.inf
    _require(_alpha_le(alpha, bound),
             f"alpha={alpha} outside ]0, min(1/diagl_F, 1/diagl_G)] = ]0, {bound}]", InvalidStepSize)
    if strong:
        _require_strong(cert)
        return (1.0 - alpha * cert.mono) / (1.0 + alpha * cert.mono)
    _require_monotone(cert)
    return 1.0


def _rachford_evaluator(F, G, alpha, settings, relax):
    def evaluate(z):
        x_g = resolvent(G, alpha, z, settings)
        x_f = resolvent(F, alpha, 2.0 * x_g - z, settings)
        return x_g, _inf(x_f - x_g) / alpha, z + relax * (x_f - x_g)

    return evaluate


def peaceman_rachford_solve(F, G, config, settings=None, z0=None):
    """Peaceman-Rachford splitting.

    ``x = J_{aG}(z)``, ``z <- z + 2 J_{aF}(2x - z) - 2x``. The returned
    iterates are the ``x`` sequence; the certified factor applies to ``z``.
    """
    factor = None if config.force else _rachford_bound(F, G, config, strong=True)
    settings = settings or ResolventSettings()
    evaluate = _rachford_evaluator(F, G, config.alpha, settings, 2.0)
    return _drive(evaluate, _x0(F, z0), config, "peaceman_rachford", factor)


def douglas_rachford_solve(F, G, config, settings=None, z0=None):
    """Douglas-Rachford splitting, the ``theta = 1/2`` average of Peaceman-Rachford.

    ``x = J_{aG}(z)``, ``z <- z + J_{aF}(2x - z) - x``.
    """
    factor = None if config.force else _rachford_bound(F, G, config, strong=False)
    settings = settings or ResolventSettings()
    evaluate = _rachford_evaluator(F, G, config.alpha, settings, 1.0)
    return _drive(evaluate, _x0(F, z0), config, "douglas_rachford", factor)


def asymptotic_ratio(residuals, skip=5, floor=None):
    """Geometric-mean per-iteration residual ratio over the tail of a trace.

    Iterations before ``skip`` and residuals at or below ``floor`` (default
    ``1e3 * eps * r_0``, the round-off plateau) are discarded; the ratio is
    measured over the second half of what remains.
    """
    r = np.asarray(residuals, dtype=float)
    if r.size == 0:
        return math.nan
    if floor is None:
        floor = 1e3 * np.finfo(float).eps * max(r[0], np.finfo(float).tiny)
    above = np.flatnonzero(r > floor)
    if above.size == 0:
        return 0.0
    end = int(above[-1])
    start = min(skip, end)
    start = start + (end - start) // 2
    if end <= start:
        # dropped to the floor right away
        return 0.0 if end < r.size - 1 else math.nan
    return float((r[end] / r[start]) ** (1.0 / (end - start)))
