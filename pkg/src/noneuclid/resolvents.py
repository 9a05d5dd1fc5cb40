"""Resolvent, reflected resolvent and forward-step operators.

Also collects the closed-form Lipschitz bounds of these operators in terms
of the monotonicity parameter ``c``, the Lipschitz constant ``l`` and the
diagonal bound ``diagl`` of ``F``, together with the step sizes that
make them contractive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg, optimize

from .operators import AffineOperator, SeparableProx, Subdifferential

__all__ = [
    "ResolventError",
    "ResolventSettings",
    "forward_step",
    "resolvent",
    "reflected_resolvent",
    "lip_forward_step_general",
    "lip_forward_step_diag",
    "lip_forward_step_l2",
    "lip_forward_step_prior",
    "lip_resolvent",
    "lip_reflected_general",
    "lip_reflected_diag",
    "alpha_star",
    "alpha_opt_general",
    "alpha_max_reflected_general",
    "fig1_curves",
    "FIG1_HEADER",
]

DIRECT = "direct"
PROX = "prox"
DAMPED = "damped"


class ResolventError(RuntimeError):
    """The resolvent equation ``x + alpha F(x) = u`` could not be solved."""


@dataclass(frozen=True)
class ResolventSettings:
    """Inner solve settings.

    ``method`` is one of ``"direct"``, ``"prox"``, ``"damped"`` or ``None``
    (pick from the operator type). ``tol`` bounds the l-infinity residual
    of the resolvent equation, relative to ``max(1, ||u||_inf)``.
    """

    tol: float = 1e-12
    max_iter: int = 100_000
    method: str | None = None

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.method not in (None, DIRECT, PROX, DAMPED):
            raise ValueError(f"unknown resolvent method {self.method!r}")


DEFAULT_SETTINGS = ResolventSettings()


def _check_alpha(alpha):
    if not alpha > 0:
        raise ValueError(f"step size must be positive, got {alpha}")


def forward_step(op, alpha, x):
    """``S_{alpha F}(x) = x - alpha F(x)``."""
    _check_alpha(alpha)
    x = np.asarray(x, dtype=float)
    return x - alpha * op(x)


def resolvent(op, alpha, u, settings=None):
    """Solve ``(Id + alpha F)(x) = u`` for ``x``.

    Affine operators use a cached LU factorization, separable
    subdifferentials their closed-form prox. Any other monotone operator is
    handled by the damped iteration ``x <- x - beta (x + alpha F(x) - u)``
    with ``beta = 1 / (1 + alpha diagl)``, which contracts with factor
    ``1 - beta (1 + alpha c)`` in the weighted l1 / l-infinity norms.
    """
    _check_alpha(alpha)
    settings = settings or DEFAULT_SETTINGS
    u = np.asarray(u, dtype=float)
    method = settings.method
    if isinstance(op, SeparableProx):
        return op(u, alpha)
    if isinstance(op, Subdifferential):
        if method not in (None, PROX):
            raise ValueError("subdifferentials only support the prox resolvent")
        return op.prox(u, alpha)
    if isinstance(op, AffineOperator) and method in (None, DIRECT):
        try:
            lu = op.shifted_lu(alpha)
        except (np.linalg.LinAlgError, FloatingPointError) as exc:
            raise ResolventError(f"singular resolvent system: {exc}") from exc
        return linalg.lu_solve(lu, u - alpha * op.b)
    if method in (DIRECT, PROX):
        raise ValueError(f"method {method!r} not available for {type(op).__name__}")
    return _damped_resolvent(op, alpha, u, settings)


def _damped_resolvent(op, alpha, u, settings):
    cert = op.require_cert()
    if not cert.monotone:
        raise ResolventError("damped resolvent iteration needs a monotone operator")
    if not math.isfinite(cert.diagl):
        raise ResolventError("damped resolvent iteration needs a finite diagl")
    beta = 1.0 / (1.0 + alpha * max(cert.diagl, 0.0))
    tol = settings.tol * max(1.0, float(np.max(np.abs(u), initial=0.0)))
    x = u.copy()
    for _ in range(settings.max_iter):
        r = x + alpha * op(x) - u
        if np.max(np.abs(r), initial=0.0) <= tol:
            return x
        x = x - beta * r
    raise ResolventError(f"damped resolvent iteration hit max_iter={settings.max_iter}")


def reflected_resolvent(op, alpha, u, settings=None):
    """``R_{alpha F}(u) = 2 J_{alpha F}(u) - u``."""
    u = np.asarray(u, dtype=float)
    return 2.0 * resolvent(op, alpha, u, settings) - u


# --------------------------------------------------------------------------
# Lipschitz bounds


def _check_c_ell(c, ell):
    if c < 0:
        raise ValueError("monotonicity parameter c must be nonnegative")
    if c > ell:
        raise ValueError(f"need c <= l, got c={c}, l={ell}")


def _check_diag_alpha(c, diagl, alpha):
    _check_alpha(alpha)
    if c < 0 or c > diagl:
        raise ValueError(f"need 0 <= c <= diagl, got c={c}, diagl={diagl}")
    if diagl > 0 and alpha > (1.0 / diagl) * (1 + 1e-12):
        raise ValueError(f"alpha={alpha} outside ]0, 1/diagl] = ]0, {1.0 / diagl}]")


def _general_numerator(c, ell, alpha):
    # e^{-ac} + e^{al} - 1 - al, written to avoid cancellation near 0
    return math.exp(-alpha * c) + (math.expm1(alpha * ell) - alpha * ell)


def lip_forward_step_general(c, ell, alpha):
    """Bound on ``Lip(S_{alpha F})`` valid in any norm."""
    _check_c_ell(c, ell)
    _check_alpha(alpha)
    return _general_numerator(c, ell, alpha)


def lip_forward_step_diag(c, diagl, alpha):
    """``1 - alpha c`` for ``alpha in ]0, 1/diagl]`` (weighted l1 / l-infinity)."""
    _check_diag_alpha(c, diagl, alpha)
    return 1.0 - alpha * c


def lip_forward_step_l2(c, ell, alpha):
    """Euclidean bound ``sqrt(1 - 2 alpha c + alpha^2 l^2)``."""
    _check_alpha(alpha)
    return math.sqrt(max(0.0, 1.0 - 2.0 * alpha * c + (alpha * ell) ** 2))


def lip_forward_step_prior(c, ell, alpha):
    """Earlier bound ``(1 + alpha c - alpha^2 l^2 / (1 - alpha l))^-1``.

    Returns ``nan`` where it is undefined (``alpha l >= 1`` or a
    nonpositive denominator).
    """
    _check_alpha(alpha)
    if alpha * ell >= 1.0:
        return math.nan
    denom = 1.0 + alpha * c - (alpha * ell) ** 2 / (1.0 - alpha * ell)
    return 1.0 / denom if denom > 0 else math.nan


def lip_resolvent(c, alpha):
    """``1 / (1 + alpha c)``."""
    if c < 0:
        raise ValueError("monotonicity parameter c must be nonnegative")
    _check_alpha(alpha)
    return 1.0 / (1.0 + alpha * c)


def lip_reflected_general(c, ell, alpha):
    _check_c_ell(c, ell)
    _check_alpha(alpha)
    return _general_numerator(c, ell, alpha) / (1.0 + alpha * c)


def lip_reflected_diag(c, diagl, alpha):
    _check_diag_alpha(c, diagl, alpha)
    return (1.0 - alpha * c) / (1.0 + alpha * c)


# --------------------------------------------------------------------------
# step sizes


def _root(f, lo, hi):
    """Root of ``f`` on ``[lo, hi]`` given a sign change."""
    return optimize.brentq(f, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps)


def _grow_bracket(f, start):
    hi = start
    while f(hi) <= 0:
        hi *= 2.0
        if hi > 1e300:
            raise ValueError("failed to bracket root")
    return hi


def _check_strong(c, ell):
    if c <= 0:
        raise ValueError("need c > 0 (strong monotonicity)")
    _check_c_ell(c, ell)


def alpha_opt_general(c, ell):
    """Minimizer of the general forward-step bound.

    Root of ``l e^{alpha l} - c e^{-alpha c} - l``, found by Brent's method.
    """
    _check_strong(c, ell)

    def deriv(a):
        return ell * math.expm1(a * ell) - c * math.exp(-a * c)

    hi = _grow_bracket(deriv, 1.0 / ell)
    return _root(deriv, 0.0, hi)


def alpha_star(c, ell):
    """Unique positive ``alpha`` with ``e^{-alpha c} + e^{alpha l} = 2 + alpha l``.

    The general forward-step bound is below one exactly on ``]0, alpha_star[``.
    """
    _check_strong(c, ell)

    def excess(a):
        return math.expm1(-a * c) + math.expm1(a * ell) - a * ell

    lo = alpha_opt_general(c, ell)
    hi = _grow_bracket(excess, 2.0 * lo)
    return _root(excess, lo, hi)


def alpha_max_reflected_general(c, ell):
    """Right end of the interval on which the general reflected bound is below one."""
    _check_strong(c, ell)

    def excess(a):
        return math.expm1(-a * c) + math.expm1(a * ell) - a * ell - a * c

    hi = _grow_bracket(excess, 1.0 / ell)
    # excess is convex with excess(0) = 0 and slope -2c there
    lo = hi
    while excess(lo) >= 0:
        lo *= 0.5
    return _root(excess, lo, hi)


FIG1_HEADER = ("alpha", "general", "l2", "diag", "prior")


def fig1_curves(c=1.0, ell=2.0, alpha_grid=None, diagl=None):
    """Forward-step Lipschitz bounds on a grid of step sizes.

    Returns an array with columns :data:`FIG1_HEADER`; undefined entries
    are ``nan``. ``diagl`` defaults to ``l`` (the worst case
    ``diagl <= l``), so the diagonal bound is tabulated on ``]0, 1/l]``.
    """
    if alpha_grid is None:
        alpha_grid = np.linspace(0.0, 1.0, 201)[1:]
    alpha_grid = np.asarray(alpha_grid, dtype=float)
    if np.any(alpha_grid <= 0):
        raise ValueError("alpha grid must be positive")
    _check_c_ell(c, ell)
    diagl = ell if diagl is None else diagl
    rows = np.full((alpha_grid.size, 5), np.nan)
    for k, a in enumerate(alpha_grid):
        rows[k, 0] = a
        rows[k, 1] = lip_forward_step_general(c, ell, a)
        rows[k, 2] = lip_forward_step_l2(c, ell, a)
        if a <= (1.0 / diagl) * (1 + 1e-12):
            rows[k, 3] = 1.0 - a * c
        rows[k, 4] = lip_forward_step_prior(c, ell, a)
    return rows
