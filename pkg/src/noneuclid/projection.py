"""Frobenius projection onto the log-norm ball ``{A : mu_{inf,[eta]^-1}(A) <= gamma}``.

The weighted l-infinity log norm is a maximum of one function per row,

    mu(A) = max_i ( a_ii + sum_{j != i} (eta_j / eta_i) |a_ij| ),

so the ball is a product of per-row sets ``{a : a_i + sum_j w_j |a_j| <= gamma}``.
The squared Frobenius distance is a sum over rows as well, hence the
projection of a matrix is the row-by-row projection.

For one row ``r`` the KKT conditions with multiplier ``lam >= 0`` give

    a_i = r_i - lam,     a_j = sign(r_j) max(|r_j| - lam w_j, 0),

and ``lam`` is the root of the strictly decreasing piecewise-linear
constraint residual ``h(lam) = a_i(lam) + sum_j w_j |a_j(lam)| - gamma``.
Its breakpoints are ``|r_j| / w_j``; a sorted scan finds the active
piece in ``O(n log n)``.
"""

from __future__ import annotations

import numpy as np
from scipy import optimize

from .norms import NormSpec, log_norm

__all__ = ["LogNormBall", "project_row", "project_matrix", "row_residual"]


class LogNormBall:
    """The set ``{A : mu_{inf,[eta]^-1}(A) <= gamma}``."""

    def __init__(self, gamma, weights=None):
        self.gamma = float(gamma)
        self.spec = NormSpec.linf(weights)

    def contains(self, A, atol=1e-9):
        return log_norm(A, self.spec) <= self.gamma + atol

    def project(self, A):
        return project_matrix(A, self.gamma, self.spec.weights)


def _row_weights(n, i, weights):
    eta = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    if eta.size != n:
        raise ValueError(f"dimension mismatch: {eta.size} weights for a row of length {n}")
    if np.any(eta <= 0):
        raise ValueError("weights must be strictly positive")
    w = eta / eta[i]
    return w


def row_residual(a, i, gamma, weights=None):
    """``a_i + sum_{j != i} (eta_j / eta_i) |a_j| - gamma``."""
    a = np.asarray(a, dtype=float)
    w = _row_weights(a.size, i, weights)
    off = np.abs(a) * w
    off[i] = 0.0
    return float(a[i] + off.sum() - gamma)


def _lam_root(r, i, w, gamma, hi):
    mask = np.ones(r.size, dtype=bool)
    mask[i] = False

    def h(lam):
        return r[i] - lam + np.sum(w[mask] * np.maximum(np.abs(r[mask]) - lam * w[mask], 0.0)) - gamma

    # h is decreasing with h(0) > 0 >= h(hi)
    return optimize.brentq(h, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps)


def project_row(row, i, gamma, weights=None):
    """Euclidean projection of ``row`` onto ``{a : a_i + sum_{j != i} w_j |a_j| <= gamma}``.

    ``w_j = eta_j / eta_i``; the diagonal entry is ``row[i]``.
    """
    r = np.asarray(row, dtype=float).reshape(-1)
    n = r.size
    if not 0 <= i < n:
        raise ValueError(f"diagonal index {i} out of range for a row of length {n}")
    w = _row_weights(n, i, weights)
    if row_residual(r, i, gamma, weights) <= 0:
        return r.copy()

    mask = np.ones(n, dtype=bool)
    mask[i] = False
    absr = np.abs(r[mask])
    wo = w[mask]
    bp = absr / wo
    order = np.argsort(bp)
    bp, absr, wo = bp[order], absr[order], wo[order]
    # suffix sums over coordinates still nonzero on a piece
    s_wr = np.concatenate([np.cumsum((wo * absr)[::-1])[::-1], [0.0]])
    s_w2 = np.concatenate([np.cumsum((wo * wo)[::-1])[::-1], [0.0]])
    base = r[i] - gamma
    lam = None
    lower = 0.0
    for k in range(bp.size + 1):
        # on [lower, bp[k]] the coordinates k.. are active
        cand = (base + s_wr[k]) / (1.0 + s_w2[k])
        upper = bp[k] if k < bp.size else np.inf
        if lower - 1e-15 * max(1.0, lower) <= cand <= upper:
            lam = cand
            break
        lower = upper
    if lam is None or not np.isfinite(lam):
        lam = _lam_root(r, i, w, gamma, hi=max(base, 0.0) + float(np.max(bp, initial=0.0)) + 1.0)
    lam = max(lam, 0.0)

    out = np.sign(r) * np.maximum(np.abs(r) - lam * w, 0.0)
    out[i] = r[i] - lam
    return out


def project_matrix(A, gamma, weights=None):
    """Frobenius projection of ``A`` onto ``{mu_{inf,[eta]^-1}(A) <= gamma}``, row by row."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if weights is not None and np.asarray(weights).size != A.shape[0]:
        raise ValueError("dimension mismatch between matrix and weights")
    return np.vstack([project_row(A[i], i, gamma, weights) for i in range(A.shape[0])])
