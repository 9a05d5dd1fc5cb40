"""Weighted norms, induced norms, logarithmic norms and weak pairings.

Three families are supported:

* ``L1``   -- ``||x||_{1,[eta]} = sum_i eta_i |x_i|``
* ``LInf`` -- ``||x||_{inf,[eta]^-1} = max_i |x_i| / eta_i``
* ``L2``   -- the plain Euclidean norm (unweighted only)

All matrices are dense ``(n, n)`` arrays.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Family",
    "NormSpec",
    "vector_norm",
    "induced_matrix_norm",
    "log_norm",
    "weak_pairing",
    "argmax_index_set",
]

# relative tolerance for ties in the l-infinity argmax set
TIE_RTOL = 1e-12


class Family(enum.Enum):
    L1 = "1"
    L2 = "2"
    LINF = "inf"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"1": cls.L1, "l1": cls.L1, "2": cls.L2, "l2": cls.L2,
                   "inf": cls.LINF, "linf": cls.LINF, "infinity": cls.LINF}
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown norm family {value!r}") from None


@dataclass(frozen=True, eq=False)
class NormSpec:
    """A norm family together with its positive weight vector.

    ``weights=None`` means unit weights in whatever dimension the norm is
    applied to.
    """

    family: Family
    weights: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "family", Family.parse(self.family))
        if self.weights is None:
            return
        w = np.array(self.weights, dtype=float).reshape(-1)
        if w.size == 0:
            raise ValueError("weight vector must be nonempty")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ValueError("weights must be finite and strictly positive")
        if self.family is Family.L2 and not np.all(w == 1.0):
            raise ValueError("weighted l2 norms are not supported")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def l1(cls, weights=None):
        return cls(Family.L1, weights)

    @classmethod
    def linf(cls, weights=None):
        return cls(Family.LINF, weights)

    @classmethod
    def l2(cls):
        return cls(Family.L2, None)

    @property
    def is_diagonal_family(self):
        """True for the weighted l1 / l-infinity families."""
        return self.family in (Family.L1, Family.LINF)

    def eta(self, n):
        """Weight vector for dimension ``n``; raises on mismatch."""
        if self.weights is None:
            return np.ones(n)
        if self.weights.size != n:
            raise ValueError(
                f"dimension mismatch: weights have length {self.weights.size}, got {n}")
        return self.weights

    def __repr__(self):
        w = "None" if self.weights is None else np.array2string(self.weights, precision=4)
        return f"NormSpec(family={self.family.name}, weights={w})"


def _vector(x):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"expected a 1-d vector, got shape {x.shape}")
    return x


def _square(A):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    return A


def vector_norm(x, spec):
    x = _vector(x)
    if spec.family is Family.L2:
        return float(np.linalg.norm(x))
    eta = spec.eta(x.size)
    if spec.family is Family.L1:
        return float(np.sum(eta * np.abs(x)))
    if x.size == 0:
        return 0.0
    return float(np.max(np.abs(x) / eta))


def _ratio_matrix(n, spec):
    # R[i, j] = eta_j / eta_i
    eta = spec.eta(n)
    return eta[None, :] / eta[:, None]


def induced_matrix_norm(A, spec):
    """Operator norm of ``A`` induced by ``spec``.

    Weighted column sums for ``L1``, weighted row sums for ``LInf`` and the
    spectral norm for ``L2``.
    """
    A = _square(A)
    n = A.shape[0]
    if spec.family is Family.L2:
        return float(np.linalg.norm(A, 2))
    R = _ratio_matrix(n, spec)
    if spec.family is Family.LINF:
        return float(np.max(np.sum(np.abs(A) * R, axis=1)))
    # L1: column j sums eta_i / eta_j |a_ij|, and R.T[i, j] = eta_i / eta_j
    return float(np.max(np.sum(np.abs(A) * R.T, axis=0)))


def log_norm(A, spec):
    """Logarithmic norm (matrix measure) of ``A``.

    For the weighted families the closed forms are

    ``mu_1(A)   = max_j ( a_jj + sum_{i != j} |a_ij| eta_i / eta_j )``
    ``mu_inf(A) = max_i ( a_ii + sum_{j != i} |a_ij| eta_j / eta_i )``

    and ``mu_2(A) = lambda_max((A + A^T) / 2)``.
    """
    A = _square(A)
    n = A.shape[0]
    if spec.family is Family.L2:
        return float(np.linalg.eigvalsh(0.5 * (A + A.T))[-1])
    R = _ratio_matrix(n, spec)
    off = np.abs(A)
    np.fill_diagonal(off, 0.0)
    d = np.diag(A)
    if spec.family is Family.LINF:
        return float(np.max(d + np.sum(off * R, axis=1)))
    return float(np.max(d + np.sum(off * R.T, axis=0)))


def argmax_index_set(v, rtol=TIE_RTOL):
    """Indices ``i`` with ``|v_i| = ||v||_inf`` up to a relative tie tolerance."""
    a = np.abs(_vector(v))
    if a.size == 0:
        return np.array([], dtype=int)
    top = a.max()
    return np.flatnonzero(a >= top - rtol * top)


def weak_pairing(x, y, spec):
    """Compatible weak pairing ``[[x, y]]`` for the given norm.

    ``L1``:   ``||y||_{1,[eta]} * sign(y)^T [eta] x``
    ``LInf``: ``max_{i in I_inf([eta]^-1 y)} y_i x_i / eta_i^2``
    ``L2``:   the inner product.
    """
    x = _vector(x)
    y = _vector(y)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    if spec.family is Family.L2:
        return float(x @ y)
    eta = spec.eta(x.size)
    if spec.family is Family.L1:
        return float(np.sum(eta * np.abs(y)) * np.sum(np.sign(y) * eta * x))
    idx = argmax_index_set(y / eta)
    if idx.size == 0:
        return 0.0
    return float(np.max(y[idx] * x[idx] / eta[idx] ** 2))
