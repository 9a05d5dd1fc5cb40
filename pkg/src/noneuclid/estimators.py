"""scikit-learn style wrappers around the equilibrium solvers and the projector."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .projection import project_matrix
from .rnn import METHODS, RnnModel, equilibrium, lipschitz_bound, theoretical_factor
from .solvers import SolveConfig

__all__ = ["ImplicitRnn", "LogNormProjector"]


class ImplicitRnn(TransformerMixin, BaseEstimator):
    """Map inputs ``u`` to equilibria ``x = Phi(A x + B u + b)``.

    Parameters
    ----------
    A : array of shape (n, n)
        Recurrent weights, with ``mu_{inf,[eta]^-1}(A) < 1``.
    B : array of shape (n, m)
        Input weights.
    b : array of shape (n,), optional
        Bias, zero by default.
    activation : str
        Activation tag, ``"relu"`` or ``"leaky_relu:a"`` for instance.
    eta : array of shape (n,), optional
        Positive norm weights.
    method : {"forward_step", "fb", "pr"}
    alpha : float, optional
        Step size; defaults to the largest certified one.
    tol, max_iter : float, int
        Stopping rule of each equilibrium solve.

    Attributes
    ----------
    model_ : RnnModel
    gamma_ : float
        Weighted l-infinity log norm of ``A``.
    alpha_ : float
    factor_ : float
        Certified per-iteration contraction factor.
    lipschitz_bound_ : float
        Certified l-infinity Lipschitz constant of ``u -> x``.
    n_features_in_ : int
    n_iter_ : ndarray of shape (n_samples,)
        Iterations used per row in the last ``transform``.
    """

    def __init__(self, A=None, B=None, b=None, activation="relu", eta=None,
                 method="fb", alpha=None, tol=1e-10, max_iter=10_000):
        self.A = A
        self.B = B
        self.b = b
        self.activation = activation
        self.eta = eta
        self.method = method
        self.alpha = alpha
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X=None, y=None):
        """Validate the weights and compute the certificates. ``X`` is ignored."""
        if self.A is None or self.B is None:
            raise ValueError("A and B must be given")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        A = check_array(self.A, dtype=float)
        B = check_array(self.B, dtype=float)
        model = RnnModel(A, B, self.b, self.activation, self.eta)
        if not model.gamma < 1:
            raise ValueError(f"need mu(A) < 1 for a unique equilibrium, got {model.gamma}")
        amax = model.alpha_max_forward_step if self.method == "forward_step" else model.alpha_max
        alpha = amax if self.alpha is None else float(self.alpha)
        if not 0 < alpha <= amax * (1 + 1e-12):
            raise ValueError(f"alpha={alpha} outside the certified range ]0, {amax}]")
        self.model_ = model
        self.gamma_ = model.gamma
        self.alpha_ = alpha
        self.factor_ = theoretical_factor(model, self.method, alpha)
        self.lipschitz_bound_ = lipschitz_bound(model)
        self.n_features_in_ = model.m
        return self

    def transform(self, X):
        """Equilibrium for each row of ``X``; raises if a solve does not converge."""
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        config = SolveConfig(alpha=self.alpha_, tol=self.tol, max_iter=self.max_iter,
                             record_trace=False)
        out = np.empty((X.shape[0], self.model_.n))
        self.n_iter_ = np.empty(X.shape[0], dtype=int)
        for k, u in enumerate(X):
            res = equilibrium(self.model_, u, self.method, config)
            if not res.converged:
                raise RuntimeError(f"row {k}: {res.message}")
            out[k] = res.x_star
            self.n_iter_[k] = res.iterations
        return out


class LogNormProjector(TransformerMixin, BaseEstimator):
    """Frobenius projection of square matrices onto ``{mu_{inf,[eta]^-1}(A) <= gamma}``.

    ``transform`` accepts a single ``(n, n)`` matrix or a stack ``(k, n, n)``.
    Fitting only records the dimension when ``eta`` is given; the
    projection has no learned state.
    """

    def __init__(self, gamma=0.0, eta=None):
        self.gamma = gamma
        self.eta = eta

    def fit(self, X=None, y=None):
        self.eta_ = None if self.eta is None else np.asarray(self.eta, dtype=float)
        if self.eta_ is not None and np.any(self.eta_ <= 0):
            raise ValueError("eta must be strictly positive")
        return self

    def transform(self, X):
        check_is_fitted(self, "eta_")
        X = np.asarray(X, dtype=float)
        if X.ndim == 2:
            return project_matrix(X, self.gamma, self.eta_)
        if X.ndim == 3:
            return np.stack([project_matrix(M, self.gamma, self.eta_) for M in X])
        raise ValueError(f"expected a matrix or a stack of matrices, got shape {X.shape}")
