"""Kriging (Gaussian process regression) with a constant-times-RBF kernel.

Inputs are scaled to the unit cube and targets standardized; the GP has zero
mean in the standardized space, which is a constant trend in the original one.
A nugget ``alpha`` is added to the Gram diagonal. Kernel hyperparameters
(length-scale and signal variance) maximize the log marginal likelihood from
several bounded starts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.optimize import minimize

from offmoo.core import ContractError
from offmoo.surrogates.base import GAUSSIAN, ModelFitError, Scaler

LOG_LENGTH_BOUNDS = (np.log(0.05), np.log(5.0))
LOG_SIGNAL_BOUNDS = (np.log(0.1), np.log(10.0))


def rbf_kernel(x, x2, length_scale: float, signal_var: float = 1.0):
    """``signal_var * exp(-|x - x2|^2 / (2 length_scale^2))`` for vectors or row batches."""
    if length_scale <= 0 or signal_var <= 0:
        raise ContractError("length scale and signal variance must be positive")
    A = np.atleast_2d(np.asarray(x, dtype=float))
    B = np.atleast_2d(np.asarray(x2, dtype=float))
    if A.shape[1] != B.shape[1]:
        raise ContractError("kernel inputs differ in dimension")
    K = signal_var * np.exp(-0.5 * _sqdist(A, B) / length_scale**2)
    if np.ndim(x) == 1 and np.ndim(x2) == 1:
        return float(K[0, 0])
    return K


def _sqdist(A, B):
    # explicit differences; the |a|^2 + |b|^2 - 2ab expansion loses digits near 0
    diff = A[:, None, :] - B[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _pairwise_sqdist(A):
    return _sqdist(A, A)


def log_marginal_likelihood(theta, D2, y, nugget):
    """Log marginal likelihood and gradient w.r.t. ``(log l, log s2)``."""
    log_l, log_s2 = theta
    l2, s2 = np.exp(2 * log_l), np.exp(log_s2)
    Kc = s2 * np.exp(-0.5 * D2 / l2)
    n = len(y)
    try:
        L = cholesky(Kc + nugget * np.eye(n), lower=True)
    except np.linalg.LinAlgError:
        return -np.inf, np.zeros(2)
    a = cho_solve((L, True), y)
    lml = -0.5 * y @ a - np.sum(np.log(np.diag(L))) - 0.5 * n * np.log(2 * np.pi)
    inner = np.outer(a, a) - cho_solve((L, True), np.eye(n))
    dK_dlogl = Kc * D2 / l2
    grad = 0.5 * np.array([np.sum(inner * dK_dlogl), np.sum(inner * Kc)])
    return lml, grad


@dataclass
class KrigingModel:
    """A fitted GP for one objective."""

    scaler: Scaler
    X: np.ndarray  # normalized training inputs
    y: np.ndarray  # standardized training targets
    length_scale: float
    signal_var: float
    nugget: float
    chol: np.ndarray
    weights: np.ndarray

    kind = GAUSSIAN

    @classmethod
    def fit(cls, X, y, nugget: float = 1e-3, n_restarts: int = 8, seed: int = 0):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        scaler = Scaler.fit(X, y)
        Xn, yn = scaler.x(X), scaler.y(y)
        D2 = _pairwise_sqdist(Xn)
        length_scale, signal_var = _search_hyperparameters(D2, yn, nugget, n_restarts, seed)
        return cls.from_hyperparameters(scaler, Xn, yn, length_scale, signal_var, nugget)

    @classmethod
    def from_hyperparameters(cls, scaler, Xn, yn, length_scale, signal_var, nugget):
        n = len(yn)
        K = signal_var * np.exp(-0.5 * _pairwise_sqdist(Xn) / length_scale**2)
        jitter = nugget
        for _ in range(6):
            try:
                L = cholesky(K + jitter * np.eye(n), lower=True)
                break
            except np.linalg.LinAlgError:
                jitter *= 10
        else:
            raise ModelFitError(
                f"Gram matrix not positive definite even with nugget {jitter:g}"
            )
        weights = cho_solve((L, True), yn)
        return cls(scaler, Xn, yn, float(length_scale), float(signal_var), jitter, L, weights)

    def predict_normalized(self, Xn):
        Ks = rbf_kernel(Xn, self.X, self.length_scale, self.signal_var)
        mu = Ks @ self.weights
        v = solve_triangular(self.chol, Ks.T, lower=True)
        var = np.maximum(self.signal_var - np.sum(v**2, axis=0), 0.0)
        return mu, np.sqrt(var)

    def predict(self, X, rng=None):
        """Posterior mean and standard deviation in original units."""
        mu, sd = self.predict_normalized(self.scaler.x(X))
        return mu * self.scaler.y_std + self.scaler.y_mean, sd * self.scaler.y_std

    def to_dict(self) -> dict:
        return {
            "scaler": self.scaler.to_dict(),
            "X": self.X,
            "y": self.y,
            "length_scale": self.length_scale,
            "signal_var": self.signal_var,
            "nugget": self.nugget,
            "chol": self.chol,
            "weights": self.weights,
        }

    @classmethod
    def from_dict(cls, d: dict) -> KrigingModel:
        return cls(
            Scaler.from_dict(d["scaler"]),
            np.asarray(d["X"], dtype=float),
            np.asarray(d["y"], dtype=float),
            float(d["length_scale"]),
            float(d["signal_var"]),
            float(d["nugget"]),
            np.asarray(d["chol"], dtype=float),
            np.asarray(d["weights"], dtype=float),
        )


def _search_hyperparameters(D2, y, nugget, n_restarts, seed):
    bounds = [LOG_LENGTH_BOUNDS, LOG_SIGNAL_BOUNDS]
    rng = np.random.default_rng(seed)
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    # first start at log(1), log(1) like a default-initialized kernel
    starts = [np.zeros(2)] + [lo + rng.random(2) * (hi - lo) for _ in range(n_restarts - 1)]

    def objective(theta):
        lml, grad = log_marginal_likelihood(theta, D2, y, nugget)
        if not np.isfinite(lml):
            return 1e25, np.zeros(2)
        return -lml, -grad

    best_theta, best_val = None, np.inf
    for x0 in starts:
        res = minimize(
            objective,
            np.clip(x0, lo, hi),
            jac=True,
            method="L-BFGS-B",
            bounds=bounds,
            options={"ftol": 1e-12, "gtol": 1e-8, "maxiter": 200},
        )
        if res.fun < best_val - 1e-4 or best_theta is None:
            best_theta, best_val = res.x, res.fun
    if best_val >= 1e25:
        raise ModelFitError("log marginal likelihood is not finite at any start")
    return float(np.exp(best_theta[0])), float(np.exp(best_theta[1]))
