"""Minimal numpy neural-network substrate: one-hidden-layer MLP, losses, Adam.

Gradients are written out by hand. The networks involved are tiny (tens of
inputs, 32 hidden units, ~100 training rows), so full-batch numpy training is
fast enough and keeps every step deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from offmoo.core import ContractError

Params = dict[str, np.ndarray]


class TrainingError(RuntimeError):
    """Raised when training produces a non-finite loss or gradient."""


def relu(x):
    return np.maximum(x, 0.0)


def softplus(x):
    return np.logaddexp(0.0, x)


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def inv_softplus(y):
    return np.log(np.expm1(y))


def init_mlp(n_in: int, n_hidden: int, n_out: int, rng: np.random.Generator) -> Params:
    """Uniform fan-in initialization, U(-1/sqrt(fan_in), 1/sqrt(fan_in))."""
    a1 = 1.0 / np.sqrt(n_in)
    a2 = 1.0 / np.sqrt(n_hidden)
    return {
        "W1": rng.uniform(-a1, a1, (n_in, n_hidden)),
        "b1": rng.uniform(-a1, a1, n_hidden),
        "W2": rng.uniform(-a2, a2, (n_hidden, n_out)),
        "b2": rng.uniform(-a2, a2, n_out),
    }


def mlp_forward(params: Params, X: np.ndarray, mask: np.ndarray | None = None):
    """Forward pass. ``mask`` multiplies the hidden activations (inverted dropout).

    Returns the output ``(n, n_out)`` and a cache for :func:`mlp_backward`.
    """
    pre = X @ params["W1"] + params["b1"]
    h = relu(pre)
    if mask is not None:
        h = h * mask
    out = h @ params["W2"] + params["b2"]
    return out, (X, pre, h, mask)


def mlp_backward(params: Params, cache, dout: np.ndarray) -> Params:
    X, pre, h, mask = cache
    dh = dout @ params["W2"].T
    if mask is not None:
        dh = dh * mask
    dpre = dh * (pre > 0)
    return {
        "W1": X.T @ dpre,
        "b1": dpre.sum(axis=0),
        "W2": h.T @ dout,
        "b2": dout.sum(axis=0),
    }


def dropout_mask(shape, rate: float, rng: np.random.Generator) -> np.ndarray | None:
    if rate <= 0:
        return None
    keep = rng.random(shape) >= rate
    return keep / (1.0 - rate)


def pinball_loss(u, tau: float):
    """Check function ``rho_tau(u) = u * (tau - 1[u < 0])``; always non-negative."""
    if not 0.0 < tau < 1.0:
        raise ContractError(f"quantile level must lie in (0, 1), got {tau}")
    u = np.asarray(u, dtype=float)
    return u * (tau - (u < 0))


def _pinball_grad(u, tau):
    # d rho / d u
    return tau - (u < 0)


# A loss maps (network output, targets) -> (scalar loss, d loss / d output).
Loss = Callable[[np.ndarray, np.ndarray], tuple[float, np.ndarray]]


def mse_loss(out: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    r = out[:, 0] - y
    n = len(y)
    dout = np.zeros_like(out)
    dout[:, 0] = 2.0 * r / n
    return float(np.mean(r**2)), dout


def quantile_pair_loss(tau_low: float = 0.5, tau_high: float = 0.9) -> Loss:
    """Two-head pinball loss: column 0 is the ``tau_low`` quantile ``m``, column 1
    a raw gap ``a`` with ``upper = m + softplus(a)`` fitted at ``tau_high``."""

    def loss(out: np.ndarray, y: np.ndarray):
        n = len(y)
        m, a = out[:, 0], out[:, 1]
        upper = m + softplus(a)
        u1, u2 = y - m, y - upper
        value = np.mean(pinball_loss(u1, tau_low)) + np.mean(pinball_loss(u2, tau_high))
        g1 = _pinball_grad(u1, tau_low)
        g2 = _pinball_grad(u2, tau_high)
        dout = np.empty_like(out)
        dout[:, 0] = -(g1 + g2) / n
        dout[:, 1] = -g2 * sigmoid(a) / n
        return float(value), dout

    return loss


@dataclass
class Adam:
    """Adam with the usual moment parameters; updates parameter arrays in place."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: Params = field(default_factory=dict)
    v: Params = field(default_factory=dict)

    def __post_init__(self):
        if self.lr < 0:
            raise ContractError("learning rate must be non-negative")

    def step(self, params: Params, grads: Params) -> None:
        for name, g in grads.items():
            if not np.all(np.isfinite(g)):
                raise TrainingError(f"non-finite gradient for {name!r} at step {self.t + 1}")
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for name, g in grads.items():
            m = self.m.setdefault(name, np.zeros_like(g))
            v = self.v.setdefault(name, np.zeros_like(g))
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            params[name] -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def mlp_train_step(
    params: Params,
    X: np.ndarray,
    y: np.ndarray,
    loss: Loss,
    optimizer: Adam,
    mask: np.ndarray | None = None,
) -> float:
    """One full-batch gradient step. Returns the loss before the update."""
    out, cache = mlp_forward(params, X, mask)
    value, dout = loss(out, y)
    if not np.isfinite(value):
        raise TrainingError(f"non-finite loss at step {optimizer.t + 1}: {value}")
    optimizer.step(params, mlp_backward(params, cache, dout))
    return value


# Bayesian layer maths ------------------------------------------------------


def kl_diag_gaussian(mu, sigma, prior_mu: float = 0.0, prior_sigma: float = 1.0) -> float:
    """``KL(N(mu, sigma^2) || N(prior_mu, prior_sigma^2))`` summed over entries."""
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    return float(
        np.sum(
            np.log(prior_sigma / sigma)
            + (sigma**2 + (mu - prior_mu) ** 2) / (2 * prior_sigma**2)
            - 0.5
        )
    )


def gaussian_nll(out: np.ndarray, y: np.ndarray, log_noise: float):
    """Negative log-likelihood summed over rows, with gradients w.r.t. output and log noise."""
    r = out[:, 0] - y
    var = np.exp(2 * log_noise)
    n = len(y)
    value = 0.5 * n * np.log(2 * np.pi) + n * log_noise + 0.5 * np.sum(r**2) / var
    dout = np.zeros_like(out)
    dout[:, 0] = r / var
    dlog = n - np.sum(r**2) / var
    return float(value), dout, float(dlog)
