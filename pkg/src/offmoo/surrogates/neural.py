"""Neural surrogates: two-head quantile MLP, MC-dropout MLP and a mean-field BNN."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from offmoo.surrogates.base import GAUSSIAN, QUANTILE, Scaler
from offmoo.surrogates.nn import (
    Adam,
    Params,
    TrainingError,
    dropout_mask,
    gaussian_nll,
    init_mlp,
    inv_softplus,
    kl_diag_gaussian,
    mlp_backward,
    mlp_forward,
    mlp_train_step,
    mse_loss,
    quantile_pair_loss,
    sigmoid,
    softplus,
)

DEFAULT_EPOCHS = {"qr": 2000, "mcd": 2000, "bnn": 3000}


@dataclass
class QuantileModel:
    """MLP trunk with a median head and a non-negative gap head.

    ``upper = median + softplus(gap)`` so the two quantiles can never cross.
    """

    scaler: Scaler
    params: Params
    tau_low: float = 0.5
    tau_high: float = 0.9

    kind = QUANTILE

    @classmethod
    def fit(cls, X, y, epochs=2000, lr=1e-3, hidden=32, tau=0.9, seed=0):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        scaler = Scaler.fit(X, y)
        Xn, yn = scaler.x(X), scaler.y(y)
        rng = np.random.default_rng(seed)
        params = init_mlp(X.shape[1], hidden, 2, rng)
        opt = Adam(lr)
        loss = quantile_pair_loss(0.5, tau)
        for _ in range(epochs):
            mlp_train_step(params, Xn, yn, loss, opt)
        return cls(scaler, params, 0.5, tau)

    def predict(self, X, rng=None):
        out, _ = mlp_forward(self.params, self.scaler.x(X))
        median = out[:, 0] * self.scaler.y_std + self.scaler.y_mean
        gap = softplus(out[:, 1]) * self.scaler.y_std
        return median, gap

    def to_dict(self) -> dict:
        return {
            "scaler": self.scaler.to_dict(),
            "params": self.params,
            "tau_low": self.tau_low,
            "tau_high": self.tau_high,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            Scaler.from_dict(d["scaler"]),
            _params_from(d["params"]),
            float(d["tau_low"]),
            float(d["tau_high"]),
        )


@dataclass
class DropoutModel:
    """MLP trained with dropout on the hidden layer; dropout stays on at prediction."""

    scaler: Scaler
    params: Params
    rate: float = 0.1
    n_passes: int = 100

    kind = GAUSSIAN

    @classmethod
    def fit(cls, X, y, epochs=2000, lr=1e-3, hidden=32, rate=0.1, n_passes=100, seed=0):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        scaler = Scaler.fit(X, y)
        Xn, yn = scaler.x(X), scaler.y(y)
        rng = np.random.default_rng(seed)
        params = init_mlp(X.shape[1], hidden, 1, rng)
        opt = Adam(lr)
        for _ in range(epochs):
            mask = dropout_mask((len(Xn), hidden), rate, rng)
            mlp_train_step(params, Xn, yn, mse_loss, opt, mask)
        return cls(scaler, params, rate, n_passes)

    def sample_passes(self, X, rng: np.random.Generator) -> np.ndarray:
        """``(T, n)`` outputs of ``T`` stochastic passes, in original units.

        Pass ``t`` uses one dropout mask for every row, so a row's prediction
        does not depend on what else is in the batch.
        """
        Xn = self.scaler.x(X)
        hidden = self.params["W1"].shape[1]
        h = np.maximum(Xn @ self.params["W1"] + self.params["b1"], 0.0)
        if self.rate <= 0:
            masks = np.ones((1, hidden))
        else:
            masks = dropout_mask((self.n_passes, hidden), self.rate, rng)
        out = np.einsum("nh,th,h->tn", h, masks, self.params["W2"][:, 0]) + self.params["b2"][0]
        return out * self.scaler.y_std + self.scaler.y_mean

    def predict(self, X, rng: np.random.Generator):
        samples = self.sample_passes(X, rng)
        return _moments(samples)

    def to_dict(self) -> dict:
        return {
            "scaler": self.scaler.to_dict(),
            "params": self.params,
            "rate": self.rate,
            "n_passes": self.n_passes,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            Scaler.from_dict(d["scaler"]),
            _params_from(d["params"]),
            float(d["rate"]),
            int(d["n_passes"]),
        )


def _moments(samples: np.ndarray):
    """Mean and ``sqrt(E[y^2] - E[y]^2)`` over axis 0."""
    mean = np.mean(samples, axis=0)
    var = np.mean(samples**2, axis=0) - mean**2
    # identical samples must give exactly zero, which the formula only does up to rounding
    var = np.where(np.ptp(samples, axis=0) == 0, 0.0, np.maximum(var, 0.0))
    return mean, np.sqrt(var)


# Bayesian neural network -----------------------------------------------------

_WEIGHTS = ("W1", "b1", "W2", "b2")


@dataclass
class BayesianState:
    """Variational parameters: ``w ~ N(mu, softplus(rho)^2)`` per weight, plus log noise."""

    mu: Params
    rho: Params
    log_noise: float

    @classmethod
    def init(cls, n_in, hidden, rng, init_scale=0.1):
        mu = init_mlp(n_in, hidden, 1, rng)
        rho = {k: np.full_like(v, inv_softplus(init_scale)) for k, v in mu.items()}
        return cls(mu, rho, 0.0)

    def sigma(self) -> Params:
        return {k: softplus(v) for k, v in self.rho.items()}

    def kl(self, prior_sigma: float = 1.0) -> float:
        sig = self.sigma()
        return sum(kl_diag_gaussian(self.mu[k], sig[k], 0.0, prior_sigma) for k in _WEIGHTS)

    def sample(self, eps: Params) -> Params:
        sig = self.sigma()
        return {k: self.mu[k] + sig[k] * eps[k] for k in _WEIGHTS}

    def draw_eps(self, rng: np.random.Generator) -> Params:
        return {k: rng.standard_normal(self.mu[k].shape) for k in _WEIGHTS}


def elbo_and_grad(state: BayesianState, X, y, eps: Params, prior_sigma: float = 1.0):
    """Single-sample reparameterized ELBO and its gradient.

    ``ELBO = log p(y | X, w) - KL(q || prior)`` with ``w = mu + sigma * eps``.
    Gradients are returned for the *negative* ELBO, keyed ``mu:W1``,
    ``rho:W1``, ... and ``log_noise``.
    """
    w = state.sample(eps)
    out, cache = mlp_forward(w, X)
    nll, dout, dlog = gaussian_nll(out, y, state.log_noise)
    kl = state.kl(prior_sigma)
    gw = mlp_backward(w, cache, dout)
    sig = state.sigma()
    grads = {}
    for k in _WEIGHTS:
        dsig = sig[k] / prior_sigma**2 - 1.0 / sig[k]
        grads[f"mu:{k}"] = gw[k] + state.mu[k] / prior_sigma**2
        grads[f"rho:{k}"] = (gw[k] * eps[k] + dsig) * sigmoid(state.rho[k])
    grads["log_noise"] = np.array(dlog)
    return -(nll + kl), grads


def elbo_step(state: BayesianState, X, y, optimizer: Adam, rng, prior_sigma: float = 1.0) -> float:
    """One Adam ascent step on the ELBO. Returns the ELBO estimate before the update."""
    elbo, grads = elbo_and_grad(state, X, y, state.draw_eps(rng), prior_sigma)
    if not np.isfinite(elbo):
        raise TrainingError(f"non-finite ELBO at step {optimizer.t + 1}")
    flat = _flat_view(state)
    optimizer.step(flat, grads)
    state.log_noise = float(flat["log_noise"])
    return elbo


def _flat_view(state: BayesianState) -> dict:
    # Adam updates these arrays in place, so mu/rho entries alias the state
    flat = {f"mu:{k}": state.mu[k] for k in _WEIGHTS}
    flat.update({f"rho:{k}": state.rho[k] for k in _WEIGHTS})
    flat["log_noise"] = np.array(state.log_noise)
    return flat


@dataclass
class BayesianModel:
    """One-hidden-layer BNN with a diagonal Gaussian posterior and N(0, 1) prior."""

    scaler: Scaler
    state: BayesianState
    n_samples: int = 100

    kind = GAUSSIAN

    @classmethod
    def fit(cls, X, y, epochs=3000, lr=1e-3, hidden=32, n_samples=100, seed=0, trace=None):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        scaler = Scaler.fit(X, y)
        Xn, yn = scaler.x(X), scaler.y(y)
        rng = np.random.default_rng(seed)
        state = BayesianState.init(X.shape[1], hidden, rng)
        opt = Adam(lr)
        for _ in range(epochs):
            value = elbo_step(state, Xn, yn, opt, rng)
            if trace is not None:
                trace.append(value)
        return cls(scaler, state, n_samples)

    def sample_outputs(self, X, rng: np.random.Generator) -> np.ndarray:
        """``(S, n)`` network outputs under ``S`` posterior weight draws, original units."""
        Xn = self.scaler.x(X)
        mu, sig = self.state.mu, self.state.sigma()
        S = self.n_samples
        W1 = mu["W1"] + sig["W1"] * rng.standard_normal((S, *mu["W1"].shape))
        b1 = mu["b1"] + sig["b1"] * rng.standard_normal((S, *mu["b1"].shape))
        W2 = mu["W2"] + sig["W2"] * rng.standard_normal((S, *mu["W2"].shape))
        b2 = mu["b2"] + sig["b2"] * rng.standard_normal((S, *mu["b2"].shape))
        h = np.maximum(np.einsum("nd,sdh->snh", Xn, W1) + b1[:, None, :], 0.0)
        out = np.einsum("snh,sh->sn", h, W2[:, :, 0]) + b2
        return out * self.scaler.y_std + self.scaler.y_mean

    def predict(self, X, rng: np.random.Generator):
        samples = self.sample_outputs(X, rng)
        return np.mean(samples, axis=0), np.std(samples, axis=0)

    def to_dict(self) -> dict:
        return {
            "scaler": self.scaler.to_dict(),
            "mu": self.state.mu,
            "rho": self.state.rho,
            "log_noise": self.state.log_noise,
            "n_samples": self.n_samples,
        }

    @classmethod
    def from_dict(cls, d):
        state = BayesianState(_params_from(d["mu"]), _params_from(d["rho"]), float(d["log_noise"]))
        return cls(Scaler.from_dict(d["scaler"]), state, int(d["n_samples"]))


def _params_from(d) -> Params:
    return {k: np.asarray(v, dtype=float) for k, v in d.items()}
