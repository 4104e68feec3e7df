from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from offmoo.core import ContractError

GAUSSIAN = "gaussian"
QUANTILE = "quantile"


class ModelFitError(RuntimeError):
    """A surrogate could not be fitted (e.g. Gram matrix not positive definite)."""


@dataclass(frozen=True)
class UncertainPrediction:
    """Central estimate with a non-negative spread, for one objective.

    ``center``/``spread`` are scalars or equally shaped arrays. For the
    ``gaussian`` kind they are (mu, sigma); for ``quantile`` they are the
    median and the gap ``q_upper - q_median``.
    """

    center: np.ndarray
    spread: np.ndarray
    kind: str

    def __post_init__(self):
        if self.kind not in (GAUSSIAN, QUANTILE):
            raise ContractError(f"unknown prediction kind {self.kind!r}")
        spread = np.asarray(self.spread, dtype=float)
        if np.any(spread < 0):
            raise ContractError("prediction spread must be non-negative")

    @property
    def upper(self) -> np.ndarray:
        """Upper quantile for quantile-kind predictions."""
        return np.asarray(self.center) + np.asarray(self.spread)


@dataclass(frozen=True)
class TrainConfig:
    """Training settings shared by the neural surrogates.

    ``epochs=None`` selects the per-kind default (2000 for qr/mcd, 3000 ELBO
    steps for bnn).
    """

    epochs: int | None = None
    learning_rate: float = 1e-3
    hidden: int = 32
    dropout: float = 0.1
    tau: float = 0.9
    mc_samples: int = 100
    nugget: float = 1e-3
    n_restarts: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ContractError("learning rate must be positive")
        if self.epochs is not None and self.epochs < 1:
            raise ContractError("epochs must be positive")


@dataclass(frozen=True)
class Scaler:
    """Inputs to ``[0, 1]`` via the training min/max, targets standardized."""

    x_min: np.ndarray
    x_range: np.ndarray
    y_mean: float
    y_std: float

    @classmethod
    def fit(cls, X: np.ndarray, y: np.ndarray) -> Scaler:
        x_min = X.min(axis=0)
        x_range = X.max(axis=0) - x_min
        x_range = np.where(x_range > 0, x_range, 1.0)
        # a constant target has no scale; predictions collapse onto the constant
        return cls(x_min, x_range, float(np.mean(y)), float(np.std(y)))

    def x(self, X) -> np.ndarray:
        return (np.atleast_2d(np.asarray(X, dtype=float)) - self.x_min) / self.x_range

    def y(self, y) -> np.ndarray:
        return (np.asarray(y, dtype=float) - self.y_mean) / self._y_div

    @property
    def _y_div(self) -> float:
        return self.y_std if self.y_std > 0 else 1.0

    def to_dict(self) -> dict:
        return {
            "x_min": self.x_min,
            "x_range": self.x_range,
            "y_mean": self.y_mean,
            "y_std": self.y_std,
        }

    @classmethod
    def from_dict(cls, d: dict) -> Scaler:
        return cls(
            np.asarray(d["x_min"], dtype=float),
            np.asarray(d["x_range"], dtype=float),
            float(d["y_mean"]),
            float(d["y_std"]),
        )


def prediction_rng(seed, objective: int) -> np.random.Generator:
    """Generator for one prediction call; ``seed`` is an int or tuple of ints."""
    entropy = list(seed) if isinstance(seed, (tuple, list)) else [seed]
    return np.random.default_rng([int(s) for s in entropy] + [objective])
