"""Uncertainty-quantifying surrogates, one model per objective."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from offmoo.core import ContractError, OfflineDataset
from offmoo.surrogates.base import (
    GAUSSIAN,
    QUANTILE,
    ModelFitError,
    TrainConfig,
    UncertainPrediction,
    prediction_rng,
)
from offmoo.surrogates.kriging import KrigingModel, rbf_kernel
from offmoo.surrogates.neural import DEFAULT_EPOCHS, BayesianModel, DropoutModel, QuantileModel
from offmoo.surrogates.nn import TrainingError, pinball_loss

SURROGATE_KINDS = ("kriging", "qr", "mcd", "bnn")
FORMAT_VERSION = "offmoo-surrogates/1"

_MODEL_CLASSES = {
    "kriging": KrigingModel,
    "qr": QuantileModel,
    "mcd": DropoutModel,
    "bnn": BayesianModel,
}

__all__ = [
    "GAUSSIAN",
    "QUANTILE",
    "SURROGATE_KINDS",
    "ModelFitError",
    "SurrogateSet",
    "TrainConfig",
    "TrainingError",
    "UncertainPrediction",
    "fit_model",
    "fit_surrogates",
    "load_surrogates",
    "pinball_loss",
    "rbf_kernel",
    "save_surrogates",
]


def _check_kind(kind: str) -> None:
    if kind not in SURROGATE_KINDS:
        raise ContractError(f"unknown surrogate {kind!r}; valid: {', '.join(SURROGATE_KINDS)}")


def fit_model(kind: str, dataset: OfflineDataset, k: int, cfg: TrainConfig | None = None):
    """Fit the surrogate of ``kind`` for objective ``k``."""
    _check_kind(kind)
    cfg = cfg or TrainConfig()
    if not 0 <= k < dataset.Y.shape[1]:
        raise ContractError(f"objective index {k} out of range")
    X, y = dataset.X, dataset.Y[:, k]
    seed = cfg.seed + 1000 * k
    epochs = cfg.epochs or DEFAULT_EPOCHS.get(kind)
    if kind == "kriging":
        return KrigingModel.fit(X, y, cfg.nugget, cfg.n_restarts, seed)
    if kind == "qr":
        return QuantileModel.fit(X, y, epochs, cfg.learning_rate, cfg.hidden, cfg.tau, seed)
    if kind == "mcd":
        return DropoutModel.fit(
            X, y, epochs, cfg.learning_rate, cfg.hidden, cfg.dropout, cfg.mc_samples, seed
        )
    return BayesianModel.fit(X, y, epochs, cfg.learning_rate, cfg.hidden, cfg.mc_samples, seed)


@dataclass
class SurrogateSet:
    """``K`` fitted models of one kind, one per objective."""

    kind: str
    models: list
    tau: float = 0.9

    def __post_init__(self):
        _check_kind(self.kind)
        cls = _MODEL_CLASSES[self.kind]
        if not self.models or not all(isinstance(m, cls) for m in self.models):
            raise ContractError(f"a {self.kind} set needs at least one {cls.__name__}")

    @property
    def n_obj(self) -> int:
        return len(self.models)

    def predict(self, X, seed=0) -> list[UncertainPrediction]:
        """Predictions for a batch ``X``, one :class:`UncertainPrediction` per objective.

        ``seed`` (an int or tuple of ints) fixes the dropout masks / weight
        draws of the sampling-based models, so calls are reproducible.
        """
        X = np.atleast_2d(np.asarray(X, dtype=float))
        preds = []
        for k, model in enumerate(self.models):
            center, spread = model.predict(X, prediction_rng(seed, k))
            preds.append(UncertainPrediction(center, spread, model.kind))
        return preds

    def to_dict(self) -> dict:
        return {
            "format": FORMAT_VERSION,
            "kind": self.kind,
            "tau": self.tau,
            "models": [_encode(m.to_dict()) for m in self.models],
        }

    @classmethod
    def from_dict(cls, d: dict) -> SurrogateSet:
        if d.get("format") != FORMAT_VERSION:
            raise ContractError(f"unsupported surrogate file format {d.get('format')!r}")
        kind = d["kind"]
        _check_kind(kind)
        model_cls = _MODEL_CLASSES[kind]
        models = [model_cls.from_dict(_decode(m)) for m in d["models"]]
        return cls(kind, models, float(d["tau"]))


def fit_surrogates(kind: str, dataset: OfflineDataset, cfg: TrainConfig | None = None) -> SurrogateSet:
    cfg = cfg or TrainConfig()
    models = [fit_model(kind, dataset, k, cfg) for k in range(dataset.Y.shape[1])]
    return SurrogateSet(kind, models, cfg.tau)


def save_surrogates(sset: SurrogateSet, path: str | Path) -> None:
    Path(path).write_text(json.dumps(sset.to_dict(), indent=1))


def load_surrogates(path: str | Path) -> SurrogateSet:
    return SurrogateSet.from_dict(json.loads(Path(path).read_text()))


# Arrays are stored as nested lists of repr() strings so the round trip is exact.


def _encode(obj):
    if isinstance(obj, dict):
        return {k: _encode(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return {"shape": list(obj.shape), "data": [repr(float(v)) for v in obj.ravel()]}
    if isinstance(obj, float):
        return repr(obj)
    return obj


def _decode(obj):
    if isinstance(obj, dict):
        if set(obj) == {"shape", "data"}:
            return np.array([float(v) for v in obj["data"]], dtype=float).reshape(obj["shape"])
        return {k: _decode(v) for k, v in obj.items()}
    if isinstance(obj, str):
        return float(obj)
    return obj
