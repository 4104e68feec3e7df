"""Latin hypercube sampling and offline dataset construction."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from offmoo.core import ContractError, OfflineDataset, Problem

DEFAULT_DATASET_SEED = 42


def default_sample_size(n_var: int) -> int:
    return 11 * n_var - 1


@dataclass(frozen=True)
class SamplingConfig:
    n_samples: int | None = None  # None -> 11 * D - 1
    seed: int = DEFAULT_DATASET_SEED

    def resolve(self, n_var: int) -> int:
        n = default_sample_size(n_var) if self.n_samples is None else self.n_samples
        if n < 1:
            raise ContractError("n_samples must be positive")
        return n


def lhs(n: int, bounds, seed: int) -> np.ndarray:
    """Random Latin hypercube design.

    Each column is an independent permutation of the ``n`` strata with a
    uniform jitter inside each stratum, then mapped onto ``[lo, hi]``.

    Args:
        n: Number of samples.
        bounds: ``(D, 2)`` array of ``(lo, hi)`` pairs.
        seed: Seed for a PCG64 generator; identical seeds give identical designs.

    Returns:
        ``(n, D)`` sample matrix.
    """
    bounds = np.asarray(bounds, dtype=float)
    if n < 1:
        raise ContractError("n must be at least 1")
    if bounds.ndim != 2 or bounds.shape[1] != 2 or not np.all(bounds[:, 0] < bounds[:, 1]):
        raise ContractError("bounds must be a (D, 2) array with lo < hi")
    rng = np.random.Generator(np.random.PCG64(seed))
    d = len(bounds)
    strata = np.column_stack([rng.permutation(n) for _ in range(d)])
    unit = (strata + rng.random((n, d))) / n
    lo, hi = bounds[:, 0], bounds[:, 1]
    # lo + unit * (hi - lo) can round just past hi when unit is close to 1
    return np.minimum(lo + unit * (hi - lo), hi)


def build_offline_dataset(problem: Problem, cfg: SamplingConfig | None = None) -> OfflineDataset:
    cfg = cfg or SamplingConfig()
    n = cfg.resolve(problem.n_var)
    X = lhs(n, problem.bounds, cfg.seed)
    Y = problem.objectives(X)
    return OfflineDataset(X, Y, problem=problem.name, seed=cfg.seed)


def dataset_to_csv(dataset: OfflineDataset) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    d, k = dataset.X.shape[1], dataset.Y.shape[1]
    writer.writerow([f"x_{i + 1}" for i in range(d)] + [f"f_{i + 1}" for i in range(k)])
    for x, y in zip(dataset.X, dataset.Y):
        writer.writerow([repr(float(v)) for v in (*x, *y)])
    return buf.getvalue()


def write_dataset_csv(dataset: OfflineDataset, path: str | Path) -> None:
    Path(path).write_text(dataset_to_csv(dataset))


def read_dataset_csv(path: str | Path, problem: str = "") -> OfflineDataset:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    d = sum(1 for h in header if h.startswith("x_"))
    data = np.array(body, dtype=float).reshape(len(body), len(header))
    return OfflineDataset(data[:, :d], data[:, d:], problem=problem)
