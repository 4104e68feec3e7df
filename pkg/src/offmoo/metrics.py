"""Hypervolume (two objectives), MSE and reference-point derivation."""

from __future__ import annotations

import warnings

import numpy as np

from offmoo.core import ContractError


class UnsupportedDimensionError(ContractError):
    pass


def hypervolume_2d(front, ref) -> float:
    """Exact area dominated by ``front`` and bounded by ``ref`` (minimization).

    Points not strictly better than ``ref`` in both objectives contribute
    nothing. The remaining points are swept in ascending ``f1``; each point
    on the staircase adds the rectangle between its ``f1`` and the next
    staircase point's ``f1``, below ``ref[1]`` and above its own ``f2``.
    """
    P = np.asarray(front, dtype=float)
    ref = np.asarray(ref, dtype=float)
    if P.size == 0:
        return 0.0
    P = np.atleast_2d(P)
    if P.shape[1] != 2 or ref.shape != (2,):
        raise UnsupportedDimensionError(
            f"hypervolume_2d needs two objectives, got points {P.shape} and ref {ref.shape}"
        )
    if not np.all(np.isfinite(ref)):
        raise ContractError("reference point must be finite")
    P = P[np.all(P < ref, axis=1)]
    if len(P) == 0:
        return 0.0
    P = P[np.lexsort((P[:, 1], P[:, 0]))]
    area = 0.0
    best_f2 = ref[1]
    stair_f1, stair_f2 = [], []
    for f1, f2 in P:
        if f2 < best_f2:
            stair_f1.append(f1)
            stair_f2.append(f2)
            best_f2 = f2
    xs = stair_f1 + [ref[0]]
    for i, f2 in enumerate(stair_f2):
        area += (xs[i + 1] - xs[i]) * (ref[1] - f2)
    return float(area)


def mse(a, b) -> float:
    """Mean squared difference over all entries of two equally shaped matrices."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.size == 0:
        raise ContractError(f"mse needs equal non-empty shapes, got {a.shape} and {b.shape}")
    return float(np.mean((a - b) ** 2))


def derive_reference_point(*objective_sets) -> np.ndarray:
    """Componentwise ``max + 0.1 * |max|`` over the union of objective samples.

    Non-finite rows (e.g. a degenerate truss design) are ignored. A warning
    is issued when the resulting box has zero extent in some objective.
    """
    rows = [np.atleast_2d(np.asarray(s, dtype=float)) for s in objective_sets if np.size(s)]
    if not rows:
        raise ContractError("cannot derive a reference point from no samples")
    Y = np.vstack(rows)
    Y = Y[np.all(np.isfinite(Y), axis=1)]
    if len(Y) == 0:
        raise ContractError("no finite objective samples")
    top = Y.max(axis=0)
    ref = top + 0.1 * np.abs(top)
    if np.any(ref <= Y.min(axis=0)):
        warnings.warn(
            f"degenerate reference point {ref.tolist()}: zero extent in some objective",
            stacklevel=2,
        )
    return ref


def non_dominated_subset(F) -> np.ndarray:
    """Rows of ``F`` not Pareto-dominated by any other row."""
    F = np.atleast_2d(np.asarray(F, dtype=float))
    le = np.all(F[:, None, :] <= F[None, :, :], axis=2)
    lt = np.any(F[:, None, :] < F[None, :, :], axis=2)
    dominated = np.any(le & lt, axis=0)
    return F[~dominated]
