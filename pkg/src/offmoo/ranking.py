"""Non-dominated sorting, dual ranking and crowding distance.

Populations are passed as arrays: objectives ``F`` of shape ``(N, K)`` and an
optional violation matrix ``CV`` of shape ``(N, C)``. When ``C > 0`` the
feasibility-first rule of :func:`offmoo.core.constrained_dominates` applies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from offmoo.core import ContractError, dominance_matrix


@dataclass(frozen=True)
class FrontPartition:
    """Ordered fronts of population indices.

    ``keys[i]`` is the rank value of ``fronts[i]``: the integer front index for
    a plain sort, or the averaged (half-integer) rank for a dual ranking.
    """

    fronts: tuple[np.ndarray, ...]
    keys: tuple[float, ...]

    def __len__(self):
        return len(self.fronts)

    def __iter__(self):
        return iter(self.fronts)

    def as_lists(self) -> list[list[int]]:
        return [sorted(int(i) for i in f) for f in self.fronts]

    def ranks(self) -> np.ndarray:
        """Per-individual rank value (the key of the front it belongs to)."""
        n = sum(len(f) for f in self.fronts)
        out = np.full(n, np.nan)
        for key, front in zip(self.keys, self.fronts):
            out[front] = key
        return out


def _total_violation(CV, n):
    if CV is None:
        return None
    CV = np.asarray(CV, dtype=float)
    if CV.ndim == 1:
        CV = CV[:, None]
    if len(CV) != n:
        raise ContractError("violations and objectives differ in length")
    if CV.shape[1] == 0:
        return None
    return CV.sum(axis=1)


def non_dominated_sort(F, CV=None) -> FrontPartition:
    """Partition into successive non-dominated fronts, ``O(K N^2)``.

    Deb's bookkeeping: count how many individuals dominate each one, peel off
    the zero-count set, decrement the counts of whatever it dominated, repeat.
    """
    F = np.asarray(F, dtype=float)
    if F.ndim != 2 or len(F) == 0:
        raise ContractError(f"expected a non-empty (N, K) objective array, got shape {F.shape}")
    n = len(F)
    dom = dominance_matrix(F, _total_violation(CV, n))
    count = dom.sum(axis=0)
    fronts = []
    current = np.flatnonzero(count == 0)
    while current.size:
        fronts.append(current)
        count = count - dom[current].sum(axis=0)
        count[current] = -1
        current = np.flatnonzero(count == 0)
    return FrontPartition(tuple(fronts), tuple(float(i) for i in range(len(fronts))))


def compute_rank(F, CV=None) -> np.ndarray:
    """Front index of every individual (integer ranks starting at 0)."""
    fronts = non_dominated_sort(F, CV)
    rank = np.full(len(F), -1, dtype=int)
    for i, front in enumerate(fronts):
        rank[front] = i
    if np.any(rank < 0):
        raise RuntimeError("non-dominated sort left individuals unassigned")
    return rank


def fronts_from_ranks(rank_sum: np.ndarray, divisor: int = 1) -> FrontPartition:
    """Group individuals by equal integer ``rank_sum``, ascending; keys are ``rank_sum / divisor``."""
    rank_sum = np.asarray(rank_sum)
    keys = np.unique(rank_sum)
    fronts = tuple(np.flatnonzero(rank_sum == k) for k in keys)
    return FrontPartition(fronts, tuple(float(k) / divisor for k in keys))


def dual_rank(F_ori, F_adj, CV=None) -> FrontPartition:
    """Hybrid fronts from the average of the original and adjusted ranks.

    Both sorts share the same constraint data. Averages are half-integers, so
    grouping is done on the exact integer sum ``r_ori + r_adj``.
    """
    F_ori = np.asarray(F_ori, dtype=float)
    F_adj = np.asarray(F_adj, dtype=float)
    if F_ori.shape != F_adj.shape:
        raise ContractError(f"original and adjusted shapes differ: {F_ori.shape} vs {F_adj.shape}")
    r_ori = compute_rank(F_ori, CV)
    r_adj = compute_rank(F_adj, CV)
    return fronts_from_ranks(r_ori + r_adj, divisor=2)


def crowding_distance(F_front) -> np.ndarray:
    """NSGA-II crowding distance of the rows of ``F_front``.

    Boundary rows per objective get ``inf``; interior rows add the neighbour
    gap divided by the objective's extent in the front. Objectives with zero
    extent contribute nothing. Sorting ties are broken by row order.
    """
    F = np.asarray(F_front, dtype=float)
    n, k = F.shape
    if n <= 2:
        return np.full(n, np.inf)
    dist = np.zeros(n)
    for m in range(k):
        order = np.argsort(F[:, m], kind="stable")
        vals = F[order, m]
        extent = vals[-1] - vals[0]
        dist[order[0]] = np.inf
        dist[order[-1]] = np.inf
        if extent > 0:
            dist[order[1:-1]] += (vals[2:] - vals[:-2]) / extent
    return dist
