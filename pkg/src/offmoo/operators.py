"""Real-coded variation operators and binary tournament selection.

SBX and polynomial mutation follow Deb's reference NSGA-II implementation.
Everything is vectorized over a batch of parents and draws from one
``numpy.random.Generator`` in a fixed order.
"""

from __future__ import annotations

import numpy as np

_EPS = 1e-14


def sbx_crossover(P1, P2, lower, upper, eta: float = 20.0, prob: float = 1.0, rng=None):
    """Simulated binary crossover for row-aligned parent batches.

    Each mating pair crosses with probability ``prob``. Within a crossing
    pair every variable is recombined with probability 0.5, and the two child
    values are swapped with probability 0.5. Children are clipped to bounds.

    Returns:
        Two arrays of children, same shape as the parents.
    """
    rng = rng if rng is not None else np.random.default_rng()
    P1 = np.atleast_2d(np.asarray(P1, dtype=float))
    P2 = np.atleast_2d(np.asarray(P2, dtype=float))
    n, d = P1.shape
    do_pair = rng.random(n) < prob
    do_var = rng.random((n, d)) < 0.5
    u = rng.random((n, d))
    swap = rng.random((n, d)) < 0.5

    C1, C2 = P1.copy(), P2.copy()
    active = do_pair[:, None] & do_var & (np.abs(P1 - P2) > _EPS)
    beta = np.where(
        u <= 0.5,
        (2 * u) ** (1 / (eta + 1)),
        (1 / (2 * (1 - u))) ** (1 / (eta + 1)),
    )
    mean = 0.5 * (P1 + P2)
    half = 0.5 * np.abs(P2 - P1)
    lo_child = mean - beta * half
    hi_child = mean + beta * half
    first = np.where(swap, hi_child, lo_child)
    second = np.where(swap, lo_child, hi_child)
    C1 = np.where(active, first, C1)
    C2 = np.where(active, second, C2)
    return np.clip(C1, lower, upper), np.clip(C2, lower, upper)


def polynomial_mutation(X, lower, upper, eta: float = 20.0, prob: float | None = None, rng=None):
    """Bounded polynomial mutation; each variable mutates with probability ``prob``
    (default ``1/D``)."""
    rng = rng if rng is not None else np.random.default_rng()
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n, d = X.shape
    prob = 1.0 / d if prob is None else prob
    lower = np.broadcast_to(np.asarray(lower, dtype=float), (n, d))
    upper = np.broadcast_to(np.asarray(upper, dtype=float), (n, d))
    mutate = rng.random((n, d)) < prob
    u = rng.random((n, d))

    span = upper - lower
    delta1 = (X - lower) / span
    delta2 = (upper - X) / span
    power = 1.0 / (eta + 1.0)
    left = u < 0.5
    xy_l = 1.0 - delta1
    xy_r = 1.0 - delta2
    val_l = 2 * u + (1 - 2 * u) * xy_l ** (eta + 1)
    val_r = 2 * (1 - u) + 2 * (u - 0.5) * xy_r ** (eta + 1)
    deltaq = np.where(left, val_l**power - 1.0, 1.0 - val_r**power)
    Y = np.where(mutate, X + deltaq * span, X)
    return np.clip(Y, lower, upper)


def binary_tournament(rank, crowding, n_select: int, rng) -> np.ndarray:
    """Indices of ``n_select`` tournament winners.

    Lower rank wins; equal ranks go to the larger crowding distance; full ties
    are decided by a fair coin.
    """
    rank = np.asarray(rank, dtype=float)
    crowding = np.asarray(crowding, dtype=float)
    n = len(rank)
    a = rng.integers(n, size=n_select)
    b = rng.integers(n, size=n_select)
    coin = rng.random(n_select) < 0.5
    a_wins = (rank[a] < rank[b]) | (
        (rank[a] == rank[b])
        & ((crowding[a] > crowding[b]) | ((crowding[a] == crowding[b]) & coin))
    )
    return np.where(a_wins, a, b)


def tournament_select(rank, crowding, rng) -> int:
    """A single binary tournament."""
    return int(binary_tournament(rank, crowding, 1, rng)[0])
