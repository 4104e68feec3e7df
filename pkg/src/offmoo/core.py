"""Domain types and dominance predicates shared across the package.

Everything here assumes minimization. Constraint violations are stored as
non-negative magnitudes, so ``g(x) <= 0`` constraints become ``max(0, g(x))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class ContractError(ValueError):
    """Raised when a caller violates a precondition (shape, range, state)."""


def _as_vector(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ContractError(f"{name} must be a 1-D vector, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class Evaluation:
    """Objective values plus constraint violation magnitudes for one point."""

    objectives: np.ndarray
    constraint_violations: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        obj = _as_vector(self.objectives, "objectives")
        cv = _as_vector(self.constraint_violations, "constraint_violations")
        if np.any(cv < 0):
            raise ContractError("constraint violations must be non-negative")
        obj.setflags(write=False)
        cv.setflags(write=False)
        object.__setattr__(self, "objectives", obj)
        object.__setattr__(self, "constraint_violations", cv)

    @property
    def feasible(self) -> bool:
        return not np.any(self.constraint_violations > 0)

    @property
    def total_violation(self) -> float:
        return float(np.sum(self.constraint_violations))


@dataclass(frozen=True)
class Problem:
    """A benchmark problem with analytic objectives and constraints.

    ``objective_fn`` and ``constraint_fn`` operate on a batch ``(n, D)`` and
    return ``(n, K)`` objectives and ``(n, C)`` violation magnitudes. They are
    kept separate so the optimizer can check feasibility without touching the
    (notionally expensive) objectives.
    """

    name: str
    n_var: int
    n_obj: int
    n_constr: int
    lower: np.ndarray
    upper: np.ndarray
    objective_fn: Callable[[np.ndarray], np.ndarray]
    constraint_fn: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        lo = _as_vector(self.lower, "lower")
        hi = _as_vector(self.upper, "upper")
        if lo.shape != (self.n_var,) or hi.shape != (self.n_var,):
            raise ContractError("bounds must have length n_var")
        if not np.all(lo < hi):
            raise ContractError("every lower bound must be below its upper bound")
        if self.n_obj < 2:
            raise ContractError("at least two objectives are required")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def bounds(self) -> np.ndarray:
        return np.column_stack([self.lower, self.upper])

    def check_bounds(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_var:
            raise ContractError(f"{self.name}: expected {self.n_var} variables, got {X.shape[1]}")
        if np.any(X < self.lower) or np.any(X > self.upper):
            raise ContractError(f"{self.name}: decision vector outside bounds")
        return X

    def objectives(self, X: np.ndarray) -> np.ndarray:
        """True objective values for a batch of in-bounds points."""
        X = self.check_bounds(X)
        return np.asarray(self.objective_fn(X), dtype=float).reshape(len(X), self.n_obj)

    def violations(self, X: np.ndarray) -> np.ndarray:
        """Constraint violation magnitudes, shape ``(n, C)`` (``C`` may be 0)."""
        X = self.check_bounds(X)
        if self.constraint_fn is None or self.n_constr == 0:
            return np.zeros((len(X), 0))
        g = np.asarray(self.constraint_fn(X), dtype=float).reshape(len(X), self.n_constr)
        return np.maximum(g, 0.0)

    def evaluate(self, x) -> Evaluation:
        """Evaluate a single decision vector with the true functions."""
        X = np.asarray(x, dtype=float).reshape(1, -1)
        return Evaluation(self.objectives(X)[0], self.violations(X)[0])


@dataclass(frozen=True)
class OfflineDataset:
    """Fixed samples ``(X, Y)`` used to fit the surrogates. Never grows."""

    X: np.ndarray
    Y: np.ndarray
    problem: str = ""
    seed: int | None = None

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        Y = np.array(self.Y, dtype=float)
        if X.ndim != 2 or Y.ndim != 2 or len(X) != len(Y):
            raise ContractError(f"inconsistent dataset shapes {X.shape} and {Y.shape}")
        if len(X) == 0:
            raise ContractError("dataset is empty")
        X.setflags(write=False)
        Y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def n(self) -> int:
        return len(self.X)


def dominates(a, b) -> bool:
    """Pareto dominance for minimization: ``a`` is no worse everywhere and better somewhere."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ContractError(f"objective vectors differ in length: {a.shape} vs {b.shape}")
    return bool(np.all(a <= b) and np.any(a < b))


def constrained_dominates(a: Evaluation, b: Evaluation) -> bool:
    """Feasibility-first dominance.

    A feasible point beats an infeasible one, two infeasible points are
    compared by total violation, and two feasible ones by Pareto dominance.
    """
    if a.constraint_violations.shape != b.constraint_violations.shape:
        raise ContractError("evaluations have different numbers of constraints")
    fa, fb = a.feasible, b.feasible
    if fa and fb:
        return dominates(a.objectives, b.objectives)
    if fa != fb:
        return fa
    return a.total_violation < b.total_violation


def dominance_matrix(F: np.ndarray, cv: np.ndarray | None = None) -> np.ndarray:
    """Boolean matrix ``M[i, j]`` = row ``i`` (constrained-)dominates row ``j``.

    ``cv`` is the per-row total violation; ``None`` means unconstrained.
    Costs ``O(K N^2)`` time and ``O(K N^2)`` temporary memory.
    """
    F = np.asarray(F, dtype=float)
    le = np.all(F[:, None, :] <= F[None, :, :], axis=2)
    lt = np.any(F[:, None, :] < F[None, :, :], axis=2)
    dom = le & lt
    if cv is None:
        return dom
    cv = np.asarray(cv, dtype=float)
    feas = cv <= 0
    both_feas = feas[:, None] & feas[None, :]
    both_infeas = ~feas[:, None] & ~feas[None, :]
    return (
        (both_feas & dom)
        | (feas[:, None] & ~feas[None, :])
        | (both_infeas & (cv[:, None] < cv[None, :]))
    )


@dataclass(frozen=True)
class Individual:
    """One member of a population, as seen through :meth:`Population.__getitem__`."""

    x: np.ndarray
    eval_original: Evaluation
    eval_adjusted: Evaluation
    rank_hybrid: float | None = None
    crowding: float | None = None


@dataclass
class Population:
    """Index-addressable population stored column-wise as arrays.

    ``F_ori``/``F_adj`` are the surrogate-based original and adjusted
    objectives; ``CV`` holds the analytic constraint violations shared by both.
    """

    X: np.ndarray
    F_ori: np.ndarray
    F_adj: np.ndarray
    CV: np.ndarray
    rank: np.ndarray | None = None
    crowding: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.X)

    def __getitem__(self, i: int) -> Individual:
        rank = None if self.rank is None else float(self.rank[i])
        crowd = None if self.crowding is None else float(self.crowding[i])
        return Individual(
            self.X[i],
            Evaluation(self.F_ori[i], self.CV[i]),
            Evaluation(self.F_adj[i], self.CV[i]),
            rank,
            crowd,
        )

    def take(self, idx) -> Population:
        idx = np.asarray(idx, dtype=int)
        pick = lambda a: None if a is None else a[idx]  # noqa: E731
        return Population(
            self.X[idx], self.F_ori[idx], self.F_adj[idx], self.CV[idx],
            pick(self.rank), pick(self.crowding),
        )

    @staticmethod
    def concat(a: Population, b: Population) -> Population:
        return Population(
            np.vstack([a.X, b.X]),
            np.vstack([a.F_ori, b.F_ori]),
            np.vstack([a.F_adj, b.F_adj]),
            np.vstack([a.CV, b.CV]),
        )
