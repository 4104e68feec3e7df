"""NSGA-II driven by surrogate fitness, with dual-ranking survival.

The search never calls the true objectives: offspring are scored by the
surrogates (original and uncertainty-adjusted fitness) and by the analytic
constraints. The final population is evaluated with the true objectives once,
after the last generation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from offmoo.core import ContractError, OfflineDataset, Population, Problem
from offmoo.fitness import make_fitness_pair
from offmoo.operators import binary_tournament, polynomial_mutation, sbx_crossover
from offmoo.ranking import crowding_distance, dual_rank
from offmoo.sampling import SamplingConfig, build_offline_dataset, lhs
from offmoo.surrogates import SurrogateSet, TrainConfig, fit_surrogates

log = logging.getLogger(__name__)


class RunError(RuntimeError):
    pass


@dataclass(frozen=True)
class EngineConfig:
    pop_size: int = 100
    generations: int = 100
    eta_c: float = 20.0
    eta_m: float = 20.0
    crossover_prob: float = 1.0
    mutation_prob: float | None = None  # None -> 1 / D
    tau: float = 0.9
    seed: int = 1

    def __post_init__(self):
        if self.pop_size < 2 or self.generations < 0:
            raise ContractError("need pop_size >= 2 and generations >= 0")


@dataclass
class RunResult:
    problem: str
    surrogate: str
    seed: int
    X: np.ndarray
    F_sur: np.ndarray  # original (surrogate) fitness of the final population
    F_adj: np.ndarray
    F_real: np.ndarray  # true objectives of the final population
    CV: np.ndarray
    n_evaluations: int
    history: list[dict] = field(default_factory=list)

    @property
    def feasible(self) -> np.ndarray:
        return ~np.any(self.CV > 0, axis=1)


def evaluate(sset: SurrogateSet, problem: Problem, X: np.ndarray, tau: float, seed) -> Population:
    """Surrogate fitness pair plus analytic constraint violations for ``X``."""
    pair = make_fitness_pair(sset.predict(X, seed), tau)
    return Population(X, pair.original, pair.adjusted, problem.violations(X))


def survival(merged: Population, n: int) -> Population:
    """Keep ``n`` individuals by hybrid rank, splitting the last front by crowding.

    Crowding uses the original fitness within each hybrid front. Survivors
    carry their hybrid rank and crowding distance.
    """
    partition = dual_rank(merged.F_ori, merged.F_adj, merged.CV)
    chosen, ranks, crowd = [], [], []
    remaining = n
    for key, front in zip(partition.keys, partition.fronts):
        cd = crowding_distance(merged.F_ori[front])
        if len(front) > remaining:
            keep = np.argsort(-cd, kind="stable")[:remaining]
            front, cd = front[keep], cd[keep]
        chosen.append(front)
        ranks.append(np.full(len(front), key))
        crowd.append(cd)
        remaining -= len(front)
        if remaining == 0:
            break
    out = merged.take(np.concatenate(chosen))
    out.rank = np.concatenate(ranks)
    out.crowding = np.concatenate(crowd)
    return out


def make_offspring(pop: Population, problem: Problem, cfg: EngineConfig, rng) -> np.ndarray:
    n = len(pop)
    n_pairs = (n + 1) // 2
    parents = binary_tournament(pop.rank, pop.crowding, 2 * n_pairs, rng)
    P1, P2 = pop.X[parents[0::2]], pop.X[parents[1::2]]
    C1, C2 = sbx_crossover(P1, P2, problem.lower, problem.upper, cfg.eta_c, cfg.crossover_prob, rng)
    children = np.empty((2 * n_pairs, problem.n_var))
    children[0::2], children[1::2] = C1, C2
    children = children[:n]
    return polynomial_mutation(
        children, problem.lower, problem.upper, cfg.eta_m, cfg.mutation_prob, rng
    )


def optimize(
    problem: Problem,
    sset: SurrogateSet,
    cfg: EngineConfig,
) -> tuple[Population, int, list[dict]]:
    """Run the generational loop on surrogate fitness only.

    Returns the final population, the number of surrogate-evaluated
    offspring, and a per-generation summary.
    """
    N = cfg.pop_size
    rng = np.random.default_rng([cfg.seed, 1])
    X0 = lhs(N, problem.bounds, cfg.seed)
    pop = survival(evaluate(sset, problem, X0, cfg.tau, (cfg.seed, 0)), N)
    history = []
    n_evals = 0
    for gen in range(1, cfg.generations + 1):
        children = make_offspring(pop, problem, cfg, rng)
        offspring = evaluate(sset, problem, children, cfg.tau, (cfg.seed, gen))
        n_evals += len(offspring)
        pop = survival(Population.concat(pop, offspring), N)
        history.append(_summary(gen, pop, n_evals))
        log.debug("generation %d: %s", gen, history[-1])
    return pop, n_evals, history


def _summary(gen: int, pop: Population, n_evals: int) -> dict:
    best = pop.rank == pop.rank.min()
    return {
        "generation": gen,
        "evaluations": n_evals,
        "n_best": int(best.sum()),
        "best_rank": float(pop.rank.min()),
        "mean_f_ori": pop.F_ori.mean(axis=0).tolist(),
        "mean_f_adj": pop.F_adj.mean(axis=0).tolist(),
        "n_feasible": int(np.sum(~np.any(pop.CV > 0, axis=1))),
    }


def run(
    problem: Problem,
    surrogate: str,
    cfg: EngineConfig | None = None,
    sampling: SamplingConfig | None = None,
    training: TrainConfig | None = None,
    dataset: OfflineDataset | None = None,
) -> RunResult:
    """Full offline pipeline: dataset, surrogates, search, one final true evaluation."""
    cfg = cfg or EngineConfig()
    if dataset is None:
        dataset = build_offline_dataset(problem, sampling)
    training = training or TrainConfig(tau=cfg.tau)
    try:
        sset = fit_surrogates(surrogate, dataset, training)
    except (ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
        raise RunError(f"{problem.name}/{surrogate}: surrogate fit failed: {exc}") from exc
    pop, n_evals, history = optimize(problem, sset, cfg)
    F_real = problem.objectives(pop.X)
    return RunResult(
        problem.name, surrogate, cfg.seed, pop.X, pop.F_ori, pop.F_adj, F_real, pop.CV,
        n_evals, history,
    )
