"""Command-line entry point: ``offmoo run | problems | dataset``."""

from __future__ import annotations

import argparse
import logging
import sys

from offmoo.core import ContractError
from offmoo.experiment import ConfigError, parse_config, resolve_output_dir, run_experiment
from offmoo.problems import PROBLEM_NAMES, UnknownProblemError, get_problem
from offmoo.sampling import DEFAULT_DATASET_SEED, SamplingConfig, build_offline_dataset, dataset_to_csv


def _cmd_run(args) -> int:
    cfg = parse_config(args.config)
    out = resolve_output_dir(cfg, args.out)
    records, rows = run_experiment(cfg, out, args.workers)
    failed = sum(not r.ok for r in records)
    print(f"{len(records)} runs ({failed} failed), outputs in {out}")
    print(f"{'problem':<12} {'surrogate':<9} {'hv_mean':>12} {'hv_std':>10} {'mse_mean':>12} {'n':>3}")
    for row in rows:
        print(
            f"{row['problem']:<12} {row['surrogate']:<9} {row['hv_mean']:>12.6g} "
            f"{row['hv_std']:>10.4g} {row['mse_mean']:>12.6g} {row['n_runs']:>3}"
        )
    return 1 if failed else 0


def _cmd_problems(args) -> int:
    for name in PROBLEM_NAMES:
        p = get_problem(name)
        print(f"{name:<12} D={p.n_var:<3} K={p.n_obj} C={p.n_constr}")
    return 0


def _cmd_dataset(args) -> int:
    problem = get_problem(args.problem)
    dataset = build_offline_dataset(problem, SamplingConfig(args.n, args.seed))
    text = dataset_to_csv(dataset)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="offmoo",
        description="Offline data-driven multi-objective optimization with dual-ranking NSGA-II.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment batch from a YAML config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", help="output directory (overrides config and $OFFMOO_OUTPUT_DIR)")
    p_run.add_argument("--workers", type=int, help="parallel worker processes")
    p_run.set_defaults(func=_cmd_run)

    p_list = sub.add_parser("problems", help="list the benchmark catalog")
    p_list.set_defaults(func=_cmd_problems)

    p_data = sub.add_parser("dataset", help="emit an offline LHS dataset as CSV")
    p_data.add_argument("--problem", required=True)
    p_data.add_argument("--seed", type=int, default=DEFAULT_DATASET_SEED)
    p_data.add_argument("--n", type=int, default=None, help="sample count (default 11*D-1)")
    p_data.add_argument("--output", "-o", help="write to a file instead of stdout")
    p_data.set_defaults(func=_cmd_dataset)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, UnknownProblemError, ContractError) as exc:
        print(f"offmoo: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
