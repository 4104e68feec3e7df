"""Batch experiments: config parsing, seeded runs, persistence and summaries.

Output layout under the output directory::

    <problem>/<surrogate>/seed_<s>/result.json   full record of one run
    <problem>/<surrogate>/seed_<s>/front.csv     mode,f_1,f_2 (mode in {sur, real})
    reference_points.json                        frozen HV reference point per problem
    summary.csv / summary.json                   per (problem, surrogate) aggregates
"""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Optional

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from offmoo.metrics import derive_reference_point, hypervolume_2d, mse, non_dominated_subset
from offmoo.moea import EngineConfig, RunError, run
from offmoo.problems import PROBLEM_NAMES, get_problem
from offmoo.sampling import DEFAULT_DATASET_SEED, SamplingConfig, build_offline_dataset
from offmoo.surrogates import SURROGATE_KINDS, TrainConfig

log = logging.getLogger(__name__)

OUTPUT_ENV = "OFFMOO_OUTPUT_DIR"
SUMMARY_FIELDS = (
    "problem",
    "surrogate",
    "hv_mean",
    "hv_std",
    "mse_mean",
    "mse_std",
    "n_runs",
    "hv_sur_mean",
    "hv_sur_std",
    "flags",
)


class ConfigError(ValueError):
    pass


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class EngineSection(_Strict):
    pop_size: int = Field(100, ge=2)
    generations: int = Field(100, ge=0)
    eta_c: float = Field(20.0, gt=0)
    eta_m: float = Field(20.0, gt=0)
    crossover_prob: float = Field(1.0, ge=0, le=1)
    mutation_prob: Optional[float] = Field(None, ge=0, le=1)


class TrainingSection(_Strict):
    epochs: Optional[int] = Field(None, ge=1)
    epochs_per_problem: dict[str, int] = Field(default_factory=dict)
    learning_rate: float = Field(1e-3, gt=0)
    hidden: int = Field(32, ge=1)
    dropout: float = Field(0.1, ge=0, lt=1)
    mc_samples: int = Field(100, ge=1)
    nugget: float = Field(1e-3, gt=0)
    n_restarts: int = Field(8, ge=1)


class ExperimentConfig(_Strict):
    problems: list[str] = Field(min_length=1)
    surrogates: list[Literal["kriging", "qr", "mcd", "bnn"]] = Field(min_length=1)
    seeds: list[int] = Field(default_factory=lambda: list(range(1, 31)))
    tau: float = Field(0.9, gt=0, lt=1)
    dataset_seed: int = DEFAULT_DATASET_SEED
    n_samples: Optional[int] = Field(None, ge=1)
    output_dir: str = "results"
    workers: int = Field(1, ge=1)
    engine: EngineSection = Field(default_factory=EngineSection)
    training: TrainingSection = Field(default_factory=TrainingSection)
    reference_points: dict[str, list[float]] = Field(default_factory=dict)

    @field_validator("problems")
    @classmethod
    def _known_problems(cls, v):
        bad = [p for p in v if p not in PROBLEM_NAMES]
        if bad:
            raise ValueError(f"unknown problem(s) {bad}; valid: {', '.join(PROBLEM_NAMES)}")
        return v

    @field_validator("seeds")
    @classmethod
    def _seeds_non_empty(cls, v):
        if not v:
            raise ValueError("seeds must be non-empty")
        return v

    def engine_config(self, seed: int) -> EngineConfig:
        e = self.engine
        return EngineConfig(
            e.pop_size, e.generations, e.eta_c, e.eta_m, e.crossover_prob, e.mutation_prob,
            self.tau, seed,
        )

    def train_config(self, problem: str) -> TrainConfig:
        t = self.training
        epochs = t.epochs_per_problem.get(problem, t.epochs)
        return TrainConfig(
            epochs=epochs,
            learning_rate=t.learning_rate,
            hidden=t.hidden,
            dropout=t.dropout,
            tau=self.tau,
            mc_samples=t.mc_samples,
            nugget=t.nugget,
            n_restarts=t.n_restarts,
        )

    def sampling_config(self) -> SamplingConfig:
        return SamplingConfig(self.n_samples, self.dataset_seed)


def _format_validation_error(exc: ValidationError, source: str) -> str:
    lines = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        msg = err["msg"]
        if err["type"] == "literal_error":
            msg = f"unknown surrogate {err['input']!r}; valid: {', '.join(SURROGATE_KINDS)}"
        elif err["type"] == "extra_forbidden":
            msg = "unknown key"
        lines.append(f"{source}: {loc}: {msg}")
    return "\n".join(lines)


def config_from_dict(data: dict, source: str = "<config>") -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_validation_error(exc, source)) from None


def parse_config(path: str | Path) -> ExperimentConfig:
    """Read a YAML experiment config, apply defaults and validate it."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return config_from_dict(data, str(path))


def resolve_output_dir(cfg: ExperimentConfig, override: str | None = None) -> Path:
    return Path(override or os.environ.get(OUTPUT_ENV) or cfg.output_dir)


# Per-run records ------------------------------------------------------------


@dataclass
class ResultRecord:
    problem: str
    surrogate: str
    seed: int
    status: str  # "ok" or "failed"
    error: str = ""
    wall_clock: float = 0.0
    n_evaluations: int = 0
    X: np.ndarray | None = None
    F_sur: np.ndarray | None = None
    F_adj: np.ndarray | None = None
    F_real: np.ndarray | None = None
    CV: np.ndarray | None = None
    hv_real: float | None = None
    hv_sur: float | None = None
    mse: float | None = None

    @property
    def key(self) -> tuple[str, str, int]:
        return (self.problem, self.surrogate, self.seed)

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def feasible(self) -> np.ndarray:
        return ~np.any(self.CV > 0, axis=1)

    def fronts(self) -> dict[str, np.ndarray]:
        """Non-dominated feasible points under each evaluation mode."""
        feas = self.feasible
        out = {}
        for mode, F in (("sur", self.F_sur), ("real", self.F_real)):
            pts = F[feas]
            out[mode] = non_dominated_subset(pts) if len(pts) else np.zeros((0, F.shape[1]))
        return out

    def to_json(self) -> dict:
        d = {
            "problem": self.problem,
            "surrogate": self.surrogate,
            "seed": self.seed,
            "status": self.status,
            "error": self.error,
            "wall_clock": self.wall_clock,
            "n_evaluations": self.n_evaluations,
        }
        for name in ("X", "F_sur", "F_adj", "F_real", "CV"):
            arr = getattr(self, name)
            d[name] = None if arr is None else arr.tolist()
        return d

    @classmethod
    def from_json(cls, d: dict) -> ResultRecord:
        arrays = {
            name: None if d.get(name) is None else np.asarray(d[name], dtype=float)
            for name in ("X", "F_sur", "F_adj", "F_real", "CV")
        }
        return cls(
            d["problem"], d["surrogate"], int(d["seed"]), d["status"], d.get("error", ""),
            float(d.get("wall_clock", 0.0)), int(d.get("n_evaluations", 0)), **arrays,
        )


def cell_dir(out: Path, problem: str, surrogate: str, seed: int) -> Path:
    return out / problem / surrogate / f"seed_{seed}"


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def run_cell(cfg: ExperimentConfig, problem_name: str, surrogate: str, seed: int) -> ResultRecord:
    """Run one (problem, surrogate, seed) cell; failures become a failed record."""
    start = time.perf_counter()
    try:
        problem = get_problem(problem_name)
        res = run(
            problem,
            surrogate,
            cfg.engine_config(seed),
            cfg.sampling_config(),
            cfg.train_config(problem_name),
        )
    except (RunError, ArithmeticError, RuntimeError, ValueError) as exc:
        log.warning("%s/%s/seed %d failed: %s", problem_name, surrogate, seed, exc)
        return ResultRecord(
            problem_name, surrogate, seed, "failed", f"{type(exc).__name__}: {exc}",
            time.perf_counter() - start,
        )
    return ResultRecord(
        problem_name, surrogate, seed, "ok", "", time.perf_counter() - start,
        res.n_evaluations, res.X, res.F_sur, res.F_adj, res.F_real, res.CV,
    )


def _run_and_persist(cfg: ExperimentConfig, out: Path, key) -> ResultRecord:
    record = run_cell(cfg, *key)
    d = cell_dir(out, *key)
    d.mkdir(parents=True, exist_ok=True)
    _atomic_write(d / "result.json", json.dumps(record.to_json()))
    return record


def load_record(out: Path, key) -> ResultRecord | None:
    path = cell_dir(out, *key) / "result.json"
    if not path.exists():
        return None
    try:
        return ResultRecord.from_json(json.loads(path.read_text()))
    except (ValueError, KeyError):
        return None


def _reference_points(cfg: ExperimentConfig, out: Path, records: list[ResultRecord]) -> dict:
    path = out / "reference_points.json"
    frozen = json.loads(path.read_text()) if path.exists() else {}
    refs = {}
    for name in cfg.problems:
        if name in cfg.reference_points:
            refs[name] = [float(v) for v in cfg.reference_points[name]]
        elif name in frozen:
            refs[name] = [float(v) for v in frozen[name]]
        else:
            dataset = build_offline_dataset(get_problem(name), cfg.sampling_config())
            fronts = [r.F_real[r.feasible] for r in records if r.ok and r.problem == name]
            refs[name] = derive_reference_point(dataset.Y, *fronts).tolist()
    _atomic_write(path, json.dumps(refs, indent=1, sort_keys=True))
    return refs


def score(record: ResultRecord, ref) -> ResultRecord:
    """Fill in real/surrogate hypervolume and MSE for a successful record."""
    if not record.ok:
        return record
    fronts = record.fronts()
    record.hv_real = hypervolume_2d(fronts["real"], ref)
    record.hv_sur = hypervolume_2d(fronts["sur"], ref)
    record.mse = mse(record.F_real, record.F_sur)
    return record


def run_experiment(
    cfg: ExperimentConfig, out: str | Path | None = None, workers: int | None = None
) -> tuple[list[ResultRecord], list[dict]]:
    """Run (or resume) every cell, score them and write all outputs.

    Cells whose ``result.json`` already holds a successful record are loaded
    instead of re-run. Returns the records and the aggregate rows.
    """
    out = Path(out) if out is not None else resolve_output_dir(cfg)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"{out}: cannot create output directory: {exc.strerror}") from None
    workers = workers or cfg.workers
    keys = [(p, s, seed) for p in cfg.problems for s in cfg.surrogates for seed in cfg.seeds]
    records: dict[tuple, ResultRecord] = {}
    pending = []
    for key in keys:
        rec = load_record(out, key)
        if rec is not None and rec.ok:
            records[key] = rec
        else:
            pending.append(key)
    log.info("%d cells, %d already complete", len(keys), len(keys) - len(pending))

    if workers > 1 and len(pending) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {key: pool.submit(_run_and_persist, cfg, out, key) for key in pending}
            for key, fut in futures.items():
                records[key] = fut.result()
    else:
        for key in pending:
            records[key] = _run_and_persist(cfg, out, key)

    ordered = [records[k] for k in keys]
    refs = _reference_points(cfg, out, ordered)
    for rec in ordered:
        score(rec, refs[rec.problem])
    aggregates = aggregate(ordered)
    emit_outputs(ordered, aggregates, out, refs)
    return ordered, aggregates


def aggregate(records: list[ResultRecord]) -> list[dict]:
    """Mean and population standard deviation per (problem, surrogate)."""
    groups: dict[tuple[str, str], list[ResultRecord]] = {}
    for rec in records:
        groups.setdefault((rec.problem, rec.surrogate), []).append(rec)
    rows = []
    for (problem, surrogate), recs in groups.items():
        ok = [r for r in recs if r.ok]
        flags = []
        if len(ok) == 1:
            flags.append("single_run")
        if len(ok) < len(recs):
            flags.append(f"failed={len(recs) - len(ok)}")
        hv = np.array([r.hv_real for r in ok])
        hv_sur = np.array([r.hv_sur for r in ok])
        err = np.array([r.mse for r in ok])
        rows.append(
            {
                "problem": problem,
                "surrogate": surrogate,
                "hv_mean": _stat(np.mean, hv),
                "hv_std": _stat(np.std, hv),
                "mse_mean": _stat(np.mean, err),
                "mse_std": _stat(np.std, err),
                "n_runs": len(ok),
                "hv_sur_mean": _stat(np.mean, hv_sur),
                "hv_sur_std": _stat(np.std, hv_sur),
                "flags": ";".join(flags),
            }
        )
    return rows


def _stat(fn, values) -> float:
    return float(fn(values)) if len(values) else float("nan")


def front_csv(record: ResultRecord) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    fronts = record.fronts()
    k = record.F_real.shape[1]
    w.writerow(["mode"] + [f"f_{i + 1}" for i in range(k)])
    for mode in ("sur", "real"):
        for row in fronts[mode][np.lexsort(fronts[mode].T[::-1])]:
            w.writerow([mode] + [repr(float(v)) for v in row])
    return buf.getvalue()


def summary_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SUMMARY_FIELDS, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue()


def read_summary_csv(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        for k in ("hv_mean", "hv_std", "mse_mean", "mse_std", "hv_sur_mean", "hv_sur_std"):
            row[k] = float(row[k])
        row["n_runs"] = int(row["n_runs"])
    return rows


def emit_outputs(records: list[ResultRecord], aggregates: list[dict], out: Path, refs: dict) -> None:
    """Write per-run fronts and the aggregate summary (CSV and JSON).

    The summary deliberately leaves out wall-clock times so that identical
    configs give byte-identical summary files.
    """
    if not records:
        raise ConfigError("no records to emit")
    for rec in records:
        if rec.ok:
            d = cell_dir(out, *rec.key)
            d.mkdir(parents=True, exist_ok=True)
            _atomic_write(d / "front.csv", front_csv(rec))
    _atomic_write(out / "summary.csv", summary_csv(aggregates))
    runs = [
        {
            "problem": r.problem,
            "surrogate": r.surrogate,
            "seed": r.seed,
            "status": r.status,
            "error": r.error,
            "hv_real": r.hv_real,
            "hv_sur": r.hv_sur,
            "mse": r.mse,
            "n_evaluations": r.n_evaluations,
        }
        for r in records
    ]
    doc = {"reference_points": refs, "aggregates": aggregates, "runs": runs}
    _atomic_write(out / "summary.json", json.dumps(doc, indent=1, sort_keys=True, allow_nan=True))
