import json
from pathlib import Path

import numpy as np
import pytest

import offmoo.experiment as ex
from offmoo.experiment import (
    OUTPUT_ENV,
    ConfigError,
    ExperimentConfig,
    ResultRecord,
    aggregate,
    config_from_dict,
    parse_config,
    read_summary_csv,
    resolve_output_dir,
    run_experiment,
)

TINY = {
    "problems": ["dtlz2"],
    "surrogates": ["kriging"],
    "seeds": [1, 2, 3],
    "engine": {"pop_size": 12, "generations": 4},
    "training": {"n_restarts": 2},
}


def tiny(**overrides):
    return config_from_dict({**TINY, **overrides})


def test_minimal_config_defaults(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("problems: [dtlz2]\nsurrogates: [kriging]\n")
    cfg = parse_config(path)
    assert cfg.seeds == list(range(1, 31))
    assert cfg.tau == 0.9 and cfg.engine.pop_size == 100 and cfg.engine.generations == 100
    assert cfg.dataset_seed == 42


@pytest.mark.parametrize(
    "data,needle",
    [
        ({"problems": ["dtlz2"], "surrogates": ["gp"]}, "unknown surrogate 'gp'"),
        ({"problems": ["dtlz2"], "surrogates": ["qr"], "seeds": []}, "seeds must be non-empty"),
        ({"problems": ["zdt1"], "surrogates": ["qr"]}, "unknown problem"),
        ({"problems": ["dtlz2"], "surrogates": ["qr"], "engine": {"popsize": 3}}, "engine.popsize: unknown key"),
    ],
)
def test_config_errors_name_location(data, needle):
    with pytest.raises(ConfigError, match=needle):
        config_from_dict(data, "exp.yaml")


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        parse_config(tmp_path / "nope.yaml")


def test_output_dir_precedence(monkeypatch):
    cfg = tiny(output_dir="from_config")
    monkeypatch.delenv(OUTPUT_ENV, raising=False)
    assert str(resolve_output_dir(cfg)) == "from_config"
    monkeypatch.setenv(OUTPUT_ENV, "from_env")
    assert str(resolve_output_dir(cfg)) == "from_env"
    assert str(resolve_output_dir(cfg, "from_flag")) == "from_flag"


@pytest.fixture(scope="module")
def finished(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    records, rows = run_experiment(tiny(), out)
    return out, records, rows


def test_cardinality_and_layout(finished):
    out, records, rows = finished
    assert len(records) == 3 and len(rows) == 1
    for seed in (1, 2, 3):
        cell = out / "dtlz2" / "kriging" / f"seed_{seed}"
        assert (cell / "result.json").exists()
        header = (cell / "front.csv").read_text().splitlines()[0]
        assert header == "mode,f_1,f_2"
    for name in ("summary.csv", "summary.json", "reference_points.json"):
        assert (out / name).exists()


def test_record_metrics_present(finished):
    _, records, _ = finished
    rec = records[0]
    assert rec.ok and rec.hv_real >= 0 and rec.hv_sur >= 0 and rec.mse >= 0
    assert rec.n_evaluations == 48


def test_front_csv_modes(finished):
    out, records, _ = finished
    lines = (out / "dtlz2" / "kriging" / "seed_1" / "front.csv").read_text().splitlines()[1:]
    modes = {line.split(",")[0] for line in lines}
    assert modes == {"sur", "real"}
    real = np.array([[float(v) for v in line.split(",")[1:]] for line in lines if line.startswith("real")])
    np.testing.assert_array_equal(np.sort(real, axis=0), np.sort(records[0].fronts()["real"], axis=0))


def test_aggregates_recompute_exactly(finished):
    out, records, rows = finished
    hv = [r.hv_real for r in records]
    assert rows[0]["hv_mean"] == float(np.mean(hv))
    assert rows[0]["hv_std"] == float(np.std(hv))  # population formula
    assert rows[0]["n_runs"] == 3
    ref = json.loads((out / "reference_points.json").read_text())["dtlz2"]
    reloaded = []
    for s in (1, 2, 3):
        doc = json.loads((out / "dtlz2" / "kriging" / f"seed_{s}" / "result.json").read_text())
        reloaded.append(ex.score(ResultRecord.from_json(doc), ref))
    assert aggregate(reloaded) == rows


def test_summary_csv_round_trip(finished):
    out, _, rows = finished
    parsed = read_summary_csv(out / "summary.csv")
    assert parsed == rows


def test_single_seed_flagged(tmp_path):
    _, rows = run_experiment(tiny(seeds=[5]), tmp_path)
    assert rows[0]["hv_std"] == 0.0 and rows[0]["flags"] == "single_run"


def test_resume_skips_completed_and_matches(finished, tmp_path, monkeypatch):
    out, _, _ = finished
    first = (out / "summary.csv").read_bytes()
    (out / "dtlz2" / "kriging" / "seed_2" / "result.json").unlink()
    calls = []
    real_run_cell = ex.run_cell

    def counting(cfg, *key):
        calls.append(key)
        return real_run_cell(cfg, *key)

    monkeypatch.setattr(ex, "run_cell", counting)
    run_experiment(tiny(), out)
    assert calls == [("dtlz2", "kriging", 2)]
    assert (out / "summary.csv").read_bytes() == first


def test_failures_recorded_without_abort(tmp_path, monkeypatch):
    real_run = ex.run

    def flaky(problem, surrogate, cfg, *args):
        if cfg.seed == 2:
            raise ex.RunError("surrogate fit failed: injected")
        return real_run(problem, surrogate, cfg, *args)

    monkeypatch.setattr(ex, "run", flaky)
    records, rows = run_experiment(tiny(), tmp_path)
    assert [r.status for r in records] == ["ok", "failed", "ok"]
    assert "injected" in records[1].error
    assert rows[0]["n_runs"] == 2 and rows[0]["flags"] == "failed=1"
    # a failed cell is retried on the next invocation
    monkeypatch.setattr(ex, "run", real_run)
    records, rows = run_experiment(tiny(), tmp_path)
    assert all(r.ok for r in records) and rows[0]["flags"] == ""


def test_unwritable_output_dir(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(ConfigError, match="cannot create output directory"):
        run_experiment(tiny(), blocker / "sub")


def test_configured_reference_point_used(tmp_path):
    _, rows = run_experiment(tiny(seeds=[1], reference_points={"dtlz2": [3.0, 3.0]}), tmp_path)
    assert json.loads((tmp_path / "reference_points.json").read_text()) == {"dtlz2": [3.0, 3.0]}


def test_parallel_matches_serial(finished, tmp_path):
    out, _, _ = finished
    run_experiment(tiny(), tmp_path, workers=2)
    assert (tmp_path / "summary.csv").read_bytes() == (out / "summary.csv").read_bytes()


def test_config_schema_is_strict():
    assert ExperimentConfig.model_config["extra"] == "forbid"


@pytest.mark.parametrize("name", ["paper.yaml", "smoke.yaml"])
def test_shipped_configs_parse(name):
    cfg = parse_config(Path(__file__).parent.parent / "configs" / name)
    assert cfg.problems and cfg.surrogates
