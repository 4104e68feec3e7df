import json

import numpy as np
import pytest

from offmoo.core import ContractError, OfflineDataset
from offmoo.problems import get_problem
from offmoo.sampling import SamplingConfig, build_offline_dataset
from offmoo.surrogates import (
    SURROGATE_KINDS,
    ModelFitError,
    SurrogateSet,
    TrainConfig,
    fit_model,
    fit_surrogates,
    load_surrogates,
    save_surrogates,
)
from offmoo.surrogates.kriging import KrigingModel
from offmoo.surrogates.neural import DropoutModel, QuantileModel

FAST = TrainConfig(epochs=60, n_restarts=2)


@pytest.fixture(scope="module")
def dataset():
    return build_offline_dataset(get_problem("kursawe"), SamplingConfig(n_samples=40))


@pytest.fixture(scope="module")
def fitted(dataset):
    return {kind: fit_surrogates(kind, dataset, FAST) for kind in SURROGATE_KINDS}


@pytest.mark.parametrize("kind", SURROGATE_KINDS)
def test_predict_shapes_and_determinism(fitted, kind):
    sset = fitted[kind]
    X = np.random.default_rng(0).uniform(-5, 5, (25, 3))
    a = sset.predict(X, seed=(3, 7))
    b = sset.predict(X, seed=(3, 7))
    assert len(a) == 2
    for pa, pb in zip(a, b):
        assert pa.center.shape == pa.spread.shape == (25,)
        assert np.array_equal(pa.center, pb.center) and np.array_equal(pa.spread, pb.spread)
        assert np.all(pa.spread >= 0)


@pytest.mark.parametrize("kind", ["mcd", "bnn"])
def test_sampling_models_depend_on_seed(fitted, kind):
    X = np.zeros((4, 3))
    a = fitted[kind].predict(X, seed=1)[0]
    b = fitted[kind].predict(X, seed=2)[0]
    assert not np.array_equal(a.center, b.center)


@pytest.mark.parametrize("kind", SURROGATE_KINDS)
def test_save_load_round_trip(fitted, kind, tmp_path):
    path = tmp_path / f"{kind}.json"
    save_surrogates(fitted[kind], path)
    doc = json.loads(path.read_text())
    assert doc["kind"] == kind and doc["format"].startswith("offmoo-surrogates/")
    back = load_surrogates(path)
    X = np.random.default_rng(1).uniform(-5, 5, (10, 3))
    for p, q in zip(fitted[kind].predict(X, 5), back.predict(X, 5)):
        assert np.array_equal(p.center, q.center) and np.array_equal(p.spread, q.spread)


def test_load_rejects_unknown_format(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"format": "other/9", "kind": "kriging", "tau": 0.9, "models": []}))
    with pytest.raises(ContractError):
        load_surrogates(path)


def test_fitting_does_not_mutate_dataset(dataset):
    X, Y = dataset.X.copy(), dataset.Y.copy()
    for kind in SURROGATE_KINDS:
        fit_model(kind, dataset, 1, FAST)
    assert np.array_equal(X, dataset.X) and np.array_equal(Y, dataset.Y)


def test_quantile_heads_never_cross():
    rng = np.random.default_rng(0)
    X = rng.random((50, 2))
    model = QuantileModel.fit(X, X[:, 0] + rng.normal(scale=0.2, size=50), epochs=100)
    Xq = rng.uniform(-50, 50, (2000, 2))  # far outside the data too
    median, gap = model.predict(Xq)
    assert np.all(gap >= 0) and np.all(median + gap >= median)


def test_mcd_moment_identity_on_captured_passes():
    rng = np.random.default_rng(2)
    X = rng.random((30, 2))
    model = DropoutModel.fit(X, np.sin(3 * X[:, 0]), epochs=100, n_passes=100)
    Xq = rng.random((15, 2))
    samples = model.sample_passes(Xq, np.random.default_rng(4))
    mean, spread = model.predict(Xq, np.random.default_rng(4))
    assert samples.shape == (100, 15)
    np.testing.assert_allclose(mean, samples.mean(axis=0), rtol=1e-14)
    np.testing.assert_allclose(
        spread**2, np.mean(samples**2, axis=0) - np.mean(samples, axis=0) ** 2, rtol=1e-9, atol=1e-14
    )


def test_kriging_constant_column_through_fit_model():
    X = np.random.default_rng(0).random((20, 2))
    ds = OfflineDataset(X, np.column_stack([X.sum(axis=1), np.full(20, -1.5)]))
    model = fit_model("kriging", ds, 1)
    mu, sd = model.predict(X)
    assert np.all(mu == -1.5) and np.all(sd == 0)


def test_kriging_escalates_then_fails(monkeypatch):
    import offmoo.surrogates.kriging as kr

    def always_fail(*args, **kwargs):
        raise np.linalg.LinAlgError("not positive definite")

    monkeypatch.setattr(kr, "cholesky", always_fail)
    with pytest.raises(ModelFitError):
        KrigingModel.from_hyperparameters(None, np.zeros((3, 1)), np.zeros(3), 1.0, 1.0, 1e-3)


def test_unknown_kind_and_bad_objective(dataset):
    with pytest.raises(ContractError):
        fit_model("gp", dataset, 0)
    with pytest.raises(ContractError):
        fit_model("kriging", dataset, 2)


def test_set_rejects_wrong_model_class(fitted):
    with pytest.raises(ContractError):
        SurrogateSet("qr", fitted["kriging"].models)
