import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from offmoo.core import ContractError
from offmoo.problems import PROBLEM_NAMES, UnknownProblemError, evaluate_true, get_problem


def test_catalog_contents():
    assert set(PROBLEM_NAMES) == {
        *(f"dtlz{i}" for i in range(1, 8)),
        "kursawe",
        "bnh",
        "welded_beam",
        "truss2d",
    }
    expected = {"kursawe": (3, 2, 0), "bnh": (2, 2, 2), "welded_beam": (4, 2, 4), "truss2d": (3, 2, 1)}
    for name in PROBLEM_NAMES:
        p = get_problem(name)
        dims = (p.n_var, p.n_obj, p.n_constr)
        assert dims == expected.get(name, (10, 2, 0))


def test_lookup_unknown_lists_valid_names():
    with pytest.raises(UnknownProblemError) as err:
        get_problem("modact_cs1")
    assert "dtlz1" in str(err.value) and "truss2d" in str(err.value)


def test_lookup_returns_fresh_instance():
    assert get_problem("dtlz3") is not get_problem("dtlz3")


def test_dtlz1_center():
    ev = evaluate_true(get_problem("dtlz1"), np.full(10, 0.5))
    np.testing.assert_allclose(ev.objectives, [0.25, 0.25], atol=1e-12)


def test_dtlz2_corner():
    x = np.full(10, 0.5)
    x[0] = 0.0
    ev = evaluate_true(get_problem("dtlz2"), x)
    np.testing.assert_allclose(ev.objectives, [1.0, 0.0], atol=1e-15)


def test_kursawe_origin():
    ev = evaluate_true(get_problem("kursawe"), [0.0, 0.0, 0.0])
    np.testing.assert_allclose(ev.objectives, [-20.0, 0.0])


def test_bnh_by_hand():
    ev = evaluate_true(get_problem("bnh"), [0.0, 0.0])
    np.testing.assert_allclose(ev.objectives, [0.0, 50.0])
    assert ev.feasible
    # (0, 3): f1 = 4*9 = 36, f2 = 25 + 4 = 29; g1 = 25 + 9 - 25 = 9 > 0
    ev = evaluate_true(get_problem("bnh"), [0.0, 3.0])
    np.testing.assert_allclose(ev.objectives, [36.0, 29.0])
    np.testing.assert_allclose(ev.constraint_violations, [9.0, 0.0])


def _welded_beam_scalar(h, l, t, b):
    cost = 1.10471 * h * h * l + 0.04811 * t * b * (14.0 + l)
    defl = 2.1952 / (t**3 * b)
    tau_p = 6000 / (math.sqrt(2) * h * l)
    m = 6000 * (14 + l / 2)
    r = math.sqrt(l * l / 4 + ((h + t) / 2) ** 2)
    j = 2 * (math.sqrt(2) * h * l * (l * l / 12 + ((h + t) / 2) ** 2))
    tau_pp = m * r / j
    tau = math.sqrt(tau_p**2 + 2 * tau_p * tau_pp * l / (2 * r) + tau_pp**2)
    sigma = 504000 / (t * t * b)
    pc = 64746.022 * (1 - 0.0282346 * t) * t * b**3
    g = [(tau - 13600) / 13600, (sigma - 30000) / 30000, (h - b) / 4.875, (6000 - pc) / 6000]
    return [cost, defl], g


def test_welded_beam_against_scalar_transcription():
    p = get_problem("welded_beam")
    for x in [(0.5, 5.0, 5.0, 0.5), (1.0, 2.0, 8.0, 2.0), (0.2444, 6.2187, 8.2915, 0.2444)]:
        f, g = _welded_beam_scalar(*x)
        ev = p.evaluate(x)
        np.testing.assert_allclose(ev.objectives, f, rtol=1e-12)
        np.testing.assert_allclose(ev.constraint_violations, np.maximum(g, 0), rtol=1e-12, atol=1e-15)


def test_welded_beam_known_design():
    # Deb's single-objective optimum: cost ~ 2.381 with all main constraints near-active
    ev = get_problem("welded_beam").evaluate([0.2444, 6.2187, 8.2915, 0.2444])
    assert ev.objectives[0] == pytest.approx(2.3815, abs=1e-3)
    assert np.all(ev.constraint_violations < 1e-3)


def test_truss2d_pinned_point():
    ev = get_problem("truss2d").evaluate([0.005, 0.005, 2.0])
    volume = 0.005 * math.sqrt(20) + 0.005 * math.sqrt(5)
    stress = max(20 * math.sqrt(20) / (2 * 0.005), 80 * math.sqrt(5) / (2 * 0.005))
    np.testing.assert_allclose(ev.objectives, [volume, stress], rtol=1e-12)
    assert ev.feasible
    ev = get_problem("truss2d").evaluate([0.0001, 0.0001, 1.0])
    assert not ev.feasible  # stress far above the 1e5 cap


def test_out_of_bounds_rejected():
    with pytest.raises(ContractError):
        get_problem("dtlz2").evaluate(np.full(10, 1.5))


def test_dtlz2_pareto_points_on_unit_circle():
    p = get_problem("dtlz2")
    X = np.full((200, 10), 0.5)
    X[:, 0] = np.linspace(0, 1, 200)
    F = p.objectives(X)
    np.testing.assert_allclose(np.sum(F**2, axis=1), 1.0, atol=1e-12)


def test_dtlz5_equals_dtlz2_for_two_objectives():
    X = np.random.default_rng(0).random((1000, 10))
    diff = get_problem("dtlz5").objectives(X) - get_problem("dtlz2").objectives(X)
    assert np.max(np.abs(diff)) < 1e-12


def test_dtlz7_first_objective_is_x1():
    X = np.random.default_rng(1).random((100, 10))
    np.testing.assert_array_equal(get_problem("dtlz7").objectives(X)[:, 0], X[:, 0])


def test_dtlz4_uses_alpha_100():
    x = np.full(10, 0.5)
    x[0] = 0.99
    f = get_problem("dtlz4").evaluate(x).objectives
    theta = 0.99**100 * math.pi / 2
    np.testing.assert_allclose(f, [math.cos(theta), math.sin(theta)], rtol=1e-12)


@settings(max_examples=200)
@given(st.lists(st.floats(0, 1), min_size=10, max_size=10), st.sampled_from(["dtlz1", "dtlz3"]))
def test_dtlz1_dtlz3_non_negative(x, name):
    assert np.all(get_problem(name).evaluate(x).objectives >= 0)


@pytest.mark.parametrize("name", PROBLEM_NAMES)
def test_evaluators_are_pure(name):
    p = get_problem(name)
    X = p.lower + np.random.default_rng(3).random((20, p.n_var)) * (p.upper - p.lower)
    a = (p.objectives(X), p.violations(X))
    b = (p.objectives(X), p.violations(X))
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    assert np.all(np.isfinite(a[0]))
