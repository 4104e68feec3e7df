import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from offmoo.core import ContractError
from offmoo.metrics import (
    UnsupportedDimensionError,
    derive_reference_point,
    hypervolume_2d,
    mse,
    non_dominated_subset,
)

from oracles import monte_carlo_hv


def test_examples():
    assert hypervolume_2d([[0, 0]], [1, 1]) == 1.0
    assert hypervolume_2d([[0, 1], [1, 0]], [2, 2]) == 3.0
    assert hypervolume_2d([[0, 1], [1, 0], [1.5, 1.5]], [2, 2]) == 3.0
    assert hypervolume_2d([[2, 0], [3, 3]], [2, 2]) == 0.0
    assert hypervolume_2d(np.empty((0, 2)), [1, 1]) == 0.0


def test_three_objectives_rejected():
    with pytest.raises(UnsupportedDimensionError):
        hypervolume_2d([[0, 0, 0]], [1, 1, 1])


def test_agrees_with_monte_carlo():
    rng = np.random.default_rng(11)
    for _ in range(20):
        n = int(rng.integers(1, 51))
        t = rng.random(n)
        front = np.column_stack([t, (1 - t**rng.uniform(0.5, 2)) + 0.2 * rng.random(n)])
        ref = front.max(axis=0) + 0.1
        exact = hypervolume_2d(front, ref)
        est = monte_carlo_hv(front, ref, 1_000_000, rng)
        assert abs(est - exact) / exact < 0.01


pts = st.lists(st.tuples(st.floats(0, 10), st.floats(0, 10)), min_size=1, max_size=30)


@settings(max_examples=200)
@given(pts, st.tuples(st.floats(0, 12), st.floats(0, 12)), st.integers(0, 1000))
def test_monotone_and_permutation_invariant(front, extra, seed):
    F = np.array(front)
    ref = np.array([11.0, 11.0])
    hv = hypervolume_2d(F, ref)
    assert hv >= 0
    assert hypervolume_2d(np.vstack([F, extra]), ref) >= hv - 1e-9
    perm = np.random.default_rng(seed).permutation(len(F))
    assert hypervolume_2d(F[perm], ref) == pytest.approx(hv, rel=1e-12, abs=1e-12)
    assert hypervolume_2d(non_dominated_subset(F), ref) == pytest.approx(hv, rel=1e-12, abs=1e-12)


def test_dominating_point_strictly_increases():
    assert hypervolume_2d([[0.5, 0.5], [1, 1]], [2, 2]) > hypervolume_2d([[1, 1]], [2, 2])


def test_mse_examples():
    assert mse([[1, 2]], [[1, 2]]) == 0.0
    assert mse([[0, 0]], [[1, 1]]) == 1.0
    assert mse([[0, 0], [2, 0]], [[1, 1], [0, 0]]) == 1.5
    with pytest.raises(ContractError):
        mse([[0, 0]], [[0, 0, 0]])


# squares of tiny differences underflow to 0, so draw from a grid of representable values
grid = st.integers(-10**6, 10**6).map(lambda i: i / 1024)


@given(st.lists(grid, min_size=4, max_size=4), st.lists(grid, min_size=4, max_size=4))
def test_mse_symmetric_zero_iff_equal(a, b):
    a, b = np.reshape(a, (2, 2)), np.reshape(b, (2, 2))
    assert mse(a, b) == mse(b, a)
    assert (mse(a, b) == 0) == np.array_equal(a, b)


def test_reference_point_rules():
    np.testing.assert_allclose(derive_reference_point([[10, 1], [2, 4]]), [11, 4.4])
    np.testing.assert_allclose(derive_reference_point([[-2, -5]], [[-3, -4]]), [-1.8, -3.6])
    with pytest.warns(UserWarning, match="degenerate"):
        ref = derive_reference_point([[0.0, 0.0]])
    assert np.array_equal(ref, [0.0, 0.0])
    with pytest.raises(ContractError):
        derive_reference_point(np.empty((0, 2)))


def test_reference_point_skips_non_finite_rows():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ref = derive_reference_point([[1.0, 2.0], [np.inf, 0.0], [0.0, 3.0]])
    np.testing.assert_allclose(ref, [1.1, 3.3])
