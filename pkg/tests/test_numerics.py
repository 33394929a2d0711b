import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gainbin import numerics
from gainbin.numerics import (
    batch_singular_values,
    condition_number,
    condition_status,
    index_sets,
    singular_values,
)

from oracles import condition_by_lapack, sv_2x2

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def _matrices(max_side=6):
    shapes = st.tuples(st.integers(1, max_side), st.integers(1, max_side))
    return shapes.flatmap(lambda s: arrays(np.float64, s, elements=finite))


@settings(max_examples=300, deadline=None)
@given(finite, finite, finite, finite)
def test_2x2_matches_closed_form(a, b, c, d):
    hi, lo = sv_2x2(a, b, c, d)
    got = singular_values([[a, b], [c, d]]).values
    scale = max(hi, 1e-300)
    assert got[0] == pytest.approx(hi, rel=1e-10, abs=1e-12 * scale)
    assert got[1] == pytest.approx(lo, rel=1e-10, abs=1e-10 * scale)


@settings(max_examples=150, deadline=None)
@given(_matrices())
def test_agrees_with_lapack(m):
    want = np.linalg.svd(m, compute_uv=False)
    got = singular_values(m).values
    assert got.shape == want.shape
    np.testing.assert_allclose(got, want, rtol=0, atol=1e-10 * max(want[0], 1.0))


@settings(max_examples=100, deadline=None)
@given(_matrices(5), st.randoms(use_true_random=False))
def test_invariant_under_permutation_and_transpose(m, rnd):
    rows = list(range(m.shape[0]))
    cols = list(range(m.shape[1]))
    rnd.shuffle(rows)
    rnd.shuffle(cols)
    base = singular_values(m).values
    tol = 1e-10 * max(base[0], 1.0)
    np.testing.assert_allclose(singular_values(m[rows][:, cols]).values, base, atol=tol)
    np.testing.assert_allclose(singular_values(m.T).values, base, atol=tol)


@settings(max_examples=100, deadline=None)
@given(_matrices(4), st.floats(1e-3, 1e3))
def test_homogeneous_in_scalar(m, c):
    base = singular_values(m).values
    np.testing.assert_allclose(singular_values(c * m).values, c * base,
                               atol=1e-10 * max(c * base[0], 1.0))


def test_descending_and_nonnegative(rng):
    for _ in range(50):
        m = rng.normal(size=(rng.integers(1, 7), rng.integers(1, 7)))
        s = singular_values(m).values
        assert np.all(s >= 0)
        assert np.all(np.diff(s) <= 0)


def test_worked_example_raw_and_scaled():
    g = np.array([[-0.1942, -0.0029], [0.1843, -0.0288]])
    s = singular_values(g)
    assert s.largest == pytest.approx(0.2683, abs=5e-4)
    assert s.smallest == pytest.approx(0.0229, abs=5e-4)
    assert condition_number(g) == pytest.approx(11.74, abs=0.05)
    assert condition_number(g) == pytest.approx(condition_by_lapack(g), rel=1e-12)


def test_identity_and_diagonal():
    assert condition_number(np.eye(4)) == 1.0
    assert condition_number(np.diag([4.0, 2.0, 1.0])) == pytest.approx(4.0, rel=1e-14)


def test_rank_deficient_is_inf():
    assert condition_status([[1.0, 2.0], [2.0, 4.0]]) == (math.inf, "singular")
    assert condition_status(np.zeros((3, 3))) == (math.inf, "zero_matrix")
    # a 1e-14 relative perturbation still sits below the tolerance
    cond, status = condition_status([[1.0, 2.0], [2.0, 4.0 + 4e-14]])
    assert status == "singular"


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        singular_values(np.empty((0, 3)))
    with pytest.raises(ValueError):
        singular_values([[1.0, np.nan]])


def test_index_sets_lexicographic():
    sets = index_sets(5, 3)
    assert len(sets) == 10
    assert sets[0].tolist() == [0, 1, 2]
    assert sets[-1].tolist() == [2, 3, 4]
    assert [tuple(r) for r in sets] == sorted(tuple(r) for r in sets)
    assert index_sets(2, 3).shape == (0, 3)


@pytest.mark.skipif(not numerics.HAVE_NUMBA, reason="numba not installed or disabled")
@pytest.mark.parametrize("k", [2, 3, 4])
def test_jit_and_numpy_paths_agree(rng, k):
    values = rng.normal(size=(8, 6))
    values[rng.random(values.shape) < 0.2] = 0.0
    rows, cols = index_sets(8, k), index_sets(6, k)
    a = batch_singular_values(values, rows, cols, use_jit=True)
    b = batch_singular_values(values, rows, cols, use_jit=False)
    assert a.shape == b.shape == (len(rows) * len(cols), k)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)


def test_batch_order_is_column_set_major(rng):
    values = rng.normal(size=(4, 4))
    rows, cols = index_sets(4, 2), index_sets(4, 2)
    sv = batch_singular_values(values, rows, cols, use_jit=False)
    n = 0
    for c in cols:
        for r in rows:
            want = np.linalg.svd(values[np.ix_(r, c)], compute_uv=False)
            np.testing.assert_allclose(sv[n], want, atol=1e-13)
            n += 1
