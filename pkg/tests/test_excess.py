"""Tests for threshold/excess extraction."""
import numpy as np
import pytest

from bayespot.excess import ExcessData, extract_excesses


def test_basic_example():
    out = extract_excesses([1, 2, 3, 4, 5], k=2)
    assert out.threshold == 3.0
    assert out.excesses.tolist() == [2.0, 1.0]
    assert out.n == 5 and out.k == 2
    assert out.concomitants is None


def test_all_equal_degenerate_tie():
    out = extract_excesses([7.0, 7.0, 7.0, 7.0], k=1)
    assert out.threshold == 7.0
    assert out.excesses.tolist() == [0.0]


def test_matches_full_sort_oracle():
    rng = np.random.default_rng(2718)
    y = rng.uniform(size=1000)
    out = extract_excesses(y, k=100)
    assert out.k == 100 and out.excesses.size == 100
    assert out.excesses.min() >= 0.0
    ys = np.sort(y)
    assert out.threshold == ys[1000 - 100 - 1]
    np.testing.assert_allclose(out.excesses, ys[-100:][::-1] - ys[899], rtol=0, atol=0)


def test_descending_order_and_tie_rule():
    y = np.array([5.0, 3.0, 5.0, 1.0, 2.0])
    X = np.array([[0.1], [0.2], [0.3], [0.4], [0.5]])
    out = extract_excesses(y, k=2, X=X)
    # ascending order stat with index ties: 1,2,3,5(idx0),5(idx2); threshold=3
    assert out.threshold == 3.0
    assert out.excesses.tolist() == [2.0, 2.0]
    # largest-first means the later original index (0-based 2) comes first
    assert out.concomitants[:, 0].tolist() == [0.3, 0.1]


def test_permutation_invariance_distinct_values():
    rng = np.random.default_rng(9)
    y = rng.normal(size=60)
    X = rng.uniform(size=(60, 2))
    base = extract_excesses(y, k=13, X=X)
    perm = rng.permutation(60)
    shuffled = extract_excesses(y[perm], k=13, X=X[perm])
    assert shuffled.threshold == base.threshold
    np.testing.assert_array_equal(shuffled.excesses, base.excesses)
    np.testing.assert_array_equal(shuffled.concomitants, base.concomitants)


def test_shift_property():
    rng = np.random.default_rng(10)
    y = rng.integers(0, 1000, size=200).astype(float)  # exact arithmetic
    a = extract_excesses(y, k=20)
    b = extract_excesses(y + 37.0, k=20)
    assert b.threshold == a.threshold + 37.0
    np.testing.assert_array_equal(b.excesses, a.excesses)


def test_k_range_errors():
    with pytest.raises(ValueError):
        extract_excesses([1.0, 2.0], k=2)
    with pytest.raises(ValueError):
        extract_excesses([1.0, 2.0], k=0)
    with pytest.raises(ValueError):
        extract_excesses([1.0, 2.0, 3.0], k=-1)


def test_covariate_validation():
    y = [1.0, 2.0, 3.0, 4.0]
    with pytest.raises(ValueError, match="4 rows"):
        extract_excesses(y, k=2, X=np.zeros((3, 1)))
    with pytest.raises(ValueError, match="row 2"):
        extract_excesses(y, k=2, X=np.array([[0.1], [0.2], [1.3], [0.4]]))
    with pytest.raises(ValueError, match="row 0"):
        extract_excesses(y, k=2, X=np.array([[-0.1], [0.2], [0.3], [0.4]]))


def test_excess_data_invariants():
    with pytest.raises(ValueError):
        ExcessData(threshold=0.0, excesses=np.array([1.0, -0.5]), n=10, k=2)
    with pytest.raises(ValueError):
        ExcessData(threshold=0.0, excesses=np.array([1.0]), n=10, k=2)
    with pytest.raises(ValueError):
        ExcessData(threshold=0.0, excesses=np.array([1.0, 2.0]), n=2, k=2)
    with pytest.raises(ValueError):
        ExcessData(threshold=0.0, excesses=np.ones(3), n=10, k=3, concomitants=np.zeros((2, 1)))


def test_concomitant_rows_follow_observations():
    # covariate equals a known function of y so pairing is checkable
    rng = np.random.default_rng(3)
    y = rng.uniform(size=300)
    X = np.column_stack([y, 1.0 - y])
    out = extract_excesses(y, k=50, X=X)
    np.testing.assert_allclose(out.concomitants[:, 0], out.excesses + out.threshold, atol=1e-15)
    np.testing.assert_allclose(out.concomitants[:, 1], 1.0 - (out.excesses + out.threshold), atol=1e-15)
