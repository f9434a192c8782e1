import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gmc.estimators import (
    block_values,
    empirical_central_p_moment,
    empirical_mean,
    median,
    median_of_block_statistic,
    unbiased_variance,
)
from gmc.tuner import median_trick_tail_bound


def test_empirical_mean_examples():
    assert empirical_mean([5, 5, 5]) == 5
    assert empirical_mean([0, 2]) == 1
    assert empirical_mean([1, 2, 3, 4]) == 2.5


@pytest.mark.parametrize("p", [1, 1.5, 2, 3.7])
def test_central_moment_of_constant_block(p):
    assert empirical_central_p_moment([5, 5, 5], p) == 0


def test_central_moment_examples():
    assert empirical_central_p_moment([0, 2], 1) == 1
    assert empirical_central_p_moment([0, 0, 3], 2) == 2


def test_unbiased_variance_examples():
    assert unbiased_variance([0, 2]) == 2
    assert unbiased_variance([4.5] * 7) == 0
    assert unbiased_variance([1, 2, 3]) == 1
    with pytest.raises(ValueError):
        unbiased_variance([1])


def test_median_examples():
    assert median([3]) == 3
    assert median([1, 5, 2]) == 2
    assert median([7, 7, 1, 9, 7]) == 7
    with pytest.raises(ValueError):
        median([1, 2])
    with pytest.raises(ValueError):
        median([])


def test_median_of_blocks_examples():
    assert median_of_block_statistic([0, 2, 10, 10, 0, 0], 3, 2, "mean") == 1
    assert median_of_block_statistic([0, 2, 5, 5, 0, 4], 3, 2, "central_moment", 1) == 1
    with pytest.raises(ValueError):
        median_of_block_statistic([0, 1, 2, 3], 2, 2)
    with pytest.raises(ValueError):
        median_of_block_statistic([0, 1, 2], 3, 2)


floats = st.floats(-1e3, 1e3, allow_nan=False)


@settings(max_examples=100, deadline=None)
@given(x=st.lists(floats, min_size=1, max_size=40))
def test_single_block_equals_plain_statistic(x):
    m = len(x)
    assert median_of_block_statistic(x, 1, m, "mean") == empirical_mean(x)
    assert median_of_block_statistic(x, 1, m, "central_moment", 1.5) == pytest.approx(
        empirical_central_p_moment(x, 1.5), rel=1e-12, abs=1e-300)
    if m >= 2:
        assert median_of_block_statistic(x, 1, m, "variance") == pytest.approx(
            unbiased_variance(x), rel=1e-12, abs=1e-300)


@settings(max_examples=100, deadline=None)
@given(x=st.lists(st.integers(-1000, 1000), min_size=2, max_size=30), c=st.integers(-10**4, 10**4),
       p=st.sampled_from([1, 2, 3]))
def test_central_moment_shift_invariance(x, c, p):
    # integer data keeps every residual exact, so the shift is invisible
    a = empirical_central_p_moment(x, p)
    b = empirical_central_p_moment([v + c for v in x], p)
    assert b == pytest.approx(a, rel=1e-12, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(x=st.lists(floats, min_size=2, max_size=30), a=st.floats(-50, 50).filter(lambda v: abs(v) > 1e-3),
       p=st.floats(1, 4))
def test_scale_equivariance(x, a, p):
    y = [a * v for v in x]
    assert empirical_mean(y) == pytest.approx(a * empirical_mean(x), rel=1e-9, abs=1e-9)
    assert empirical_central_p_moment(y, p) == pytest.approx(
        abs(a) ** p * empirical_central_p_moment(x, p), rel=1e-8, abs=1e-6)


@settings(max_examples=100, deadline=None)
@given(x=st.lists(floats, min_size=1, max_size=41).filter(lambda v: len(v) % 2), data=st.data())
def test_median_permutation_invariance(x, data):
    perm = data.draw(st.permutations(x))
    assert median(perm) == median(x) == sorted(x)[len(x) // 2]


def test_block_layout_is_consecutive():
    x = np.arange(12.0)
    assert block_values(x, 3, 4).tolist() == [1.5, 5.5, 9.5]


# -- median trick: exact binomial enumeration --------------------------------

def exact_tail(alpha: Fraction, k: int) -> Fraction:
    """P{Bin(k, alpha) >= (k+1)/2}: majority of the k blocks fail."""
    return sum(math.comb(k, j) * alpha**j * (1 - alpha) ** (k - j) for j in range((k + 1) // 2, k + 1))


@pytest.mark.parametrize("alpha", [Fraction(1, 20), Fraction(1, 10), Fraction(1, 4), Fraction(2, 5)])
def test_median_trick_tail_bound_holds(alpha):
    for k in range(1, 22, 2):
        assert float(exact_tail(alpha, k)) <= median_trick_tail_bound(float(alpha), k)


def test_median_trick_spot_value():
    assert exact_tail(Fraction(1, 4), 3) == Fraction(5, 32)
    assert median_trick_tail_bound(0.25, 3) == pytest.approx(0.32476, abs=1e-5)


@pytest.mark.parametrize("k", [1, 3, 5, 7, 9])
def test_median_outside_interval_by_pattern_enumeration(k):
    # good blocks land at 0, failed ones at +1 or -1; enumerate every pattern
    alpha = Fraction(1, 4)
    outside = Fraction(0)
    for pattern in itertools.product((-1, 0, 1), repeat=k):
        pr = Fraction(1)
        for v in pattern:
            pr *= alpha / 2 if v else 1 - alpha
        if median(pattern) != 0:
            outside += pr
    assert outside <= exact_tail(alpha, k)
    assert float(outside) <= median_trick_tail_bound(float(alpha), k)


# -- Marcinkiewicz-Zygmund constants for Rademacher sums ------------------------

@pytest.mark.parametrize("m", range(1, 13))
def test_rademacher_block_mean_norms(m):
    patterns = ((np.arange(2**m)[:, None] >> np.arange(m)) & 1) * 2 - 1
    means = block_values(patterns.astype(float), 2**m, m, "mean")
    # each block mean is S/m with S an integer; recover S exactly
    sums = np.rint(means * m).astype(np.int64)
    assert np.array_equal(sums, patterns.sum(axis=1))
    second = Fraction(int(np.sum(sums**2)), 2**m * m**2)
    fourth = Fraction(int(np.sum(sums**4)), 2**m * m**4)
    assert second == Fraction(1, m)
    assert fourth <= Fraction(3, m**2)
