import itertools
import math

import numpy as np
import pytest

from polyexp.algorithms import polyexp_init, polyexp_means, polyexp_update
from polyexp.oracle import (
    ReferenceSizeError,
    brute_force_abs_sign_sum,
    enumerate_cube,
    exact_estimator_expectation,
    exp2_exact_marginals,
    expected_abs_rademacher_sum,
    expected_max_linear_gain,
    log_partition_both_sides,
)


def polyexp_after(history, eta, n):
    s = polyexp_init(n, eta)
    for row in history:
        s = polyexp_update(s, row)
    return polyexp_means(s)


class TestEnumerateCube:
    def test_small(self):
        assert [p.tolist() for p in enumerate_cube(1)] == [[0], [1]]
        pts = enumerate_cube(2)
        assert len({tuple(p) for p in pts}) == 4

    def test_bit_order(self):
        pts = enumerate_cube(3)
        for k, p in enumerate(pts):
            assert sum(int(b) << i for i, b in enumerate(p)) == k

    def test_ten(self):
        assert len(enumerate_cube(10)) == 1024

    def test_cap(self):
        with pytest.raises(ReferenceSizeError):
            enumerate_cube(21)


class TestLogPartitionIdentity:
    def test_empty(self):
        lhs, rhs = log_partition_both_sides([], 0.5, 3)
        assert lhs == pytest.approx(3 * math.log(2), abs=1e-15)
        assert rhs == pytest.approx(3 * math.log(2), abs=1e-15)

    def test_single_coordinate(self):
        eta, c = 0.8, 0.35
        lhs, rhs = log_partition_both_sides([[c]], eta)
        expected = math.log(1 + math.exp(-eta * c))
        assert lhs == pytest.approx(expected, abs=1e-15)
        assert rhs == pytest.approx(expected, abs=1e-15)

    def test_random_histories(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            lhs, rhs = log_partition_both_sides(rng.uniform(-1, 1, (30, 8)), 0.6)
            assert abs(lhs - rhs) <= 1e-9

    def test_cap(self):
        with pytest.raises(ReferenceSizeError):
            log_partition_both_sides(np.zeros((1, 13)), 0.1)


class TestExp2Marginals:
    def test_empty(self):
        np.testing.assert_allclose(exp2_exact_marginals([], 1.0, 4), 0.5, atol=1e-15)

    def test_match_polyexp(self):
        rng = np.random.default_rng(1)
        for n in range(1, 11):
            hist = rng.uniform(-1, 1, (20, n))
            np.testing.assert_allclose(exp2_exact_marginals(hist, 0.4, n), polyexp_after(hist, 0.4, n),
                                       rtol=0, atol=1e-9)

    def test_factorization(self):
        m = exp2_exact_marginals([[0.9, 0.0]], 1.0, 2)
        assert m[1] == pytest.approx(0.5, abs=1e-15)


class TestEstimatorExpectation:
    def test_zero_loss(self):
        np.testing.assert_array_equal(exact_estimator_expectation([0.3, 0.4], 0.1, [0.0, 0.0]), 0.0)

    def test_hand_case(self):
        assert exact_estimator_expectation([0.5], 0.2, [0.7])[0] == pytest.approx(0.7, abs=1e-15)

    def test_random(self):
        rng = np.random.default_rng(2)
        worst = 0.0
        for _ in range(100):
            n = int(rng.integers(1, 7))
            l = rng.uniform(-1, 1, n)
            got = exact_estimator_expectation(rng.uniform(0, 1, n), rng.uniform(0.01, 0.99), l)
            worst = max(worst, np.max(np.abs(got - l)))
        assert worst <= 1e-9

    def test_cap(self):
        with pytest.raises(ReferenceSizeError):
            exact_estimator_expectation(np.full(9, 0.5), 0.1, np.zeros(9))


def enumerate_sign_sum(T):
    """Fraction-exact E|sum Y| over all 2^T sign vectors, by itertools."""
    total = sum(abs(sum(y)) for y in itertools.product((-1, 1), repeat=T))
    return total / 2**T


class TestSignSum:
    def test_hand_values(self):
        assert expected_abs_rademacher_sum(2) == 1.0
        assert expected_abs_rademacher_sum(4) == 1.5

    @pytest.mark.parametrize("T", range(1, 15))
    def test_against_itertools(self, T):
        assert expected_abs_rademacher_sum(T) == enumerate_sign_sum(T)
        assert brute_force_abs_sign_sum(T) == enumerate_sign_sum(T)

    def test_odd_cap(self):
        assert expected_abs_rademacher_sum(23) == brute_force_abs_sign_sum(23)
        with pytest.raises(ValueError):
            expected_abs_rademacher_sum(25)

    def test_growth(self):
        for T in range(2, 1001, 2):
            r = expected_abs_rademacher_sum(T) / math.sqrt(T)
            assert 0.5 <= r <= 1.0

    def test_large_T_lgamma_branch(self):
        T = 200_002
        assert expected_abs_rademacher_sum(T) / math.sqrt(T) == pytest.approx(math.sqrt(2 / math.pi), rel=1e-5)


class TestExpectedMax:
    def test_values(self):
        assert expected_max_linear_gain(1, 2) == 0.5
        assert expected_max_linear_gain(6, 4) == 4.5

    def test_monte_carlo(self):
        rng = np.random.default_rng(3)
        n, T, N = 4, 8, 100_000
        l = 2 * rng.integers(0, 2, size=(N, T, n)) - 1
        # -best_in_hindsight value = sum_i max(0, -L_i)
        vals = np.maximum(0, -l.sum(axis=1)).sum(axis=1)
        se = vals.std(ddof=1) / math.sqrt(N)
        assert abs(vals.mean() - expected_max_linear_gain(n, T)) <= 3 * se
