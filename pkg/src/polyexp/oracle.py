"""Exact ground truth by enumeration of {0,1}^n (and of sign vectors).

Everything here is exponential in n or T and meant for tests and the
verification subcommands. Sums of exponentials are taken in log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .algorithms import ReferenceSizeError, _check_reference_n, product_log_probability, vertex_table
from .bandit import estimate_loss, mixing_matrix
from .core import DimensionError, as_values

ENUM_MAX_N = 20
IDENTITY_MAX_N = 12
ESTIMATOR_MAX_N = 8
ODD_T_MAX = 24
# Beyond this 2k, exact big-integer binomials get slow; fall back to lgamma.
EXACT_BINOMIAL_MAX_T = 100_000


@dataclass(frozen=True)
class ExactDistribution:
    n: int
    probabilities: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=np.float64)
        if p.shape != (1 << self.n,):
            raise ValueError(f"expected {1 << self.n} probabilities, got {p.shape}")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("probabilities must be nonnegative and sum to 1")
        object.__setattr__(self, "probabilities", p)


def enumerate_cube(n: int) -> list[np.ndarray]:
    """All 2^n vertices; bit i of index k is coordinate i."""
    _check_reference_n(n, ENUM_MAX_N)
    return list(vertex_table(n))


def _cumulative(history, n: int | None = None) -> np.ndarray:
    rows = [as_values(h) for h in history]
    if not rows:
        if n is None:
            raise ValueError("empty history needs an explicit n")
        return np.zeros(n)
    total = np.sum(rows, axis=0)
    if n is not None and total.size != n:
        raise DimensionError(f"dimension mismatch: {n} vs {total.size}")
    return total


def log_partition_both_sides(history, eta: float, n: int | None = None) -> tuple[float, float]:
    """Log of both sides of prod_i (1 + e^{-eta L_i}) = sum_Y e^{-eta Y^T L}.

    The left side factorizes over coordinates; the right enumerates all 2^n
    vertices. They are computed independently.
    """
    L = _cumulative(history, n)
    _check_reference_n(L.size, IDENTITY_MAX_N)
    lhs = float(np.sum(np.logaddexp(0.0, -eta * L)))
    rhs = float(logsumexp(-eta * (vertex_table(L.size).astype(np.float64) @ L)))
    return lhs, rhs


lemma2_both_sides = log_partition_both_sides


def exp2_exact_distribution(history, eta: float, n: int) -> ExactDistribution:
    _check_reference_n(n, IDENTITY_MAX_N)
    L = _cumulative(history, n)
    logw = -eta * (vertex_table(n).astype(np.float64) @ L)
    return ExactDistribution(n, np.exp(logw - logsumexp(logw)))


def exp2_exact_marginals(history, eta: float, n: int) -> np.ndarray:
    """P(X_i = 1) under the exact Exp2 distribution after ``history``."""
    dist = exp2_exact_distribution(history, eta, n)
    return dist.probabilities @ vertex_table(n).astype(np.float64)


def exploration_mixture(x, gamma: float) -> ExactDistribution:
    """q(X) = (1 - gamma) prod Bernoulli(x) + gamma 2^-n."""
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    p = np.exp(product_log_probability(x, vertex_table(n)))
    q = (1.0 - gamma) * p + gamma * 0.5**n
    return ExactDistribution(n, q / q.sum())


def exact_estimator_expectation(x, gamma: float, loss) -> np.ndarray:
    """sum_X q(X) * estimate_loss(P, X, X^T l), by enumeration."""
    x = np.asarray(x, dtype=np.float64)
    lv = as_values(loss)
    if x.size > ESTIMATOR_MAX_N:
        raise ReferenceSizeError(f"n={x.size} exceeds the estimator enumeration cap {ESTIMATOR_MAX_N}")
    if lv.size != x.size:
        raise DimensionError(f"dimension mismatch: {x.size} vs {lv.size}")
    q = exploration_mixture(x, gamma).probabilities
    P = mixing_matrix(x, gamma)
    out = np.zeros(x.size)
    for prob, X in zip(q, vertex_table(x.size)):
        out += prob * estimate_loss(P, X, float(X @ lv)).values
    return out


def exact_second_moment(dist: ExactDistribution) -> np.ndarray:
    V = vertex_table(dist.n).astype(np.float64)
    return (V * dist.probabilities[:, None]).T @ V


def brute_force_abs_sign_sum(T: int) -> float:
    """E|sum_t Y_t| over all 2^T sign vectors, with an exact integer total."""
    if T < 1 or T > ODD_T_MAX:
        raise ValueError(f"brute-force enumeration supports 1 <= T <= {ODD_T_MAX}, got {T}")
    total = 0
    chunk = 1 << 20
    for start in range(0, 1 << T, chunk):
        idx = np.arange(start, min(start + chunk, 1 << T), dtype=np.int64)
        ones = np.zeros_like(idx)
        for b in range(T):
            ones += (idx >> b) & 1
        total += int(np.abs(2 * ones - T).sum())
    return total / (1 << T)


def expected_abs_rademacher_sum(T: int) -> float:
    """E|Y_1 + ... + Y_T| for independent uniform signs.

    Even T = 2k uses (2k / 4^k) C(2k, k). Odd T is enumerated (T <= 24).
    """
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    if T % 2:
        if T > ODD_T_MAX:
            raise ValueError(
                f"odd T={T} > {ODD_T_MAX}: only the even case has a closed form"
            )
        # exact enumeration grouped by the number of +1 entries
        return sum(math.comb(T, j) * abs(2 * j - T) for j in range(T + 1)) / (1 << T)
    k = T // 2
    if T <= EXACT_BINOMIAL_MAX_T:
        return (2 * k * math.comb(2 * k, k)) / (4**k)
    log_val = math.log(2 * k) - k * math.log(4.0) + math.lgamma(2 * k + 1) - 2 * math.lgamma(k + 1)
    return math.exp(log_val)


def expected_max_linear_gain(n: int, T: int) -> float:
    """E[max_X sum_t l_t^T X] against i.i.d. Rademacher losses: n/2 E|sum Y|."""
    return n / 2.0 * expected_abs_rademacher_sum(T)
