"""Bandit feedback: exploration mixing, second moments and the loss estimator."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .algorithms import bernoulli_product_sample
from .core import Feedback, LossVector, as_values


class Algorithm(str, enum.Enum):
    POLYEXP = "polyexp"
    EXP2 = "exp2"


class HorizonTooShortError(ValueError):
    """Tuned mixing coefficient would reach 1."""


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    pass


LOG2 = math.log(2.0)


def second_moment_product(x) -> np.ndarray:
    """E[X X^T] for X ~ prod_i Bernoulli(x_i): x_i x_j off the diagonal, x_i on it."""
    x = np.asarray(x, dtype=np.float64)
    m = np.outer(x, x)
    np.fill_diagonal(m, x)
    return m


def second_moment_uniform(n: int) -> np.ndarray:
    """E[X X^T] for X uniform on {0,1}^n, i.e. (I + 11^T) / 4."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return (np.eye(n) + np.ones((n, n))) / 4.0


def mixing_matrix(x, gamma: float, *, allow_one: bool = False) -> np.ndarray:
    """P = (1 - gamma) E_p[XX^T] + gamma E_mu[XX^T]; min eigenvalue >= gamma/4."""
    hi_ok = gamma <= 1.0 if allow_one else gamma < 1.0
    if not (gamma > 0.0 and hi_ok):
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    x = np.asarray(x, dtype=np.float64)
    return (1.0 - gamma) * second_moment_product(x) + gamma * second_moment_uniform(x.size)


def spd_solve(P, v) -> np.ndarray:
    """Solve P u = v for symmetric positive definite P via Cholesky."""
    try:
        factor = scipy.linalg.cho_factor(P, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(
            "moment matrix is not positive definite; gamma must be > 0 for bandit play"
        ) from exc
    return scipy.linalg.cho_solve(factor, np.asarray(v, dtype=np.float64), check_finite=False)


def mixed_sample(x, gamma: float, rng: np.random.Generator) -> np.ndarray:
    """Sample from (1 - gamma) prod Bernoulli(x) + gamma Uniform({0,1}^n).

    One uniform draw picks the branch, then n more draw the coordinates.
    """
    x = np.asarray(x, dtype=np.float64)
    if rng.random() < gamma:
        return bernoulli_product_sample(np.full(x.size, 0.5), rng)
    return bernoulli_product_sample(x, rng)


def estimate_loss(P, X, observed: float) -> LossVector:
    """Unbiased estimate P^{-1} X X^T l, given only the scalar X^T l."""
    if observed == 0.0:
        return LossVector.estimate(np.zeros(len(X)))
    return LossVector.estimate(observed * spd_solve(P, np.asarray(X, dtype=np.float64)))


@dataclass(frozen=True)
class TunedParameters:
    eta: float
    gamma: float
    algorithm: Algorithm
    feedback: Feedback


def _min_bandit_horizon(n: int, algorithm: Algorithm) -> int:
    # gamma < 1  <=>  T > 6 n log 2 (PolyExp)  or  T > 16 n^2 log 2 / 9 (Exp2)
    bound = 6 * n * LOG2 if algorithm is Algorithm.POLYEXP else 16 * n * n * LOG2 / 9
    T = max(1, math.floor(bound))
    while _bandit_gamma(n, T, algorithm) >= 1.0:
        T += 1
    return T


def _bandit_eta(n: int, T: int, algorithm: Algorithm) -> float:
    if algorithm is Algorithm.POLYEXP:
        return math.sqrt(3 * LOG2 / (8 * n * T))
    return math.sqrt(LOG2 / (9 * n * n * T))


def _bandit_gamma(n: int, T: int, algorithm: Algorithm) -> float:
    scale = 4 * n if algorithm is Algorithm.POLYEXP else 4 * n * n
    return scale * _bandit_eta(n, T, algorithm)


def tuned_parameters(n: int, T: int, algorithm, feedback) -> TunedParameters:
    """Learning rate and mixing coefficient that the regret theorems assume."""
    algorithm, feedback = Algorithm(algorithm), Feedback(feedback)
    if n < 1 or T < 1:
        raise ValueError(f"n and T must be >= 1, got n={n}, T={T}")
    if feedback is Feedback.FULL:
        if algorithm is Algorithm.POLYEXP:
            eta = math.sqrt(LOG2 / T)
        else:
            eta = math.sqrt(LOG2 / (n * T))
        return TunedParameters(eta, 0.0, algorithm, feedback)
    eta = _bandit_eta(n, T, algorithm)
    gamma = _bandit_gamma(n, T, algorithm)
    if gamma >= 1.0:
        raise HorizonTooShortError(
            f"horizon too short: tuned gamma={gamma:.4g} >= 1 for n={n}, T={T}; "
            f"{algorithm.value} bandit needs T >= {_min_bandit_horizon(n, algorithm)}"
        )
    return TunedParameters(eta, gamma, algorithm, feedback)


def estimate_magnitude_check(eta: float, estimate) -> int:
    """Number of coordinates with |eta * l_i| > 1."""
    return int(np.count_nonzero(np.abs(eta * as_values(estimate)) > 1.0))
