"""Stateful learners used by the game loop, and the {-1,+1}^n adapter.

Both learners expose the same small surface so the harness can drive
either one:

    means()              E_p[X] under the exploitation distribution
    sample(rng, gamma)   draw X_t from (1 - gamma) p_t + gamma mu
    moment_matrix(gamma) P_t = E_q[X X^T]
    update(estimate)     feed the loss estimate for this round
"""

from __future__ import annotations

import numpy as np

from . import algorithms as alg
from .bandit import estimate_loss, mixed_sample, mixing_matrix, second_moment_uniform
from .core import DimensionError, Feedback, LossVector, as_values, signed_point


class PolyExpLearner:
    def __init__(self, n: int, eta: float):
        self.state = alg.polyexp_init(n, eta)

    @property
    def n(self) -> int:
        return self.state.n

    @property
    def eta(self) -> float:
        return self.state.eta

    def means(self) -> np.ndarray:
        return alg.polyexp_means(self.state)

    def sample(self, rng: np.random.Generator, gamma: float = 0.0) -> np.ndarray:
        if gamma == 0.0:
            return alg.bernoulli_product_sample(self.means(), rng)
        return mixed_sample(self.means(), gamma, rng)

    def moment_matrix(self, gamma: float) -> np.ndarray:
        return mixing_matrix(self.means(), gamma)

    def update(self, estimate):
        self.state = alg.polyexp_update(self.state, estimate)


class Exp2Learner:
    """Exp2 over all 2^n vertices. Exponential cost, for verification only."""

    def __init__(self, n: int, eta: float, cap: int = alg.EXP2_MAX_N):
        alg._check_reference_n(n, cap)
        if not eta > 0:
            raise ValueError(f"eta must be > 0, got {eta}")
        self.eta = float(eta)
        self.n = n
        self._vertices = alg.vertex_table(n)
        self._vf = self._vertices.astype(np.float64)
        self.dist = alg.Exp2Distribution(n, np.zeros(1 << n))

    def means(self) -> np.ndarray:
        return self.dist.probabilities @ self._vf

    def sample(self, rng: np.random.Generator, gamma: float = 0.0) -> np.ndarray:
        if gamma > 0.0 and rng.random() < gamma:
            return alg.bernoulli_product_sample(np.full(self.n, 0.5), rng)
        return alg.exp2_sample(self.dist, rng)

    def moment_matrix(self, gamma: float) -> np.ndarray:
        if not 0.0 < gamma < 1.0:
            raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
        p = self.dist.probabilities
        exploit = (self._vf * p[:, None]).T @ self._vf
        return (1.0 - gamma) * exploit + gamma * second_moment_uniform(self.n)

    def update(self, estimate):
        v = as_values(estimate)
        if v.size != self.n:
            raise DimensionError(f"dimension mismatch: {self.n} vs {v.size}")
        self.dist = alg.Exp2Distribution(self.n, self.dist.log_weights - self.eta * (self._vf @ v))


def signed_moment_matrix(P, mean_action) -> np.ndarray:
    """E[ZZ^T] for Z = 2X - 1, from E[XX^T] and E[X]."""
    m = np.asarray(mean_action, dtype=np.float64)
    return 4.0 * P - 2.0 * (m[:, None] + m[None, :]) + 1.0


def signed_cube_wrap(
    learner,
    loss,
    rng: np.random.Generator,
    feedback=Feedback.FULL,
    gamma: float = 0.0,
) -> tuple[np.ndarray, LossVector]:
    """Play one round on {-1,+1}^n through a {0,1}^n learner.

    Samples X from the inner learner, plays Z = 2X - 1 and feeds 2 * l_est
    back. In bandit mode only the scalar Z^T l reaches the estimator, with
    P = E_q[Z Z^T]. Returns (Z, l_est) where l_est is the estimate of l
    before doubling.
    """
    feedback = Feedback(feedback)
    lv = as_values(loss)
    if lv.size != learner.n:
        raise DimensionError(f"dimension mismatch: {learner.n} vs {lv.size}")
    if feedback is Feedback.FULL:
        x = learner.sample(rng)
        z = signed_point(2 * x.astype(np.int8) - 1)
        est = LossVector.estimate(lv)
    else:
        P01 = learner.moment_matrix(gamma)
        mean_action = (1.0 - gamma) * learner.means() + gamma * 0.5
        P = signed_moment_matrix(P01, mean_action)
        x = learner.sample(rng, gamma)
        z = signed_point(2 * x.astype(np.int8) - 1)
        observed = float(z @ lv)
        est = estimate_loss(P, z, observed)
    learner.update(LossVector.estimate(2.0 * est.values))
    return z, est
