"""PolyExp, the exact Exp2 reference, and entropic mirror descent.

PolyExp keeps theta_i = eta * (cumulative estimated loss of coordinate i)
and derives the Bernoulli means x_i = 1 / (1 + exp(theta_i)) on demand.
Exp2 keeps one log-weight per vertex and is only meant for small n.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logsumexp

from .core import DimensionError, as_values

EXP2_MAX_N = 20


class ReferenceSizeError(ValueError):
    """Raised when an exponential-size reference computation is asked for too large an n."""


def _check_reference_n(n: int, cap: int):
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if n > cap:
        raise ReferenceSizeError(
            f"n={n} exceeds the cap {cap}: this is a reference implementation only, "
            "it enumerates all 2^n vertices"
        )


def vertex_table(n: int) -> np.ndarray:
    """All 2^n vertices as a (2^n, n) uint8 array; bit i of row k is coordinate i."""
    idx = np.arange(1 << n, dtype=np.int64)
    return ((idx[:, None] >> np.arange(n)) & 1).astype(np.uint8)


# -- PolyExp ---------------------------------------------------------------


@dataclass(frozen=True)
class PolyExpState:
    theta: np.ndarray
    eta: float

    @property
    def n(self) -> int:
        return self.theta.size


def polyexp_init(n: int, eta: float) -> PolyExpState:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not eta > 0:
        raise ValueError(f"eta must be > 0, got {eta}")
    return PolyExpState(np.zeros(n), float(eta))


def polyexp_means(state: PolyExpState) -> np.ndarray:
    # expit(-theta) = 1 / (1 + exp(theta)); scipy branches on the sign internally.
    with np.errstate(under="ignore"):
        return expit(-np.asarray(state.theta, dtype=np.float64))


def polyexp_update(state: PolyExpState, estimate) -> PolyExpState:
    v = as_values(estimate)
    if v.shape != state.theta.shape:
        raise DimensionError(f"dimension mismatch: {state.n} vs {v.size}")
    return PolyExpState(state.theta + state.eta * v, state.eta)


def bernoulli_product_sample(x, rng: np.random.Generator) -> np.ndarray:
    """Draw X with independent coordinates X_i ~ Bernoulli(x_i)."""
    x = np.asarray(x, dtype=np.float64)
    return (rng.random(x.size) < x).astype(np.uint8)


def product_log_probability(x, vertices: np.ndarray) -> np.ndarray:
    """log prod_i x_i^{X_i} (1 - x_i)^{1 - X_i} for each row of ``vertices``."""
    x = np.asarray(x, dtype=np.float64)
    with np.errstate(divide="ignore"):
        log_x, log_1mx = np.log(x), np.log1p(-x)
    v = vertices.astype(bool)
    return np.where(v, log_x, log_1mx).sum(axis=1)


# -- Exp2 reference --------------------------------------------------------


@dataclass(frozen=True)
class Exp2Distribution:
    n: int
    log_weights: np.ndarray

    @property
    def log_probabilities(self) -> np.ndarray:
        return self.log_weights - logsumexp(self.log_weights)

    @property
    def probabilities(self) -> np.ndarray:
        return np.exp(self.log_probabilities)


def exp2_distribution(history, eta: float, n: int, cap: int = EXP2_MAX_N) -> Exp2Distribution:
    """Exp2 distribution after feeding ``history`` of loss estimates.

    log w(X) = -eta * sum_tau X^T l_tau, normalized with log-sum-exp.
    """
    _check_reference_n(n, cap)
    total = np.zeros(n)
    for est in history:
        v = as_values(est)
        if v.size != n:
            raise DimensionError(f"dimension mismatch: {n} vs {v.size}")
        total = total + v
    log_w = -eta * (vertex_table(n).astype(np.float64) @ total)
    return Exp2Distribution(n, log_w)


def exp2_sample(dist: Exp2Distribution, rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF draw of a vertex from the 2^n table."""
    cdf = np.cumsum(dist.probabilities)
    k = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    k = min(k, cdf.size - 1)
    return ((k >> np.arange(dist.n)) & 1).astype(np.uint8)


# -- Entropic mirror descent -----------------------------------------------


def _check_interior(x: np.ndarray):
    if np.any((x <= 0.0) | (x >= 1.0)):
        raise ValueError("point must lie in the open cube (0,1)^n")


def entropic_F(x) -> float:
    """F(x) = sum_i x_i log x_i + (1 - x_i) log(1 - x_i), with 0 log 0 = 0."""
    x = np.asarray(x, dtype=np.float64)
    if np.any((x < 0.0) | (x > 1.0)):
        raise ValueError("point must lie in [0,1]^n")
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(x > 0.0, x * np.log(x), 0.0)
        b = np.where(x < 1.0, (1.0 - x) * np.log1p(-x), 0.0)
    return float(np.sum(a + b))


def entropic_F_gradient(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    _check_interior(x)
    return np.log(x) - np.log1p(-x)


def fenchel_Fstar(theta) -> float:
    """Conjugate F*(theta) = sum_i log(1 + exp(theta_i)) via a stable softplus."""
    theta = np.asarray(theta, dtype=np.float64)
    with np.errstate(under="ignore"):
        return float(np.sum(np.logaddexp(0.0, theta)))


def fenchel_Fstar_gradient(theta) -> np.ndarray:
    with np.errstate(under="ignore"):
        return expit(np.asarray(theta, dtype=np.float64))


def omd_step(x, estimate, eta: float) -> np.ndarray:
    """One mirror step x -> grad F*(grad F(x) - eta * estimate).

    The image already lies in [0,1]^n so no Bregman projection follows.
    """
    x = np.asarray(x, dtype=np.float64)
    v = as_values(estimate)
    if v.shape != x.shape:
        raise DimensionError(f"dimension mismatch: {x.size} vs {v.size}")
    return fenchel_Fstar_gradient(entropic_F_gradient(x) - eta * v)


def bregman_divergence(x, y) -> float:
    """D_F(x || y) = F(x) - F(y) - grad F(y)^T (x - y)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise DimensionError(f"dimension mismatch: {x.size} vs {y.size}")
    g = entropic_F_gradient(y)
    return entropic_F(x) - entropic_F(y) - float(g @ (x - y))


