"""Domain types for online linear optimization on the {0,1}^n hypercube.

Vertices are stored as ``uint8`` numpy arrays, losses as ``float64``.
Regret is always measured against the true losses, never the estimates.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

LINF_TOLERANCE = 1e-12


class DimensionError(ValueError):
    """Raised when two vectors in the same game disagree on n."""


class LossBoundError(ValueError):
    """Raised when a bounded loss vector violates ||l||_inf <= 1."""


class Feedback(str, enum.Enum):
    FULL = "full"
    BANDIT = "bandit"


def cube_point(bits) -> np.ndarray:
    """Validate ``bits`` as a vertex of {0,1}^n and return it as uint8."""
    arr = np.asarray(bits)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError("a cube point must be a non-empty 1-d sequence")
    if not np.all((arr == 0) | (arr == 1)):
        raise ValueError(f"cube point entries must be 0 or 1, got {arr.tolist()}")
    return arr.astype(np.uint8)


def signed_point(entries) -> np.ndarray:
    arr = np.asarray(entries)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError("a signed cube point must be a non-empty 1-d sequence")
    if not np.all((arr == -1) | (arr == 1)):
        raise ValueError(f"signed cube entries must be -1 or +1, got {arr.tolist()}")
    return arr.astype(np.int8)


@dataclass(frozen=True)
class LossVector:
    """A loss vector l_t (bounded) or an estimate of one (unbounded).

    Bounded vectors enforce the L-infinity contract max|l_i| <= 1 and are
    rejected, not clipped, when it fails.
    """

    values: np.ndarray
    bounded: bool = True

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.ndim != 1 or v.size < 1:
            raise ValueError("a loss vector must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(v)):
            raise ValueError("loss vector contains non-finite values")
        if self.bounded:
            worst = float(np.max(np.abs(v)))
            if worst > 1.0 + LINF_TOLERANCE:
                raise LossBoundError(
                    f"loss entry of magnitude {worst!r} violates the L-infinity bound 1"
                )
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def estimate(cls, values) -> "LossVector":
        return cls(values, bounded=False)

    @property
    def n(self) -> int:
        return self.values.size

    def __len__(self):
        return self.values.size

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


def as_values(loss) -> np.ndarray:
    """Return the float64 array behind a LossVector or array-like."""
    if isinstance(loss, LossVector):
        return loss.values
    return np.asarray(loss, dtype=np.float64)


def _check_same_length(a: np.ndarray, b: np.ndarray):
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")


@dataclass(frozen=True)
class CumulativeLoss:
    totals: np.ndarray
    rounds_seen: int = 0

    @classmethod
    def zeros(cls, n: int) -> "CumulativeLoss":
        return cls(np.zeros(n), 0)

    def add(self, loss) -> "CumulativeLoss":
        v = as_values(loss)
        totals = np.asarray(self.totals, dtype=np.float64)
        _check_same_length(totals, v)
        return CumulativeLoss(totals + v, self.rounds_seen + 1)


@dataclass(frozen=True)
class GameConfig:
    n: int
    T: int
    eta: float
    gamma: float = 0.0
    feedback: Feedback = Feedback.FULL
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "feedback", Feedback(self.feedback))
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.T < 1:
            raise ValueError(f"T must be >= 1, got {self.T}")
        if not self.eta > 0:
            raise ValueError(f"eta must be > 0, got {self.eta}")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma}")
        if self.feedback is Feedback.FULL and self.gamma != 0.0:
            raise ValueError("full-information games require gamma = 0")
        if self.feedback is Feedback.BANDIT and self.gamma <= 0.0:
            raise ValueError("bandit games require gamma > 0")


@dataclass
class GameRecord:
    """Trajectory of one learner-vs-adversary game.

    ``actions``, ``losses`` and ``estimates`` are T x n arrays; row t is
    round t. ``regret`` is filled in by :func:`realized_regret` once the
    game is complete.
    """

    actions: np.ndarray
    losses: np.ndarray
    estimates: np.ndarray
    incurred: np.ndarray
    regret: float = float("nan")
    violation_count: int = 0
    means: np.ndarray | None = field(default=None, repr=False)

    @property
    def T(self) -> int:
        return self.incurred.shape[0]

    def __eq__(self, other):
        if not isinstance(other, GameRecord):
            return NotImplemented
        same = (
            np.array_equal(self.actions, other.actions)
            and np.array_equal(self.losses, other.losses)
            and np.array_equal(self.estimates, other.estimates)
            and np.array_equal(self.incurred, other.incurred)
            and self.violation_count == other.violation_count
        )
        return same and (self.regret == other.regret or (np.isnan(self.regret) and np.isnan(other.regret)))


def linear_loss(x, loss) -> float:
    """Loss X^T l of playing vertex ``x`` against ``loss``."""
    xv = np.asarray(x, dtype=np.float64)
    lv = as_values(loss)
    _check_same_length(xv, lv)
    return float(xv @ lv)


def best_in_hindsight(cumulative) -> tuple[np.ndarray, float]:
    """Best fixed vertex for the given cumulative losses, and its loss.

    The objective separates over coordinates, so X*_i = 1 iff the total is
    strictly negative; ties at zero go to 0.
    """
    totals = np.asarray(
        cumulative.totals if isinstance(cumulative, CumulativeLoss) else cumulative,
        dtype=np.float64,
    )
    best = (totals < 0).astype(np.uint8)
    return best, float(np.sum(np.minimum(0.0, totals)))


def realized_regret(record: GameRecord) -> float:
    T = record.incurred.shape[0]
    if T == 0 or record.actions.shape[0] != T or record.losses.shape[0] != T:
        raise ValueError("incomplete game record")
    if np.any(np.isnan(record.incurred)):
        raise ValueError("incomplete game record: unplayed rounds")
    _, best = best_in_hindsight(record.losses.sum(axis=0))
    return float(np.sum(record.incurred)) - best


def to_signed(x) -> np.ndarray:
    """Map X in {0,1}^n to Z = 2X - 1 in {-1,+1}^n."""
    return (2 * cube_point(x).astype(np.int8) - 1).astype(np.int8)


def from_signed(z) -> np.ndarray:
    return ((signed_point(z) + 1) // 2).astype(np.uint8)
