"""Loss-generating opponents.

Adversaries are oblivious here: the round-t draw may depend on the
adversary's own stream, t, and the learner's past actions, but never on the
learner's round-t randomness. The harness calls ``loss`` before sampling the
learner's action for that round to keep that ordering structural.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import LossBoundError, LossVector, cube_point


class AdversaryKind(str, enum.Enum):
    RADEMACHER = "rademacher"
    GAP = "gap"
    FIXED = "fixed"


class SequenceExhaustedError(IndexError):
    pass


class SequenceFormatError(ValueError):
    pass


@dataclass(frozen=True)
class AdversarySpec:
    kind: AdversaryKind = AdversaryKind.RADEMACHER
    epsilon: float | None = None
    hidden_vertex: np.ndarray | None = None
    sequence_source: str | Path | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", AdversaryKind(self.kind))
        if self.kind is AdversaryKind.GAP and self.epsilon is not None:
            _check_epsilon(self.epsilon)
        if self.kind is AdversaryKind.FIXED and self.sequence_source is None:
            raise ValueError("fixed-sequence adversary needs a sequence_source")


def _check_epsilon(eps: float):
    if not 0.0 <= eps <= 0.5:
        raise ValueError(f"epsilon must lie in [0, 1/2], got {eps}")


def rademacher_loss(n: int, rng: np.random.Generator) -> LossVector:
    """Independent +-1 coordinates, each with probability 1/2."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return LossVector(2.0 * rng.integers(0, 2, size=n) - 1.0)


def gap_loss(spec: AdversarySpec, rng: np.random.Generator) -> LossVector:
    """Rademacher losses tilted towards -1 by epsilon on the hidden vertex's ones.

    Coordinates with hidden bit 1 are +1 w.p. 1/2 - eps and -1 w.p. 1/2 + eps.
    """
    if spec.hidden_vertex is None or spec.epsilon is None:
        raise ValueError("gap adversary needs both hidden_vertex and epsilon")
    _check_epsilon(spec.epsilon)
    hidden = np.asarray(spec.hidden_vertex)
    p_plus = 0.5 - spec.epsilon * hidden
    return LossVector(np.where(rng.random(hidden.size) < p_plus, 1.0, -1.0))


def gap_marginal_means(spec: AdversarySpec) -> np.ndarray:
    """Exact E[l_i] from the two-point law: (+1)(1/2 - eps h_i) + (-1)(1/2 + eps h_i)."""
    h = np.asarray(spec.hidden_vertex, dtype=np.float64)
    p_plus = 0.5 - spec.epsilon * h
    return p_plus * 1.0 + (1.0 - p_plus) * -1.0


def default_gap_epsilon(n: int, T: int) -> float:
    """Maximizer of eps n T (1/2 - eps sqrt(T/n)), clipped to 1/2."""
    return min(0.25 * math.sqrt(n / T), 0.5)


def load_sequence(source) -> np.ndarray:
    """Read a header-less CSV of T rows by n values in [-1, 1]."""
    rows = []
    with open(source, newline="") as fh:
        for r, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            values = []
            for c, cell in enumerate(row, start=1):
                try:
                    values.append(float(cell))
                except ValueError:
                    raise SequenceFormatError(
                        f"{source}: row {r}, column {c}: not a number: {cell!r}"
                    ) from None
            if rows and len(values) != len(rows[0]):
                raise SequenceFormatError(
                    f"{source}: row {r} has {len(values)} columns, expected {len(rows[0])}"
                )
            for c, v in enumerate(values, start=1):
                if not math.isfinite(v) or abs(v) > 1.0 + 1e-12:
                    raise LossBoundError(
                        f"{source}: row {r}, column {c}: value {v} outside [-1, 1]"
                    )
            rows.append(values)
    if not rows:
        raise SequenceFormatError(f"{source}: empty loss sequence")
    return np.array(rows, dtype=np.float64)


def fixed_sequence_loss(source, t: int) -> LossVector:
    """Row t (1-based) of a loss table or CSV file."""
    table = source if isinstance(source, np.ndarray) else load_sequence(source)
    if t < 1 or t > table.shape[0]:
        raise SequenceExhaustedError(f"loss sequence has {table.shape[0]} rows, asked for row {t}")
    return LossVector(table[t - 1])


class Adversary:
    """One game's adversary: owns its spec, RNG stream and hidden state."""

    def __init__(self, spec: AdversarySpec, n: int, T: int, rng: np.random.Generator):
        self.n = n
        self.rng = rng
        if spec.kind is AdversaryKind.GAP:
            eps = default_gap_epsilon(n, T) if spec.epsilon is None else spec.epsilon
            hidden = spec.hidden_vertex
            if hidden is None:
                hidden = rng.integers(0, 2, size=n).astype(np.uint8)
            spec = AdversarySpec(AdversaryKind.GAP, eps, cube_point(hidden))
        self.spec = spec
        self._table = None
        if spec.kind is AdversaryKind.FIXED:
            src = spec.sequence_source
            self._table = src if isinstance(src, np.ndarray) else load_sequence(src)
            if self._table.shape[1] != n:
                raise ValueError(f"loss sequence has {self._table.shape[1]} columns, game has n={n}")
            if self._table.shape[0] < T:
                raise SequenceExhaustedError(
                    f"loss sequence has {self._table.shape[0]} rows, game needs T={T}"
                )

    def loss(self, t: int, past_actions=None) -> LossVector:
        kind = self.spec.kind
        if kind is AdversaryKind.RADEMACHER:
            return rademacher_loss(self.n, self.rng)
        if kind is AdversaryKind.GAP:
            return gap_loss(self.spec, self.rng)
        return fixed_sequence_loss(self._table, t)
