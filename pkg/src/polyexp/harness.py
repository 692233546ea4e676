"""Game loops, Monte Carlo regret estimation and the theoretical bounds.

Seeding: run ``r`` of an experiment with master seed ``s`` draws from
``SeedSequence(s, spawn_key=(r,))``, which is split into a learner stream
and an adversary stream. Results therefore do not depend on the order in
which runs execute or on how many workers execute them.
"""

from __future__ import annotations

import dataclasses
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .adversaries import Adversary, AdversarySpec, default_gap_epsilon
from .bandit import Algorithm, estimate_loss, estimate_magnitude_check, tuned_parameters
from .core import DimensionError, Feedback, GameConfig, GameRecord, LossVector, realized_regret
from .learners import Exp2Learner, PolyExpLearner
from .oracle import expected_max_linear_gain


@dataclass(frozen=True)
class ExperimentSpec:
    config: GameConfig
    learner: Algorithm = Algorithm.POLYEXP
    adversary: AdversarySpec = field(default_factory=AdversarySpec)
    runs: int = 100
    tuned: bool = True

    def __post_init__(self):
        object.__setattr__(self, "learner", Algorithm(self.learner))
        if self.runs < 1:
            raise ValueError(f"runs must be >= 1, got {self.runs}")
        if self.learner is Algorithm.EXP2 and self.config.n > 20:
            raise ValueError("the Exp2 reference learner supports n <= 20 only")

    def resolved_config(self) -> GameConfig:
        if not self.tuned:
            return self.config
        c = self.config
        p = tuned_parameters(c.n, c.T, self.learner, c.feedback)
        return dataclasses.replace(c, eta=p.eta, gamma=p.gamma)


@dataclass
class ExperimentResult:
    mean_regret: float
    stderr: float
    regrets: np.ndarray
    bound: float
    bound_satisfied: bool
    violation_count: int
    wall_time: float
    eta: float = float("nan")
    gamma: float = float("nan")
    violations_per_run: np.ndarray | None = None


def make_learner(kind, n: int, eta: float):
    if Algorithm(kind) is Algorithm.POLYEXP:
        return PolyExpLearner(n, eta)
    return Exp2Learner(n, eta)


def _new_record(n: int, T: int) -> GameRecord:
    return GameRecord(
        actions=np.zeros((T, n), dtype=np.uint8),
        losses=np.zeros((T, n)),
        estimates=np.zeros((T, n)),
        incurred=np.full(T, np.nan),
        means=np.zeros((T, n)),
    )


def _check_dims(config: GameConfig, learner, adversary):
    if learner.n != config.n or adversary.n != config.n:
        raise DimensionError(
            f"dimension mismatch: config n={config.n}, learner n={learner.n}, adversary n={adversary.n}"
        )


def play_full_information(config: GameConfig, learner, adversary, rng: np.random.Generator) -> GameRecord:
    """Full-information game: the learner is updated with the true loss vector."""
    if config.feedback is not Feedback.FULL:
        raise ValueError("play_full_information needs a full-information config")
    _check_dims(config, learner, adversary)
    rec = _new_record(config.n, config.T)
    for t in range(config.T):
        loss = adversary.loss(t + 1, rec.actions[:t])
        rec.means[t] = learner.means()
        x = learner.sample(rng)
        rec.actions[t] = x
        rec.losses[t] = loss.values
        rec.estimates[t] = loss.values
        rec.incurred[t] = float(x @ loss.values)
        rec.violation_count += estimate_magnitude_check(learner.eta, loss)
        learner.update(loss)
    rec.regret = realized_regret(rec)
    return rec


def _bandit_feedback(x: np.ndarray, loss: LossVector) -> float:
    return float(x @ loss.values)


def play_bandit(config: GameConfig, learner, adversary, rng: np.random.Generator) -> GameRecord:
    """Bandit game: the learner sees only the scalar X_t^T l_t.

    The update path is (P_t, X_t, scalar) -> estimate -> learner; the loss
    vector itself is used only to produce the scalar and the record.
    """
    if config.feedback is not Feedback.BANDIT:
        raise ValueError("play_bandit needs a bandit config")
    gamma = config.gamma
    _check_dims(config, learner, adversary)
    rec = _new_record(config.n, config.T)
    for t in range(config.T):
        loss = adversary.loss(t + 1, rec.actions[:t])
        rec.means[t] = learner.means()
        P = learner.moment_matrix(gamma)
        x = learner.sample(rng, gamma)
        observed = _bandit_feedback(x, loss)
        est = estimate_loss(P, x, observed)
        rec.actions[t] = x
        rec.losses[t] = loss.values
        rec.estimates[t] = est.values
        rec.incurred[t] = observed
        rec.violation_count += estimate_magnitude_check(learner.eta, est)
        learner.update(est)
    rec.regret = realized_regret(rec)
    return rec


def run_streams(seed: int, run_index: int) -> tuple[np.random.Generator, np.random.Generator]:
    """(learner rng, adversary rng) for one run of an experiment."""
    ss = np.random.SeedSequence(seed, spawn_key=(run_index,))
    learner_ss, adversary_ss = ss.spawn(2)
    return np.random.default_rng(learner_ss), np.random.default_rng(adversary_ss)


def play_game(spec: ExperimentSpec, run_index: int, config: GameConfig | None = None) -> GameRecord:
    config = config or spec.resolved_config()
    learner_rng, adversary_rng = run_streams(config.seed, run_index)
    learner = make_learner(spec.learner, config.n, config.eta)
    adversary = Adversary(spec.adversary, config.n, config.T, adversary_rng)
    play = play_full_information if config.feedback is Feedback.FULL else play_bandit
    return play(config, learner, adversary, learner_rng)


def _run_chunk(spec: ExperimentSpec, config: GameConfig, indices: list[int]) -> list[tuple[float, int]]:
    out = []
    for r in indices:
        rec = play_game(spec, r, config)
        out.append((rec.regret, rec.violation_count))
    return out


def monte_carlo_regret(spec: ExperimentSpec, workers: int = 1) -> ExperimentResult:
    """Estimate E[R_T] over ``spec.runs`` independent games."""
    start = time.perf_counter()
    config = spec.resolved_config()
    indices = list(range(spec.runs))
    if workers <= 1 or spec.runs == 1:
        pairs = _run_chunk(spec, config, indices)
    else:
        chunks = [indices[i::workers] for i in range(workers)]
        pairs = [None] * spec.runs
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for chunk, res in zip(chunks, pool.map(_run_chunk, [spec] * workers, [config] * workers, chunks)):
                for r, pair in zip(chunk, res):
                    pairs[r] = pair
    regrets = np.array([p[0] for p in pairs])
    violations = np.array([p[1] for p in pairs], dtype=np.int64)
    mean = math.fsum(regrets) / spec.runs
    if spec.runs > 1:
        var = math.fsum((regrets - mean) ** 2) / (spec.runs - 1)
        stderr = math.sqrt(var / spec.runs)
    else:
        stderr = 0.0
    bound = theoretical_bound(config.n, config.T, spec.learner, config.feedback)
    return ExperimentResult(
        mean_regret=mean,
        stderr=stderr,
        regrets=regrets,
        bound=bound,
        bound_satisfied=bool(mean <= bound),
        violation_count=int(violations.sum()),
        wall_time=time.perf_counter() - start,
        eta=config.eta,
        gamma=config.gamma,
        violations_per_run=violations,
    )


def theoretical_bound(n: int, T: int, algorithm, feedback) -> float:
    """Upper bound on E[R_T] under tuned parameters.

    PolyExp: 2 n sqrt(T log 2) full info, 4 n^{3/2} sqrt(6 T log 2) bandit.
    Exp2 (direct analysis): 2 n^{3/2} sqrt(T log 2) full, 6 n^2 sqrt(T log 2) bandit.
    """
    algorithm, feedback = Algorithm(algorithm), Feedback(feedback)
    if n < 1 or T < 1:
        raise ValueError(f"n and T must be >= 1, got n={n}, T={T}")
    root = math.sqrt(T * math.log(2.0))
    rn = math.sqrt(n)
    if algorithm is Algorithm.POLYEXP:
        if feedback is Feedback.FULL:
            return 2 * n * root
        return 4 * n * rn * math.sqrt(6 * T * math.log(2.0))
    if feedback is Feedback.FULL:
        return 2 * n * rn * root
    return 6 * n * n * root


def lower_bound_reference(n: int, T: int, feedback) -> float:
    """Exact floor quantity from the lower-bound constructions.

    Full information: E[max_X sum_t l_t^T X] under Rademacher losses.
    Bandit: eps n T (1/2 - eps sqrt(T/n)) at the default epsilon.
    """
    if Feedback(feedback) is Feedback.FULL:
        return expected_max_linear_gain(n, T)
    eps = default_gap_epsilon(n, T)
    return eps * n * T * (0.5 - eps * math.sqrt(T / n))
