import dataclasses
import math

import numpy as np
import pytest

from polyexp.adversaries import Adversary, AdversarySpec
from polyexp.bandit import tuned_parameters
from polyexp.core import DimensionError, GameConfig
from polyexp.harness import (
    ExperimentSpec,
    lower_bound_reference,
    monte_carlo_regret,
    play_bandit,
    play_full_information,
    play_game,
    theoretical_bound,
)
from polyexp.learners import Exp2Learner, PolyExpLearner
from polyexp.oracle import exp2_exact_marginals, expected_max_linear_gain


def fixed(table):
    return AdversarySpec("fixed", sequence_source=np.asarray(table, dtype=float))


def full_config(n, T, eta=0.3, seed=0):
    return GameConfig(n=n, T=T, eta=eta, seed=seed)


def bandit_config(n, T, seed=0):
    p = tuned_parameters(n, T, "polyexp", "bandit")
    return GameConfig(n=n, T=T, eta=p.eta, gamma=p.gamma, feedback="bandit", seed=seed)


def run(config, spec_adv, learner_cls=PolyExpLearner, seed=0):
    learner = learner_cls(config.n, config.eta)
    adv = Adversary(spec_adv, config.n, config.T, np.random.default_rng(seed + 1))
    play = play_full_information if config.feedback.value == "full" else play_bandit
    return play(config, learner, adv, np.random.default_rng(seed)), learner


class TestFullInformation:
    def test_zero_losses(self):
        rec, learner = run(full_config(3, 100), fixed(np.zeros((100, 3))))
        assert rec.regret == 0.0
        np.testing.assert_array_equal(learner.means(), 0.5)
        np.testing.assert_array_equal(rec.means, 0.5)

    def test_final_means_closed_form(self):
        losses = np.array([[0.5, -1.0], [1.0, 0.25], [-0.75, 0.5]])
        eta = 0.8
        rec, learner = run(full_config(2, 3, eta), fixed(losses))
        L = losses.sum(axis=0)  # (0.75, -0.25)
        np.testing.assert_allclose(learner.means(), 1 / (1 + np.exp(eta * L)), rtol=0, atol=1e-15)
        np.testing.assert_allclose(rec.incurred, np.einsum("ti,ti->t", rec.actions, losses))

    def test_deterministic(self):
        spec = ExperimentSpec(full_config(4, 50, seed=9), adversary=AdversarySpec("rademacher"), tuned=False)
        assert play_game(spec, 3) == play_game(spec, 3)
        assert play_game(spec, 3) != play_game(spec, 4)

    def test_means_trajectory_matches_exp2(self):
        spec = ExperimentSpec(full_config(6, 40, eta=0.5, seed=2), adversary=AdversarySpec("rademacher"), tuned=False)
        rec = play_game(spec, 0)
        for t in range(rec.T):
            np.testing.assert_allclose(exp2_exact_marginals(rec.estimates[:t], 0.5, 6), rec.means[t],
                                       rtol=0, atol=1e-9)

    def test_exp2_learner_same_means(self):
        losses = np.random.default_rng(0).uniform(-1, 1, (30, 4))
        rec_a, _ = run(full_config(4, 30), fixed(losses), PolyExpLearner)
        rec_b, _ = run(full_config(4, 30), fixed(losses), Exp2Learner)
        np.testing.assert_allclose(rec_a.means, rec_b.means, rtol=0, atol=1e-12)

    def test_dimension_mismatch(self):
        config = full_config(3, 5)
        adv = Adversary(AdversarySpec(), 2, 5, np.random.default_rng(0))
        with pytest.raises(DimensionError):
            play_full_information(config, PolyExpLearner(3, 0.1), adv, np.random.default_rng(0))

    def test_wrong_feedback(self):
        adv = Adversary(AdversarySpec(), 2, 100, np.random.default_rng(0))
        with pytest.raises(ValueError):
            play_full_information(bandit_config(2, 100), PolyExpLearner(2, 0.1), adv, np.random.default_rng(0))
        with pytest.raises(ValueError):
            play_bandit(full_config(2, 100), PolyExpLearner(2, 0.1), adv, np.random.default_rng(0))


class TestBandit:
    def test_zero_losses(self):
        rec, learner = run(bandit_config(3, 200), fixed(np.zeros((200, 3))))
        np.testing.assert_array_equal(rec.estimates, 0.0)
        np.testing.assert_array_equal(learner.means(), 0.5)

    def test_tuned_no_violations(self):
        for adv in (AdversarySpec("rademacher"), AdversarySpec("gap")):
            rec, _ = run(bandit_config(5, 1000), adv)
            assert rec.violation_count == 0

    def test_information_barrier(self):
        # Replace each l_t by a vector with the same scalar X_t^T l_t but zeros
        # wherever X_t is 0; the learner must not notice.
        config = bandit_config(4, 300)
        losses = np.random.default_rng(7).uniform(-1, 1, (300, 4))
        rec, _ = run(config, fixed(losses))
        hidden = losses * rec.actions
        rec2, _ = run(config, fixed(hidden))
        np.testing.assert_array_equal(rec.actions, rec2.actions)
        np.testing.assert_array_equal(rec.estimates, rec2.estimates)
        np.testing.assert_array_equal(rec.incurred, rec2.incurred)

    def test_exp2_bandit_runs(self):
        p = tuned_parameters(3, 2000, "exp2", "bandit")
        config = GameConfig(n=3, T=2000, eta=p.eta, gamma=p.gamma, feedback="bandit")
        spec = ExperimentSpec(config, "exp2", AdversarySpec("gap"), runs=3, tuned=False)
        res = monte_carlo_regret(spec)
        assert res.violation_count == 0
        assert res.bound == theoretical_bound(3, 2000, "exp2", "bandit")


class TestMonteCarlo:
    spec = ExperimentSpec(full_config(3, 64, seed=5), adversary=AdversarySpec("rademacher"), runs=6)

    def test_single_run(self):
        spec = dataclasses.replace(self.spec, runs=1)
        res = monte_carlo_regret(spec)
        assert res.regrets.tolist() == [play_game(spec, 0).regret]
        assert res.stderr == 0.0

    def test_prefix_stable(self):
        a = monte_carlo_regret(self.spec)
        b = monte_carlo_regret(dataclasses.replace(self.spec, runs=12))
        np.testing.assert_array_equal(a.regrets, b.regrets[:6])

    def test_workers_do_not_matter(self):
        a = monte_carlo_regret(self.spec)
        b = monte_carlo_regret(self.spec, workers=3)
        np.testing.assert_array_equal(a.regrets, b.regrets)
        assert (a.mean_regret, a.stderr) == (b.mean_regret, b.stderr)

    def test_stderr(self):
        res = monte_carlo_regret(self.spec)
        assert res.stderr == pytest.approx(np.std(res.regrets, ddof=1) / math.sqrt(6), rel=1e-12)
        assert res.mean_regret == pytest.approx(np.mean(res.regrets), rel=1e-12)

    def test_tuned_overrides_config(self):
        res = monte_carlo_regret(self.spec)
        assert res.eta == math.sqrt(math.log(2) / 64)

    def test_rademacher_regret_matches_floor(self):
        spec = ExperimentSpec(full_config(3, 256, seed=11), adversary=AdversarySpec("rademacher"), runs=300)
        res = monte_carlo_regret(spec)
        assert abs(res.mean_regret - expected_max_linear_gain(3, 256)) <= 4 * res.stderr
        assert res.bound_satisfied


class TestBounds:
    def test_polyexp_full_value(self):
        assert theoretical_bound(4, 1000, "polyexp", "full") == pytest.approx(8 * math.sqrt(693.147), rel=1e-6)
        assert theoretical_bound(4, 1000, "polyexp", "full") == pytest.approx(210.63, abs=0.01)

    def test_other_values(self):
        n, T = 3, 500
        r = math.sqrt(T * math.log(2))
        assert theoretical_bound(n, T, "polyexp", "bandit") == pytest.approx(4 * n**1.5 * math.sqrt(6) * r)
        assert theoretical_bound(n, T, "polyexp", "bandit") == pytest.approx(2 * n**1.5 * math.sqrt(24) * r)
        assert theoretical_bound(n, T, "exp2", "full") == pytest.approx(2 * n**1.5 * r)
        assert theoretical_bound(n, T, "exp2", "bandit") == pytest.approx(6 * n * n * r)

    def test_full_ratio_sqrt_n(self):
        for n in range(1, 65):
            for T in (1, 100, 4096):
                ratio = theoretical_bound(n, T, "exp2", "full") / theoretical_bound(n, T, "polyexp", "full")
                assert ratio == pytest.approx(math.sqrt(n), rel=1e-15)

    def test_bandit_ratio_scaling(self):
        def ratio(n):
            return theoretical_bound(n, 1000, "exp2", "bandit") / theoretical_bound(n, 1000, "polyexp", "bandit")

        for n in range(1, 17):
            assert ratio(4 * n) / ratio(n) == pytest.approx(2.0, abs=1e-12)
            assert ratio(n) == pytest.approx(3 * math.sqrt(n) / (2 * math.sqrt(6)), rel=1e-12)

    def test_bound_from_tuning(self):
        # plugging the tuned eta into eta n T + n log2 / eta reproduces the bound
        n, T = 5, 777
        eta = tuned_parameters(n, T, "polyexp", "full").eta
        assert eta * n * T + n * math.log(2) / eta == pytest.approx(theoretical_bound(n, T, "polyexp", "full"))
        b = tuned_parameters(n, T, "polyexp", "bandit")
        val = 3 * n * math.log(2) / b.eta + 8 * b.eta * n * n * T
        assert val == pytest.approx(theoretical_bound(n, T, "polyexp", "bandit"))

    def test_lower_references(self):
        assert lower_bound_reference(1, 2, "full") == 0.5
        assert lower_bound_reference(4, 6400, "bandit") == pytest.approx(40.0, abs=1e-9)

    def test_lower_below_upper(self):
        for n in range(1, 33):
            for T in range(2, 2**14 + 1, 254):
                assert lower_bound_reference(n, T, "full") <= theoretical_bound(n, T, "polyexp", "full")
