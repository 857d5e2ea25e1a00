import math

import numpy as np
import pytest

from helpers import enumerate_rule_reward, random_dist, random_grid_member
from prophet_sharp import (
    DiscreteDistribution,
    ThresholdRule,
    ratio_floor,
    floor_rule,
    ehsani_distribution,
    evaluate_rule,
    growth_bound_check,
    optimal_rule,
    prophet_weights,
    reward_by_level,
    reward_v1,
    reward_v2,
    reward_weights,
    rule_at_level,
    samuel_cahn_closed_forms,
    samuel_cahn_distribution,
)
from prophet_sharp.dist import QuantileIncrements

COIN = DiscreteDistribution.from_atoms([(0.0, 0.5), (1.0, 0.5)])


def rule_grid(dist):
    """Threshold/tie-break sweep: atom values, midpoints, several p."""
    vals = dist.values
    mids = (vals[:-1] + vals[1:]) / 2 if vals.size > 1 else np.array([])
    thetas = np.concatenate((vals, mids, [vals[-1] + 1.0]))
    return [(float(t), p) for t in thetas for p in (0.0, 0.3, 1.0)]


class TestClosedForms:
    def test_point_mass_below_threshold(self):
        pm = DiscreteDistribution.point_mass(2.0)
        for fn in (reward_v1, reward_v2):
            assert fn(pm, 4, ThresholdRule(1.0, 0.0)) == 2.0

    def test_coin_stop_on_positive(self):
        # theta=0, p=0, n=2: stops at t=1 iff X_1 = 1, else takes X_2
        for fn in (reward_v1, reward_v2):
            assert fn(COIN, 2, ThresholdRule(0.0, 0.0)) == pytest.approx(0.75, abs=1e-15)

    def test_coin_always_stop(self):
        for fn in (reward_v1, reward_v2):
            assert fn(COIN, 2, ThresholdRule(0.0, 1.0)) == pytest.approx(0.5, abs=1e-15)

    def test_coin_never_triggers(self):
        # theta at the top atom with p=0 degenerates to taking X_n
        for fn in (reward_v1, reward_v2):
            assert fn(COIN, 3, ThresholdRule(1.0, 0.0)) == pytest.approx(0.5, abs=1e-15)

    def test_two_forms_agree_randomized(self):
        rng = np.random.default_rng(101)
        for _ in range(300):
            F = random_dist(rng, max_atoms=6)
            for theta, p in rule_grid(F):
                rule = ThresholdRule(theta, p)
                for n in range(2, 7):
                    assert reward_v1(F, n, rule) == pytest.approx(
                        reward_v2(F, n, rule), abs=1e-12
                    )

    def test_matches_enumeration(self):
        rng = np.random.default_rng(103)
        for _ in range(60):
            F = random_dist(rng, max_atoms=3)
            for theta, p in rule_grid(F):
                for n in (2, 3, 4):
                    expected = enumerate_rule_reward(F, n, theta, p)
                    assert reward_v1(F, n, ThresholdRule(theta, p)) == pytest.approx(
                        expected, abs=1e-12
                    )

    def test_prophet_dominance(self):
        rng = np.random.default_rng(107)
        for _ in range(100):
            F = random_dist(rng)
            n = int(rng.integers(2, 8))
            bound = F.expected_max(n)
            for theta, p in rule_grid(F):
                assert reward_v1(F, n, ThresholdRule(theta, p)) <= bound + 1e-10 * max(bound, 1)


class TestRewardByLevel:
    def test_endpoints_are_mean(self):
        rng = np.random.default_rng(109)
        for _ in range(30):
            F = random_dist(rng)
            n = int(rng.integers(2, 7))
            assert reward_by_level(F, n, 0.0) == pytest.approx(F.mean(), rel=1e-13)
            assert reward_by_level(F, n, 1.0) == pytest.approx(F.mean(), rel=1e-13)

    def test_matches_rule_evaluation(self):
        rng = np.random.default_rng(113)
        for _ in range(100):
            F = random_dist(rng)
            n = int(rng.integers(2, 7))
            x = float(rng.random())
            rule = rule_at_level(F, x)
            assert F.mixed_cdf(rule.theta, rule.p) == pytest.approx(x, abs=1e-12)
            assert reward_by_level(F, n, x) == pytest.approx(
                reward_v2(F, n, rule), abs=1e-12
            )

    def test_grid_levels_match_b_matrix(self):
        # on a 1/N grid the level rewards are exactly B v
        rng = np.random.default_rng(127)
        for N in (4, 9, 16):
            v = rng.exponential(1.0, N - 1)
            F = QuantileIncrements(N, v).to_distribution()
            B = reward_weights(4, N)
            expected = B @ v
            got = [reward_by_level(F, 4, i / N) for i in range(1, N)]
            np.testing.assert_allclose(got, expected, rtol=1e-12, atol=1e-13)


class TestOptimalRule:
    def test_point_mass(self):
        res = optimal_rule(DiscreteDistribution.point_mass(3.0), 5)
        assert res.evaluation.ratio == pytest.approx(1.0, abs=1e-12)
        assert res.evaluation.value == pytest.approx(3.0, abs=1e-12)

    def test_coin_grid_exact(self):
        res = optimal_rule(COIN, 2, mode="grid-exact")
        assert res.rule.theta == 0.0
        assert res.rule.p == 0.0
        assert res.evaluation.value == pytest.approx(0.75, abs=1e-14)
        assert res.evaluation.ratio == pytest.approx(1.0, abs=1e-13)

    def test_grid_exact_matches_b_matrix_max(self):
        rng = np.random.default_rng(131)
        for _ in range(20):
            N = int(rng.integers(4, 24))
            n = int(rng.integers(2, 8))
            F = random_grid_member(rng, N)
            res = optimal_rule(F, n, mode="grid-exact", grid_size=N)
            # independent: maximize B v over rows, with u_i the atom above
            # level i/N recovered by multiplicity (robust to cumsum rounding)
            expanded = np.repeat(F.values, np.rint(F.probs * N).astype(int))
            v = np.diff(expanded)
            best = float((reward_weights(n, N) @ v).max())
            assert res.evaluation.value == pytest.approx(best, abs=1e-11)

    def test_level_search_beats_grid_candidates(self):
        rng = np.random.default_rng(137)
        for _ in range(20):
            F = random_dist(rng)
            n = int(rng.integers(2, 7))
            res = optimal_rule(F, n, mode="level-search")
            fallback = max(reward_by_level(F, n, x) for x in np.linspace(0, 1, 41))
            assert res.evaluation.value >= fallback - 1e-10
            assert res.search_gap >= 0.0

    def test_ehsani_ratio_tends_to_one(self):
        res = optimal_rule(ehsani_distribution(100), 100, mode="level-search")
        assert res.evaluation.ratio > 0.95

    def test_grid_exact_requires_grid(self):
        irr = DiscreteDistribution.from_atoms([(0.0, 1 / np.pi), (1.0, 1 - 1 / np.pi)])
        with pytest.raises(ValueError):
            optimal_rule(irr, 3, mode="grid-exact")

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            optimal_rule(COIN, 3, mode="bogus")


class TestFloorBounds:
    def test_constant_values(self):
        assert ratio_floor(2) == 0.75
        assert ratio_floor(100) == pytest.approx(0.6340, abs=5e-5)
        # monotone toward 1 - 1/e from above
        assert ratio_floor(10**6) == pytest.approx(1 - 1 / math.e, abs=1e-6)

    def test_rule_mixed_cdf_hits_target(self):
        rng = np.random.default_rng(139)
        for _ in range(100):
            F = random_dist(rng)
            n = int(rng.integers(2, 30))
            rule = floor_rule(F, n)
            assert F.mixed_cdf(rule.theta, rule.p) == pytest.approx(1 - 1 / n, abs=1e-12)

    def test_worked_example(self):
        F = DiscreteDistribution.from_atoms([(0.0, 0.95), (1.0, 0.05)])
        rule = floor_rule(F, 10)
        assert rule.theta == 0.0
        assert rule.p == pytest.approx(1 / 19, abs=1e-15)

    def test_realizable_quantile_gives_p_zero(self):
        # F(U(n)) = 1 - 1/n exactly: the coin at n=2
        rule = floor_rule(COIN, 2)
        assert rule.theta == 0.0 and rule.p == 0.0

    def test_ratio_floor_randomized(self):
        rng = np.random.default_rng(149)
        for _ in range(60):
            F = random_dist(rng)
            n = int(rng.integers(2, 51))
            ev = evaluate_rule(F, n, floor_rule(F, n))
            assert ev.ratio >= ratio_floor(n) - 1e-10

    def test_growth_bound_example(self):
        lhs, rhs = growth_bound_check(COIN, 2, 1)
        assert lhs == 0.75
        assert rhs == pytest.approx(0.625, abs=1e-15)

    def test_growth_bound_point_mass(self):
        lhs, rhs = growth_bound_check(DiscreteDistribution.point_mass(2.0), 4, 3)
        assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_growth_bound_randomized(self):
        rng = np.random.default_rng(151)
        for _ in range(80):
            F = random_dist(rng)
            n = int(rng.integers(1, 11))
            k = int(rng.integers(0, 11))
            lhs, rhs = growth_bound_check(F, n, k)
            assert lhs >= rhs - 1e-12


class TestFixtures:
    def test_samuel_cahn_mean_formula(self):
        # E X_{tau_0(1)} = (ac + b)/n
        assert samuel_cahn_closed_forms(10, 0.5, 2.0, 3.0)[3] == pytest.approx(0.35, abs=1e-15)

    @pytest.mark.parametrize("params", [(10, 0.1, 0.1, math.sqrt(10)), (100, 0.01, 0.01, 10.0),
                                        (12, 0.37, 1.5, 2.25)])
    def test_samuel_cahn_matches_generic(self, params):
        n, a, b, c = params
        F = samuel_cahn_distribution(n, a, b, c)
        m_n, e0, ea, e1 = samuel_cahn_closed_forms(n, a, b, c)
        assert F.expected_max(n) == pytest.approx(m_n, abs=1e-12)
        assert reward_v2(F, n, ThresholdRule(0.0, 0.0)) == pytest.approx(e0, abs=1e-12)
        assert reward_v2(F, n, ThresholdRule(a, 0.0)) == pytest.approx(ea, abs=1e-12)
        assert reward_v2(F, n, ThresholdRule(1.0, 0.0)) == pytest.approx(e1, abs=1e-12)

    def test_samuel_cahn_half_ratio_regime(self):
        n = 10**4
        m_n, e0, ea, e1 = samuel_cahn_closed_forms(n, 1 / n, 1 / n, math.sqrt(n))
        assert 0.45 < max(e0, ea, e1) / m_n < 0.55

    def test_samuel_cahn_rejects_bad_params(self):
        with pytest.raises(ValueError):
            samuel_cahn_closed_forms(10, 1.5, 1.0, 1.0)
        with pytest.raises(ValueError):
            samuel_cahn_closed_forms(10, 0.5, 6.0, 5.0)

    def test_ehsani_distribution_shape(self):
        F = ehsani_distribution(100)
        assert F.values.size == 2
        assert F.probs[1] == pytest.approx(1e-4, abs=1e-18)
        assert F.values[0] == pytest.approx((math.e - 2) / (math.e - 1), abs=1e-15)


class TestEvaluation:
    def test_fields_consistent(self):
        rng = np.random.default_rng(157)
        for _ in range(50):
            F = random_dist(rng)
            n = int(rng.integers(2, 7))
            theta, p = rule_grid(F)[int(rng.integers(0, len(rule_grid(F))))]
            ev = evaluate_rule(F, n, ThresholdRule(theta, p))
            prophet = F.expected_max(n)
            assert ev.regret == pytest.approx(prophet - ev.value, abs=1e-12)
            if prophet > 0:
                assert ev.ratio == pytest.approx(ev.value / prophet, abs=1e-12)

    def test_prophet_weights_shape(self):
        d = prophet_weights(5, 10)
        assert d.shape == (9,)
        assert np.all(np.diff(d) < 0) and np.all(d > 0)
