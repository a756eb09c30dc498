import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riskplan import autodiff as ad
from riskplan.domains import Quadratic, ShiftedReward, make_domain, sample_scenario, zero_scenario
from riskplan.objectives import UtilityConfig
from riskplan.planners import (Plan, PolicyParams, init_policy, initial_plan, slp_utility_bound_check, train,
                               train_fresh, zero_plan)
from riskplan.planners.optim import Adam, RMSProp, clip_by_global_norm
from riskplan.planners.rollout import DivergenceError, rollout

NEUTRAL = UtilityConfig.for_beta(0.0)


class TestOptimizers:
    def test_rmsprop_first_step(self):
        (p,) = RMSProp(lr=0.1).step([np.zeros(1)], [np.ones(1)])
        assert p[0] == pytest.approx(0.31623, abs=1e-5)

    def test_rmsprop_second_step_uses_running_average(self):
        opt = RMSProp(lr=0.1)
        p = opt.step([np.zeros(1)], [np.ones(1)])
        (p,) = opt.step(p, [np.ones(1)])
        assert p[0] == pytest.approx(0.1 / np.sqrt(0.1) + 0.1 / np.sqrt(0.19), abs=1e-7)

    def test_zero_gradient_leaves_params(self):
        params = [np.array([1.5, -2.0]), np.array([[3.0]])]
        out = RMSProp(lr=1.0).step(params, [np.zeros(2), np.zeros((1, 1))])
        for a, b in zip(params, out):
            np.testing.assert_array_equal(a, b)
        out = Adam(lr=1.0).step(params, [np.zeros(2), np.zeros((1, 1))])
        for a, b in zip(params, out):
            np.testing.assert_array_equal(a, b)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            RMSProp(lr=0.1).step([np.zeros(2)], [np.zeros(3)])

    def test_global_norm_clip(self):
        grads, norm = clip_by_global_norm([np.array([3.0]), np.array([4.0])], 1.0)
        assert norm == 5
        np.testing.assert_allclose(np.concatenate(grads), [0.6, 0.8])
        grads, _ = clip_by_global_norm([np.array([0.3])], 1.0)
        assert grads[0][0] == 0.3
        grads, _ = clip_by_global_norm([np.array([30.0])], None)
        assert grads[0][0] == 30


class TestRollout:
    def test_two_step_plan_by_hand(self):
        d = Quadratic(target=3.0, horizon=1)
        plan = Plan(np.array([[1.0], [5.0]]))
        g, traj, _ = rollout(d, plan, plan.parameters(), zero_scenario(d, 2).noise, record=True)
        np.testing.assert_array_equal(g, [-8.0, -8.0])
        np.testing.assert_array_equal(traj.rewards[0], [-4.0, -4.0])

    def test_navigation_two_steps_by_hand(self):
        d = make_domain("navigation", horizon=1, start=(0.0, 0.0), goal=(10.0, 10.0),
                        zone_lo=(50.0, 50.0), zone_hi=(51.0, 51.0))
        plan = Plan(np.array([[1.0, 0.5], [0.0, 0.0]]))
        g, traj, _ = rollout(d, plan, plan.parameters(), zero_scenario(d, 1).noise, record=True)
        np.testing.assert_allclose(traj.states[0, 1], [1.0, 0.5])
        expect = -np.hypot(10, 10) - np.hypot(9, 9.5)
        assert float(g[0]) == pytest.approx(expect, abs=1e-12)

    def test_horizon_zero_single_reward(self):
        d = Quadratic(target=3.0)
        plan = Plan(np.array([[2.0]]))
        g, _, _ = rollout(d, plan, plan.parameters(), zero_scenario(d, 3).noise)
        np.testing.assert_array_equal(g, [-1.0] * 3)

    def test_noise_shape_checked(self):
        d = Quadratic(horizon=2)
        with pytest.raises(ValueError):
            rollout(d, zero_plan(d), zero_plan(d).parameters(), np.zeros((4, 2, 1)))

    def test_divergence(self):
        d = make_domain("navigation")
        plan = zero_plan(d)
        noise = sample_scenario(d, 4, 0, "eval").noise.copy()
        noise[2, 3, 0] = np.nan
        with pytest.raises(DivergenceError):
            rollout(d, plan, plan.parameters(), noise)
        _, _, diverged = rollout(d, plan, plan.parameters(), noise, strict=False)
        assert diverged.tolist() == [False, False, True, False]

    def test_constant_policy_matches_plan_on_zero_noise(self):
        d = make_domain("navigation")
        policy = init_policy(d, 0, widths=(8,))
        policy.weights = [np.zeros_like(w) for w in policy.weights]
        policy.biases[-1] = np.array([0.3, -0.2])
        a = np.asarray(d.policy_head(policy.biases[-1]))
        plan = Plan(np.tile(a, (d.horizon + 1, 1)))
        noise = sample_scenario(d, 16, 3, "eval").noise
        g_policy = rollout(d, policy, policy.parameters(), noise)[0]
        g_plan = rollout(d, plan, plan.parameters(), noise)[0]
        np.testing.assert_allclose(g_policy, g_plan, rtol=0, atol=1e-12)


class TestPolicy:
    def test_init_is_deterministic_and_seeded(self):
        d = make_domain("reservoir")
        a, b, c = init_policy(d, 1), init_policy(d, 1), init_policy(d, 2)
        for x, y in zip(a.parameters(), b.parameters()):
            np.testing.assert_array_equal(x, y)
        assert not np.array_equal(a.weights[0], c.weights[0])
        assert a.widths == (256, 128, 64, 32)
        assert all(np.all(bias == 0) for bias in a.biases[:-1])

    def test_reservoir_policy_starts_at_steady_state(self):
        d = make_domain("reservoir")
        p = init_policy(d, 0, widths=(16,))
        s = np.tile(d.initial_state, (2, 1))
        np.testing.assert_allclose(p.act(p.parameters(), 0, s, d)[0], d.initial_plan()[0], atol=0.05)
        assert np.all(init_policy(make_domain("navigation"), 0).biases[-1] == 0)

    def test_output_layer_is_shrunk(self):
        d = make_domain("navigation")
        p = init_policy(d, 0, widths=(32,))
        assert np.max(np.abs(p.weights[-1])) <= 0.01 * np.sqrt(6 / 32)

    def test_with_parameters_round_trip(self):
        d = make_domain("hvac")
        p = init_policy(d, 4, widths=(8, 4))
        q = p.with_parameters(p.parameters())
        assert isinstance(q, PolicyParams) and q.widths == (8, 4)

    def test_actions_respect_bounds(self):
        for name in ("navigation", "reservoir", "hvac"):
            d = make_domain(name)
            p = init_policy(d, 0, widths=(8,), output_scale=50.0)
            states = np.abs(np.random.default_rng(0).normal(size=(64, d.state_dim)) * 50 + d.initial_state)
            a = np.asarray(d.enforce(states, p.act(p.parameters(), 0, states, d)))
            np.testing.assert_allclose(d.project_action(a, states), a, atol=1e-9)

    def test_reservoir_initial_plan_is_steady_state(self):
        d = make_domain("reservoir")
        plan = initial_plan(d)
        assert plan.actions.shape == (d.horizon + 1, d.action_dim)
        np.testing.assert_array_equal(plan.actions[0], plan.actions[-1])


class TestTraining:
    def test_toy_quadratic_converges(self):
        d = Quadratic(target=3.0)
        plan, trace = train(zero_plan(d), d, NEUTRAL, epochs=500, batch=1, lr=0.05, seed=0)
        assert abs(plan.actions[0, 0] - 3.0) <= 1e-3
        assert trace.utility[-1] > trace.utility[0]

    def test_slp_stays_feasible(self):
        d = make_domain("navigation", horizon=5)
        plan, _ = train(zero_plan(d), d, UtilityConfig.for_beta(-1.0), epochs=30, batch=16, lr=2.0, seed=0)
        np.testing.assert_array_equal(d.project_action(plan.actions), plan.actions)

    def test_training_is_bitwise_deterministic(self):
        d = make_domain("reservoir", horizon=4)
        runs = [train_fresh("drp", d, UtilityConfig.for_beta(-1.0), 5, 32, 1e-3, 7, widths=(8, 8)) for _ in range(2)]
        for x, y in zip(runs[0][0].parameters(), runs[1][0].parameters()):
            assert np.array_equal(x, y)
        assert np.array_equal(runs[0][1].numeric(), runs[1][1].numeric())

    def test_seed_changes_result(self):
        d = make_domain("navigation", horizon=3)
        a, _ = train_fresh("slp", d, UtilityConfig.for_beta(-1.0), 3, 8, 1e-3, 1)
        b, _ = train_fresh("slp", d, UtilityConfig.for_beta(-1.0), 3, 8, 1e-3, 2)
        assert not np.array_equal(a.actions, b.actions)

    @pytest.mark.parametrize("fixed", [True, False])
    def test_fixed_scenarios_reuse_one_batch(self, fixed):
        # a zero step size keeps the plan put, so only the scenarios can change the returns
        d = make_domain("navigation", horizon=3)
        seen = []
        train(zero_plan(d), d, NEUTRAL, epochs=3, batch=4, lr=0.0, seed=0, fixed_scenarios=fixed,
              objective=lambda g: (seen.append(ad.value_of(g).copy()), ad.mean(g))[1])
        assert np.array_equal(seen[0], seen[2]) is fixed

    def test_reward_shift_leaves_argmax(self):
        d = make_domain("navigation", horizon=4)
        cfg = UtilityConfig.for_beta(-2.0)
        a, _ = train(zero_plan(d), d, cfg, epochs=20, batch=16, lr=0.5, seed=3)
        b, _ = train(zero_plan(d), ShiftedReward(d, 7.5), cfg, epochs=20, batch=16, lr=0.5, seed=3)
        np.testing.assert_allclose(a.actions, b.actions, atol=1e-9)

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            train_fresh("mcts", Quadratic(), NEUTRAL, 1, 1, 0.1, 0)


@settings(max_examples=20, deadline=None)
@given(st.floats(-5, 5), st.integers(0, 3))
def test_risk_neutral_consistency(shift, horizon):
    # with zero noise every rollout is identical, so beta has no effect on the gradient
    d = Quadratic(target=shift, horizon=horizon)
    outs = [train(zero_plan(d), d, UtilityConfig.for_beta(b), 3, 4, 0.1, 0)[0].actions for b in (0.0, -5.0)]
    np.testing.assert_array_equal(outs[0], outs[1])


class TestBoundCheck:
    def test_self_comparison_is_zero(self):
        d = make_domain("navigation", horizon=5)
        plan = zero_plan(d)
        report = slp_utility_bound_check(plan, plan, d, UtilityConfig.for_beta(-1.0), 0, 200, resamples=200)
        assert report.difference == 0 and report.low == 0 and report.high == 0
        assert report.paired and report.holds

    def test_report_lines(self):
        d = make_domain("navigation", horizon=3)
        policy = init_policy(d, 0, widths=(8,))
        report = slp_utility_bound_check(zero_plan(d), policy, d, NEUTRAL, 1, 100, resamples=100)
        keys = [line.split(" = ")[0] for line in report.lines()]
        assert keys == ["utility_slp", "utility_drp", "difference", "difference_ci", "std_error", "paired", "holds"]
        assert report.difference == pytest.approx(report.utility_drp - report.utility_slp)
