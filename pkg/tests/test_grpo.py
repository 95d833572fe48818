import math
import unittest


import numpy as np
import pytest


from curloc.errors import GradientError, InputError
from curloc.geometry import encode_box
from curloc.grpo import (
    GrpoConfig,
    compute_ratios,
    group_advantages,
    grpo_objective,
    policy_gradient,
    policy_gradient_step,
)
from tests.utils import (
    DEFAULT_TARGET,
    finite_difference_gradient,
    make_group,
    make_params,
)


class TestGroupAdvantages(unittest.TestCase):
    def test_all_zero_rewards(self):
        advantages = group_advantages(np.zeros(4), 1e-6)
        np.testing.assert_array_equal(advantages, np.zeros(4))

    def test_constant_rewards(self):
        for value in (0.3, 1.0, 7.5):
            advantages = group_advantages(np.full(6, value), 1e-3)
            np.testing.assert_array_equal(advantages, np.zeros(6))

    def test_single_hit(self):
        advantages = group_advantages(np.array([1.0, 0, 0, 0]), 1e-12)
        third = 1 / math.sqrt(3)
        np.testing.assert_allclose(
            advantages, [math.sqrt(3), -third, -third, -third], atol=1e-9
        )

    def test_matches_brute_force(self):
        rng = np.random.default_rng(0)
        for _ in range(10_000):
            size = int(rng.integers(2, 17))
            if rng.random() < 0.5:
                rewards = rng.integers(0, 2, size).astype(float)
            else:
                rewards = rng.uniform(0, 1, size)
            gamma = 10 ** rng.uniform(-8, -2)

            expected = (rewards - np.mean(rewards)) / np.sqrt(
                np.var(rewards) + gamma
            )
            np.testing.assert_allclose(
                group_advantages(rewards, gamma), expected, atol=1e-9, rtol=0
            )

    def test_zero_sum_and_unit_std(self):
        rng = np.random.default_rng(1)
        for _ in range(500):
            size = int(rng.integers(2, 17))
            rewards = np.zeros(size)
            rewards[: int(rng.integers(1, size))] = 1.0
            advantages = group_advantages(rng.permutation(rewards), 1e-12)
            self.assertAlmostEqual(float(advantages.sum()), 0.0, delta=1e-9)
            self.assertAlmostEqual(float(advantages.std()), 1.0, delta=1e-9)

    def test_affine_invariance(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            rewards = rng.uniform(0, 1, int(rng.integers(2, 17)))
            scale, shift = rng.uniform(0.5, 5), rng.uniform(-3, 3)
            np.testing.assert_allclose(
                group_advantages(rewards, 1e-20),
                group_advantages(scale * rewards + shift, 1e-20),
                atol=1e-9,
            )

    def test_rejects_non_finite(self):
        with self.assertRaises(InputError):
            group_advantages(np.array([0.0, np.inf]), 1e-6)
        with self.assertRaises(InputError):
            group_advantages(np.array([0.0, 1.0]), 0.0)


class TestObjective(unittest.TestCase):
    def setUp(self):
        self.params = make_params()
        encoded = encode_box(DEFAULT_TARGET)
        rng = np.random.default_rng(5)
        self.raw = encoded + 0.2 * rng.standard_normal((4, 4))

    def test_on_policy_objective_is_mean_advantage(self):
        group = make_group(self.params, self.raw, [1, 0, 0, 0])
        advantages = group_advantages(group.rewards, 1e-6)
        objective = grpo_objective(group, advantages, 0.0, GrpoConfig())
        self.assertAlmostEqual(objective, 0.0, delta=1e-12)

    def test_zero_advantages_leave_kl_term(self):
        group = make_group(self.params, self.raw, [0, 0, 0, 0])
        cfg = GrpoConfig(beta=0.4)
        objective = grpo_objective(group, np.zeros(4), 0.3, cfg)
        self.assertAlmostEqual(objective, -0.12, places=15)

    def test_clip_ceiling(self):
        group = make_group(self.params, self.raw[:2], [1, 0])
        cfg = GrpoConfig(clip_eps=0.2, beta=0.0)
        advantages = np.array([1.0, 0.0])
        values = []
        for ratio in (2.0, 3.0, 50.0):
            moved = group.model_copy(
                update={
                    "log_probs": np.array([math.log(ratio), 0.0]),
                    "old_log_probs": np.zeros(2),
                }
            )
            values.append(grpo_objective(moved, advantages, 0.0, cfg))
        # min(2 * 1, 1.2 * 1) / 2
        self.assertAlmostEqual(values[0], 0.6, places=12)
        self.assertEqual(values[0], values[1])
        self.assertEqual(values[1], values[2])

    def test_ratio_overflow_is_clamped(self):
        group = make_group(self.params, self.raw[:2], [1, 0]).model_copy(
            update={
                "log_probs": np.array([500.0, 0.0]),
                "old_log_probs": np.zeros(2),
            }
        )
        ratios, clamped = compute_ratios(group)
        self.assertTrue(clamped)
        self.assertTrue(np.all(np.isfinite(ratios)))
        objective = grpo_objective(
            group, np.array([-1.0, 1.0]), 0.0, GrpoConfig()
        )
        self.assertTrue(math.isfinite(objective))


class TestPolicyGradient(unittest.TestCase):
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(7)
        cfg_options = (GrpoConfig(beta=0.0), GrpoConfig(beta=0.4))
        checked = 0
        while checked < 100:
            old = make_params(
                mean=rng.uniform(-0.3, 0.3, 4),
                scale=rng.uniform(0.1, 0.4),
            )
            encoded = encode_box(DEFAULT_TARGET)
            raw = (
                encoded
                + old.mean
                + np.exp(old.log_scale) * rng.standard_normal((8, 4))
            )
            params = old.model_copy(
                update={
                    "mean": old.mean + rng.normal(0, 0.03, 4),
                    "log_scale": old.log_scale + rng.normal(0, 0.03, 4),
                }
            )
            rewards = rng.uniform(0, 1, 8)
            group = make_group(params, raw, rewards, old_params=old)
            cfg = cfg_options[checked % 2]

            ratios, _ = compute_ratios(group)
            edges = (1 - cfg.clip_eps, 1 + cfg.clip_eps)
            if np.min(np.abs(ratios[:, None] - np.array(edges))) < 1e-3:
                # the surrogate has a kink at the clip edges
                continue

            advantages = group_advantages(rewards, cfg.gamma)
            grad_mean, grad_log_scale = policy_gradient(
                params, group, advantages, cfg
            )
            fd_mean, fd_log_scale = finite_difference_gradient(
                params, group, advantages, cfg
            )
            analytic = np.concatenate([grad_mean, grad_log_scale])
            numeric = np.concatenate([fd_mean, fd_log_scale])
            relative = np.abs(analytic - numeric) / np.maximum(
                np.abs(numeric), 1e-2
            )
            self.assertLess(float(relative.max()), 1e-4)
            checked += 1

    def test_zero_advantages_without_kl_keep_params(self):
        params = make_params(mean=[0.1, -0.2, 0.05, 0.0])
        raw = encode_box(DEFAULT_TARGET) + np.random.default_rng(
            0
        ).normal(0, 0.2, (8, 4))
        group = make_group(params, raw, np.zeros(8))
        updated = policy_gradient_step(
            params, group, np.zeros(8), GrpoConfig(beta=0.0)
        )
        np.testing.assert_array_equal(updated.mean, params.mean)
        np.testing.assert_array_equal(updated.log_scale, params.log_scale)

    def test_positive_advantage_pulls_mean(self):
        params = make_params()
        encoded = encode_box(DEFAULT_TARGET)
        offset = np.array([0.1, 0.0, 0.0, 0.0])
        raw = np.stack([encoded + offset, encoded - offset])
        group = make_group(params, raw, [1.0, 0.0])
        advantages = group_advantages(group.rewards, 1e-6)
        for optimizer in ("adam", "sgd"):
            updated = policy_gradient_step(
                params,
                group,
                advantages,
                GrpoConfig(beta=0.0, optimizer=optimizer),
            )
            self.assertGreater(updated.mean[0], params.mean[0])
            np.testing.assert_array_equal(updated.mean[1:], params.mean[1:])

    def test_reference_is_untouched(self):
        params = make_params(mean=[0.2, 0.2, 0.1, -0.1])
        raw = encode_box(DEFAULT_TARGET) + np.random.default_rng(
            1
        ).normal(0, 0.2, (8, 4))
        group = make_group(params, raw, np.arange(8) / 8)
        advantages = group_advantages(group.rewards, 1e-6)
        updated = policy_gradient_step(
            params, group, advantages, GrpoConfig()
        )
        np.testing.assert_array_equal(updated.ref_mean, params.ref_mean)
        np.testing.assert_array_equal(
            updated.ref_log_scale, params.ref_log_scale
        )
        self.assertEqual(updated.step_count, params.step_count + 1)

    def test_sgd_step_size(self):
        params = make_params()
        raw = encode_box(DEFAULT_TARGET) + np.random.default_rng(
            2
        ).normal(0, 0.2, (8, 4))
        group = make_group(params, raw, np.arange(8) / 8)
        advantages = group_advantages(group.rewards, 1e-6)
        cfg = GrpoConfig(optimizer="sgd", learning_rate=0.05, beta=0.0)
        grad_mean, grad_log_scale = policy_gradient(
            params, group, advantages, cfg
        )
        updated = policy_gradient_step(params, group, advantages, cfg)
        np.testing.assert_allclose(
            updated.mean, params.mean + 0.05 * grad_mean
        )
        np.testing.assert_allclose(
            updated.log_scale, params.log_scale + 0.05 * grad_log_scale
        )

    def test_first_adam_step_moves_by_learning_rate(self):
        params = make_params()
        raw = encode_box(DEFAULT_TARGET) + np.random.default_rng(
            3
        ).normal(0, 0.2, (8, 4))
        group = make_group(params, raw, np.arange(8) / 8)
        advantages = group_advantages(group.rewards, 1e-6)
        cfg = GrpoConfig(learning_rate=0.03, beta=0.0)
        updated = policy_gradient_step(params, group, advantages, cfg)
        np.testing.assert_allclose(
            np.abs(updated.mean - params.mean), 0.03, rtol=1e-5
        )

    def test_non_finite_gradient_is_rejected(self):
        params = make_params()
        raw = encode_box(DEFAULT_TARGET) + np.random.default_rng(
            4
        ).normal(0, 0.2, (4, 4))
        group = make_group(params, raw, [1.0, 0.0, 0.0, 0.0])
        broken = params.model_copy(
            update={"mean": np.array([np.nan, 0.0, 0.0, 0.0])}
        )
        with self.assertRaises(GradientError) as ctx:
            policy_gradient_step(
                broken,
                group,
                group_advantages(group.rewards, 1e-6),
                GrpoConfig(),
            )
        self.assertEqual(ctx.exception.component, "mean[0]")


def test_group_needs_two_candidates():
    params = make_params()
    raw = encode_box(DEFAULT_TARGET)[None, :]
    with pytest.raises(ValueError):
        make_group(params, raw, [1.0])


def test_group_lengths_must_match():
    params = make_params()
    raw = np.tile(encode_box(DEFAULT_TARGET), (3, 1))
    with pytest.raises(ValueError):
        make_group(params, raw, [1.0, 0.0])


@pytest.mark.parametrize(
    "field, value",
    [
        ("group_size", 1),
        ("clip_eps", 1.0),
        ("beta", -0.1),
        ("gamma", 0.0),
        ("learning_rate", 0.0),
    ],
)
def test_config_bounds(field, value):
    with pytest.raises(ValueError):
        GrpoConfig.model_validate({field: value})
