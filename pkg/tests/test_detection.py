"""Sliding window behavior and change-detection statistics."""

import math

import numpy as np
import pytest

from pslinucb import (
    ContractError,
    NumericError,
    SlidingWindow,
    estimation_threshold,
    noise_threshold,
    residual_statistic,
    split_window_statistic,
)


def fill_window(capacity, xs, rs, zs=None):
    w = SlidingWindow(capacity)
    for i, (x, r) in enumerate(zip(xs, rs)):
        w.push(np.asarray(x, dtype=float), float(r), None if zs is None else zs[i])
    return w


class TestSlidingWindow:
    def test_rejects_nonpositive_capacity(self):
        with pytest.raises(ValueError):
            SlidingWindow(0)

    def test_fifo_order_after_overflow(self):
        w = SlidingWindow(3)
        for i in range(5):
            w.push(np.array([float(i)]), float(i))
        stored = [float(x[0]) for x, _, _ in w.entries()]
        assert stored == [2.0, 3.0, 4.0]
        assert len(w) == 3 and w.is_full

    def test_push_returns_evicted_oldest(self):
        w = SlidingWindow(2)
        assert w.push(np.array([1.0]), 0.1) is None
        assert w.push(np.array([2.0]), 0.2) is None
        evicted = w.push(np.array([3.0]), 0.3)
        assert evicted is not None
        x, z, r = evicted
        assert float(x[0]) == 1.0 and z is None and r == 0.1

    def test_popleft_empty_raises(self):
        with pytest.raises(ContractError):
            SlidingWindow(2).popleft()

    def test_clear_resets_sums_and_contents(self):
        w = fill_window(3, [[1.0, 2.0], [3.0, 4.0]], [1.0, 2.0])
        w.clear()
        assert len(w) == 0
        assert np.array_equal(w.x_sum, [0.0, 0.0])
        assert w.r_sum == 0.0

    def test_running_sums_match_recomputation(self):
        rng = np.random.default_rng(11)
        w = SlidingWindow(7)
        for step in range(60):
            x = rng.normal(size=3)
            z = rng.normal(size=4)
            w.push(x, float(rng.normal()), z)
            if step % 5 == 4 and len(w) > 1:
                w.popleft()
            items = w.entries()
            assert np.abs(w.x_sum - sum(it[0] for it in items)).max() <= 1e-12
            assert np.abs(w.z_sum - sum(it[1] for it in items)).max() <= 1e-12
            assert w.r_sum == pytest.approx(sum(it[2] for it in items), abs=1e-12)


class TestResidualStatistic:
    def test_requires_full_window(self):
        w = fill_window(4, [[1.0]] * 3, [0.0] * 3)
        with pytest.raises(ContractError):
            residual_statistic(w, lambda x, z: 0.0)

    def test_exact_predictions_give_zero(self):
        theta = np.array([0.5, -0.25])
        xs = np.random.default_rng(2).normal(size=(6, 2))
        w = fill_window(6, xs, xs @ theta)
        assert residual_statistic(w, lambda x, z: float(x @ theta)) == 0.0

    def test_constant_residual(self):
        w = fill_window(10, [[1.0]] * 10, [0.4] * 10)
        stat = residual_statistic(w, lambda x, z: 0.5)
        assert stat == pytest.approx(0.1, abs=1e-12)

    def test_alternating_residuals_cancel(self):
        rewards = [0.2 if i % 2 == 0 else -0.2 for i in range(8)]
        w = fill_window(8, [[1.0]] * 8, rewards)
        assert residual_statistic(w, lambda x, z: 0.0) == pytest.approx(0.0, abs=1e-12)

    def test_passes_stored_cross_feature(self):
        w = SlidingWindow(2)
        w.push(np.array([1.0]), 1.0, np.array([2.0]))
        w.push(np.array([1.0]), 1.0, np.array([4.0]))
        stat = residual_statistic(w, lambda x, z: float(z[0]))
        assert stat == pytest.approx(2.0, abs=1e-12)


class TestSplitWindowStatistic:
    def test_hand_example(self):
        # Fit half sees x=1, r=1 so theta=1; score half has residual -1 each.
        w = fill_window(4, [[1.0]] * 4, [1.0, 1.0, 2.0, 2.0])
        stat, theta = split_window_statistic(w, fit_reg=0.0)
        assert stat == pytest.approx(1.0, abs=1e-12)
        assert theta == pytest.approx([1.0], abs=1e-12)

    def test_noiseless_data_scores_near_zero(self):
        rng = np.random.default_rng(7)
        theta = np.array([0.6, -0.3, 0.2])
        xs = rng.normal(size=(12, 3))
        w = fill_window(12, xs, xs @ theta)
        stat, _ = split_window_statistic(w, fit_reg=1e-6)
        assert stat <= 1e-4

    def test_uniform_shift_is_recovered(self):
        rng = np.random.default_rng(8)
        theta = np.array([0.5, 0.5])
        xs = rng.normal(size=(8, 2))
        rs = xs @ theta
        rs[4:] += 0.3
        w = fill_window(8, xs, rs)
        stat, _ = split_window_statistic(w, fit_reg=0.0)
        assert stat == pytest.approx(0.3, abs=1e-9)

    def test_requires_full_window(self):
        w = fill_window(4, [[1.0]] * 2, [0.0] * 2)
        with pytest.raises(ContractError):
            split_window_statistic(w)

    def test_requires_capacity_two(self):
        w = fill_window(1, [[1.0]], [0.0])
        with pytest.raises(ContractError):
            split_window_statistic(w)

    def test_rejects_negative_regularizer(self):
        w = fill_window(2, [[1.0]] * 2, [0.0] * 2)
        with pytest.raises(ValueError):
            split_window_statistic(w, fit_reg=-1.0)

    def test_singular_unregularized_fit_raises(self):
        w = fill_window(4, [[1.0, 0.0]] * 4, [1.0] * 4)
        with pytest.raises(NumericError):
            split_window_statistic(w, fit_reg=0.0)


class TestEstimationThreshold:
    def test_single_point_closed_form(self):
        value = estimation_threshold(
            [[1.0]], [[1.0]], window_size=2, false_alarm_prob=0.5, fit_reg=0.0
        )
        assert value == pytest.approx(math.sqrt(2.0 * math.log(4.0)), rel=1e-12)

    def test_zero_eval_points_give_zero(self):
        value = estimation_threshold(
            [[1.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]], window_size=4, false_alarm_prob=0.1
        )
        assert value == 0.0

    def test_scales_linearly_in_eval_points(self):
        fit = [[1.0, 0.2], [0.3, 0.9]]
        one = estimation_threshold(fit, [[0.5, 0.5]], 6, 0.05)
        two = estimation_threshold(fit, [[0.5, 0.5]] * 2, 6, 0.05)
        assert two == pytest.approx(2.0 * one, rel=1e-12)

    @pytest.mark.parametrize("prob", [0.0, 1.0, -0.2, 1.5])
    def test_rejects_bad_false_alarm_prob(self, prob):
        with pytest.raises(ValueError):
            estimation_threshold([[1.0]], [[1.0]], 2, prob)

    def test_rejects_tiny_window(self):
        with pytest.raises(ValueError):
            estimation_threshold([[1.0]], [[1.0]], 1, 0.5)


class TestNoiseThreshold:
    def test_closed_form(self):
        assert noise_threshold(100, 50) == pytest.approx(
            math.sqrt(0.02 * math.log(100.0)), rel=1e-12
        )

    def test_unit_value_at_matched_window(self):
        horizon = 50
        window = 2.0 * math.log(2.0 * horizon)
        assert noise_threshold(window, horizon) == pytest.approx(1.0, abs=1e-12)

    def test_monotone_decreasing_in_window(self):
        values = [noise_threshold(w, 1000) for w in (10, 20, 40, 80)]
        assert all(a > b for a, b in zip(values, values[1:]))

    @pytest.mark.parametrize("window,horizon", [(0, 10), (10, 0)])
    def test_rejects_nonpositive_arguments(self, window, horizon):
        with pytest.raises(ValueError):
            noise_threshold(window, horizon)
