"""Metric hand values, degenerate cases, and brute-force oracles."""

import numpy as np
import pytest

from wavets import ConfigError, DataError
from wavets.metrics import (
    MetricsReport,
    mae,
    mase,
    mse,
    naive_repeat_last,
    naive_seasonal,
    owa,
    smape,
)


class TestMseMae:
    def test_zero_on_equal(self, rng):
        x = rng.normal(size=(5, 2))
        assert mse(x, x) == 0.0
        assert mae(x, x) == 0.0

    def test_hand_values(self):
        truth = np.array([[1.0], [3.0]])
        pred = np.array([[2.0], [5.0]])
        assert mse(truth, pred) == pytest.approx(2.5, abs=1e-12)
        assert mae(truth, pred) == pytest.approx(1.5, abs=1e-12)

    def test_homogeneity(self, rng):
        truth = rng.normal(size=(8, 3))
        pred = truth + rng.normal(size=(8, 3))
        doubled = truth + 2 * (pred - truth)
        assert mse(truth, doubled) == pytest.approx(4 * mse(truth, pred), rel=1e-12)
        assert mae(truth, doubled) == pytest.approx(2 * mae(truth, pred), rel=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(DataError):
            mse(np.zeros((2, 2)), np.zeros((3, 2)))

    def test_against_loop_oracle(self, rng):
        truth = rng.normal(size=(7, 4))
        pred = rng.normal(size=(7, 4))
        acc_sq = 0.0
        acc_abs = 0.0
        for i in range(7):
            for c in range(4):
                acc_sq += (truth[i, c] - pred[i, c]) ** 2
                acc_abs += abs(truth[i, c] - pred[i, c])
        assert abs(mse(truth, pred) - acc_sq / 28) < 1e-12
        assert abs(mae(truth, pred) - acc_abs / 28) < 1e-12


class TestSmape:
    def test_zero_on_equal_nonzero(self):
        assert smape(np.array([1.0, 2.0]), np.array([1.0, 2.0])) == 0.0

    def test_hand_value(self):
        assert smape(np.array([2.0]), np.array([1.0])) == pytest.approx(
            200.0 / 3.0, abs=1e-9
        )

    def test_zero_over_zero_convention(self):
        assert smape(np.array([0.0]), np.array([0.0])) == 0.0

    def test_bounded(self, rng):
        x = rng.normal(size=50)
        y = rng.normal(size=50)
        assert 0.0 <= smape(x, y) <= 200.0


class TestMase:
    def test_hand_value(self):
        val = mase(np.array([1.0, 2.0, 3.0]), np.array([1.0, 1.0, 1.0]), 1)
        assert val == pytest.approx(1.0, abs=1e-12)

    def test_zero_on_equal(self):
        assert mase(np.array([1.0, 2.0, 3.0]), np.array([1.0, 2.0, 3.0]), 1) == 0.0

    def test_constant_truth_undefined(self):
        assert mase(np.array([2.0, 2.0, 2.0]), np.array([1.0, 1.0, 1.0]), 1) is None

    def test_period_bounds(self):
        with pytest.raises(ConfigError):
            mase(np.array([1.0, 2.0]), np.array([1.0, 2.0]), 2)

    def test_seasonal_denominator(self):
        # m=2 on [1,2,3,4]: denominator mean(|3-1|,|4-2|) = 2.
        truth = np.array([1.0, 2.0, 3.0, 4.0])
        pred = truth + 1.0
        assert mase(truth, pred, 2) == pytest.approx(0.5, abs=1e-12)


class TestOwa:
    def test_equal_is_one(self):
        assert owa((10.0, 2.0), (10.0, 2.0)) == 1.0

    def test_half_is_half(self):
        assert owa((5.0, 1.0), (10.0, 2.0)) == 0.5

    def test_mixed(self):
        assert owa((10.0, 1.0), (10.0, 2.0)) == pytest.approx(0.75)

    def test_zero_reference_rejected(self):
        with pytest.raises(DataError):
            owa((1.0, 1.0), (0.0, 1.0))


class TestNaiveForecasters:
    def test_repeat_last(self):
        window = np.array([[1.0], [2.0], [7.0]])
        np.testing.assert_array_equal(
            naive_repeat_last(window, 3), [[7.0], [7.0], [7.0]]
        )

    def test_seasonal_copy(self):
        window = np.array([[1.0], [2.0], [1.0], [2.0]])
        np.testing.assert_array_equal(naive_seasonal(window, 2, 2), [[1.0], [2.0]])

    def test_seasonal_wraps_past_period(self):
        window = np.array([[1.0], [2.0], [3.0]])
        out = naive_seasonal(window, 5, 3)
        np.testing.assert_array_equal(out[:, 0], [1.0, 2.0, 3.0, 1.0, 2.0])

    def test_period_one_is_repeat_last(self, rng):
        window = rng.normal(size=(6, 2))
        np.testing.assert_array_equal(
            naive_seasonal(window, 4, 1), naive_repeat_last(window, 4)
        )

    def test_period_too_large(self):
        with pytest.raises(ConfigError):
            naive_seasonal(np.zeros((4, 1)), 2, 5)


class TestMetricsReport:
    def test_long_term_text(self):
        rep = MetricsReport(mse=0.25, mae=0.5, horizon=96, channels=7)
        text = rep.to_text()
        assert "mse=0.25" in text
        assert "smape" not in text

    def test_short_term_text_with_undefined_mase(self):
        rep = MetricsReport(
            mse=1.0, mae=1.0, horizon=4, channels=1,
            smape=3.2, mase=None, owa=None, period=2,
        )
        text = rep.to_text()
        assert "mase=undefined" in text
        assert "period=2" in text
