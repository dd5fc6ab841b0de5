"""Confusion-matrix and RMSE-% metrics against counting oracles."""
import math

import numpy as np
import pytest

from ftl.metrics import accuracy, confusion_precision, rmse_percent


class TestConfusionPrecision:
    def test_perfect_predictor_is_identity(self):
        labels = [0, 1, 0, 1, 1, 0]
        conf = confusion_precision(labels, labels)
        assert np.array_equal(conf, np.eye(2))

    def test_all_present_predictor_has_undefined_absent_column(self):
        labels = [0, 1] * 10
        preds = [1] * 20
        conf = confusion_precision(preds, labels)
        assert math.isnan(conf[0, 0]) and math.isnan(conf[1, 0])
        assert conf[0, 1] == pytest.approx(0.5)
        assert conf[1, 1] == pytest.approx(0.5)

    def test_random_case_matches_count_and_divide_oracle(self):
        rng = np.random.default_rng(0)
        labels = rng.integers(0, 2, size=200)
        preds = rng.integers(0, 2, size=200)
        conf = confusion_precision(preds, labels)
        for true in range(2):
            for pred in range(2):
                hits = sum(1 for y, p in zip(labels, preds)
                           if y == true and p == pred)
                total = sum(1 for p in preds if p == pred)
                assert conf[true, pred] == pytest.approx(hits / total)

    def test_defined_columns_sum_to_one(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            n = int(rng.integers(1, 60))
            labels = rng.integers(0, 2, size=n)
            preds = rng.integers(0, 2, size=n)
            conf = confusion_precision(preds, labels)
            for col in range(2):
                s = conf[:, col].sum()
                assert math.isnan(s) or abs(s - 1.0) <= 1e-12

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            confusion_precision([0, 1], [0])


class TestRmsePercent:
    def test_zero_error(self):
        assert rmse_percent([1.0, 2.0], [1.0, 2.0], 200.0) == 0.0

    def test_constant_error_arithmetic(self):
        preds = np.full(50, 30.0)
        targets = np.full(50, 10.0)
        assert rmse_percent(preds, targets, 200.0) == pytest.approx(10.0)

    def test_matches_hand_formula(self):
        rng = np.random.default_rng(2)
        p = rng.uniform(-100, 100, size=40)
        t = rng.uniform(-100, 100, size=40)
        want = 100.0 * math.sqrt(float(np.mean((p - t) ** 2))) / 200.0
        assert rmse_percent(p, t, 200.0) == pytest.approx(want, rel=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            rmse_percent([], [], 200.0)

    def test_accuracy_empty_rejected(self):
        with pytest.raises(ValueError):
            accuracy([], [])
