import numpy as np
import pytest

from prontrain.calibration import (
    CalibrationModel,
    apply_temperature,
    expected_calibration_error,
    fit_calibration,
    nll,
    softmax_rows,
)


def calibrated_logits(n=4000, seed=0):
    """Logits whose softmax matches the empirical label frequencies by
    construction: p ~ U, label ~ Bernoulli(p), logits = [logit(p), 0]."""
    rng = np.random.default_rng(seed)
    p = rng.uniform(0.05, 0.95, size=n)
    labels = (rng.random(n) >= p).astype(np.int64)  # 0 = native w.p. p
    logits = np.stack([np.log(p / (1 - p)), np.zeros(n)], axis=1)
    return logits, labels


class TestFit:
    def test_calibrated_recovers_unit_temperature(self):
        logits, labels = calibrated_logits()
        calib = fit_calibration(logits, labels)
        assert 0.9 <= calib.temperature <= 1.1

    def test_overconfident_recovery(self):
        logits, labels = calibrated_logits(seed=1)
        calib = fit_calibration(logits * 3.0, labels)
        assert 2.4 <= calib.temperature <= 3.6
        assert calib.fit_metadata["ece_after"] < calib.fit_metadata["ece_before"]

    def test_degenerate_logits_flagged(self):
        logits = np.tile([1.0, -1.0], (50, 1))
        labels = np.array([0, 1] * 25)
        calib = fit_calibration(logits, labels)
        assert calib.temperature == 1.0
        assert calib.fit_metadata["degenerate"] is True

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            fit_calibration(np.zeros((0, 2)), np.zeros(0, dtype=int))

    def test_single_class_rejected(self):
        with pytest.raises(ValueError):
            fit_calibration(np.zeros((5, 2)), np.zeros(5, dtype=int))

    def test_positive_temperature_enforced(self):
        with pytest.raises(ValueError):
            CalibrationModel(temperature=0.0)


class TestApply:
    def test_unit_temperature_identity(self):
        rng = np.random.default_rng(2)
        logits = rng.normal(size=(20, 2))
        np.testing.assert_allclose(apply_temperature(logits, 1.0),
                                   softmax_rows(logits), atol=1e-12)

    def test_argmax_invariant_under_temperature(self):
        rng = np.random.default_rng(3)
        logits = rng.normal(size=(100, 2))
        base = softmax_rows(logits).argmax(axis=1)
        for t in (0.1, 0.5, 2.0, 10.0):
            np.testing.assert_array_equal(
                apply_temperature(logits, t).argmax(axis=1), base)

    def test_monotone_toward_half(self):
        # with logit(native) > logit(non-native), P(native) strictly
        # decreases toward 0.5 as temperature grows
        logits = np.array([[2.0, -1.0]])
        temps = np.linspace(0.1, 20.0, 50)
        ps = [apply_temperature(logits, t)[0, 0] for t in temps]
        assert all(a > b for a, b in zip(ps, ps[1:]))
        assert all(p > 0.5 for p in ps)


class TestECE:
    def test_perfect_confidence_and_accuracy(self):
        probs = np.tile([1.0, 0.0], (10, 1))
        labels = np.zeros(10, dtype=int)
        assert expected_calibration_error(probs, labels) == pytest.approx(0.0)

    def test_confident_but_wrong(self):
        probs = np.tile([1.0, 0.0], (10, 1))
        labels = np.ones(10, dtype=int)
        assert expected_calibration_error(probs, labels) == pytest.approx(1.0)

    def test_nll_matches_closed_form(self):
        logits = np.array([[np.log(3.0), 0.0]])
        labels = np.array([0])
        assert nll(logits, labels, 1.0) == pytest.approx(-np.log(0.75))
