import math

import numpy as np
import pytest

from prontrain import scorer
from prontrain.scorer import (
    TrainConfig,
    TrainingError,
    attention_weights,
    classify,
    focal_loss,
    init_params,
    loss_and_grads,
    score_chunks,
    train_on_features,
)

from conftest import split_pairs


def tiny_params(input_dim=3, hidden=4, attention=2, seed=0, bidirectional=True):
    return init_params(input_dim, hidden_dim=hidden, attention_dim=attention,
                       bidirectional=bidirectional,
                       rng=np.random.default_rng(seed))


def brute_force_attention(H, w_a1, w_a2):
    """Scalar-arithmetic evaluation of M = tanh(W_A1 H), a = softmax(W_A2 M)."""
    T, Dh = H.shape
    A = w_a1.shape[0]
    scores = []
    for t in range(T):
        s = 0.0
        for a in range(A):
            m = 0.0
            for d in range(Dh):
                m += w_a1[a][d] * H[t][d]
            s += w_a2[0][a] * math.tanh(m)
        scores.append(s)
    mx = max(scores)
    exps = [math.exp(s - mx) for s in scores]
    z = sum(exps)
    return np.array([e / z for e in exps])


class TestAttention:
    def test_zero_w_a2_uniform(self):
        p = tiny_params()
        p.w_a2 = np.zeros_like(p.w_a2)
        H = np.random.default_rng(0).normal(size=(5, p.state_dim))
        alpha = attention_weights(H, p).weights
        np.testing.assert_allclose(alpha, np.full(5, 0.2), atol=1e-12)

    def test_singleton(self):
        p = tiny_params()
        H = np.random.default_rng(1).normal(size=(1, p.state_dim))
        np.testing.assert_allclose(attention_weights(H, p).weights, [1.0])

    def test_matches_scalar_brute_force(self):
        p = tiny_params(hidden=1, attention=2, seed=3)
        H = np.random.default_rng(2).normal(size=(3, 2))
        alpha = attention_weights(H, p).weights
        expected = brute_force_attention(H, p.w_a1, p.w_a2)
        np.testing.assert_allclose(alpha, expected, atol=1e-6)

    def test_dimension_mismatch(self):
        p = tiny_params()
        with pytest.raises(ValueError):
            attention_weights(np.zeros((4, p.state_dim + 1)), p)

    def test_sums_to_one_random(self):
        rng = np.random.default_rng(4)
        p = tiny_params()
        for _ in range(100):
            H = rng.normal(size=(rng.integers(1, 20), p.state_dim))
            alpha = attention_weights(H, p).weights
            assert np.all(alpha >= 0)
            assert abs(alpha.sum() - 1.0) < 1e-6


class TestClassify:
    def test_zero_head_tie_breaks_native(self):
        p = tiny_params()
        p.w_s = np.zeros_like(p.w_s)
        p.b_s = np.zeros_like(p.b_s)
        out = classify(np.random.default_rng(0).normal(size=(6, 3)), p)
        np.testing.assert_allclose(out.probabilities, [0.5, 0.5], atol=1e-12)
        assert out.predicted_label == "native"

    def test_forced_logits_closed_form(self):
        p = tiny_params()
        # zero the state path and force the head bias to [ln 3, 0]
        p.w_s = np.zeros_like(p.w_s)
        p.b_s = np.array([math.log(3.0), 0.0])
        out = classify(np.random.default_rng(1).normal(size=(4, 3)), p)
        np.testing.assert_allclose(out.probabilities, [0.75, 0.25], atol=1e-9)

    def test_pooling_equals_explicit_weighted_sum(self):
        p = tiny_params(seed=5)
        x = np.random.default_rng(2).normal(size=(7, 3))
        out = classify(x, p)
        H, alpha = out.hidden_states, out.attention.weights
        explicit = np.zeros(p.state_dim)
        for t in range(H.shape[0]):
            explicit += alpha[t] * H[t]
        pooled_logits = p.w_s @ explicit + p.b_s
        np.testing.assert_allclose(out.logits, pooled_logits, atol=1e-6)

    def test_logit_shift_invariance(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            logits = rng.normal(size=2)
            shift = rng.normal()
            np.testing.assert_allclose(scorer.softmax(logits),
                                       scorer.softmax(logits + shift), atol=1e-6)

    def test_input_dim_mismatch(self):
        p = tiny_params()
        with pytest.raises(ValueError):
            classify(np.zeros((4, 5)), p)

    def test_deterministic(self):
        p = tiny_params()
        x = np.random.default_rng(3).normal(size=(5, 3))
        a = classify(x, p)
        b = classify(x, p)
        np.testing.assert_array_equal(a.probabilities, b.probabilities)


class TestFocalLoss:
    def test_perfect_prediction_zero(self):
        for gamma in (0.0, 1.0, 2.0, 5.0):
            assert focal_loss(np.array([1.0, 0.0]), 0, gamma) == pytest.approx(0.0)

    def test_gamma_zero_is_cross_entropy(self):
        assert focal_loss(np.array([0.5, 0.5]), 0, 0.0) == pytest.approx(math.log(2))

    def test_scalar_focal_value(self):
        val = focal_loss(np.array([0.9, 0.1]), 0, 2.0)
        assert val == pytest.approx(0.01 * -math.log(0.9), rel=1e-9)
        assert val == pytest.approx(1.0536e-3, rel=1e-3)

    def test_ce_equivalence_random(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            p0 = rng.uniform(1e-6, 1 - 1e-6)
            probs = np.array([p0, 1 - p0])
            y = int(rng.integers(0, 2))
            assert abs(focal_loss(probs, y, 0.0) - (-math.log(probs[y]))) < 1e-9

    def test_epsilon_clamp(self):
        assert np.isfinite(focal_loss(np.array([0.0, 1.0]), 0, 2.0))


class TestGradients:
    def test_finite_difference_all_blocks(self):
        rng = np.random.default_rng(8)
        x = rng.normal(size=(4, 5))
        p = init_params(5, hidden_dim=3, attention_dim=2, rng=rng)
        _, grads, _ = loss_and_grads(x, 1, p, 2.0)
        eps = 1e-6
        for name, arr in p.arrays().items():
            num = np.zeros_like(arr)
            it = np.nditer(arr, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                old = arr[idx]
                arr[idx] = old + eps
                lp, _, _ = loss_and_grads(x, 1, p, 2.0)
                arr[idx] = old - eps
                lm, _, _ = loss_and_grads(x, 1, p, 2.0)
                arr[idx] = old
                num[idx] = (lp - lm) / (2 * eps)
            denom = max(np.max(np.abs(num)), 1e-8)
            rel = np.max(np.abs(num - grads[name])) / denom
            assert rel < 1e-4, f"gradient mismatch in {name}: {rel}"


class TestTraining:
    def test_converges_on_synthetic_corpus(self, corpus, feature_sets, trained_scorer):
        params, log = trained_scorer
        test = split_pairs(corpus, feature_sets, "test")
        _, acc = scorer.evaluate_on_features(test, params, 2.0)
        assert acc >= 0.95
        assert len(log) <= 12

    def test_deterministic_loss_curves(self, corpus, feature_sets):
        cfg = TrainConfig(batch_size=8, learning_rate=3e-3, max_epochs=3,
                          rng_seed=13, hidden_dim=6, attention_dim=4, dropout_p=0.3)
        train = split_pairs(corpus, feature_sets, "train")[:16]
        val = split_pairs(corpus, feature_sets, "validation")
        _, log1 = train_on_features(train, val, cfg)
        _, log2 = train_on_features(train, val, cfg)
        assert log1 == log2

    def test_single_class_split_rejected(self, corpus, feature_sets):
        train = split_pairs(corpus, feature_sets, "train")
        val = [(x, 0) for x, _ in split_pairs(corpus, feature_sets, "validation")]
        with pytest.raises(TrainingError, match="single class"):
            train_on_features(train, val, TrainConfig(max_epochs=1))

    def test_empty_split_rejected(self):
        with pytest.raises(TrainingError, match="empty"):
            train_on_features([], [], TrainConfig(max_epochs=1))


class TestScore:
    def test_symmetric_logits(self):
        p = tiny_params()
        p.w_s = np.zeros_like(p.w_s)
        p.b_s = np.zeros_like(p.b_s)
        s = score_chunks(np.random.default_rng(0).normal(size=(5, 3)), p, 2.0)
        assert s.native_probability == pytest.approx(0.5)
        assert s.display == 50

    def test_temperature_scaled_logits(self):
        p = tiny_params()
        p.w_s = np.zeros_like(p.w_s)
        p.b_s = np.array([2.0, 0.0])
        s = score_chunks(np.random.default_rng(1).normal(size=(5, 3)), p, 2.0)
        expected = 1.0 / (1.0 + math.exp(-1.0))
        assert s.native_probability == pytest.approx(expected, abs=1e-6)
        assert s.display == 73

    def test_deterministic(self):
        p = tiny_params(seed=9)
        x = np.random.default_rng(2).normal(size=(5, 3))
        a = score_chunks(x, p, 1.3)
        b = score_chunks(x, p, 1.3)
        assert a.native_probability == b.native_probability
        np.testing.assert_array_equal(a.attention, b.attention)
