"""Losses, analytic gradients, and the toy trainers."""

from __future__ import annotations

import math

import numpy as np
import pytest

from pns_engine.metrics import pairwise_accuracy
from pns_engine.optim import (
    GradientCheckError,
    ToyScorer,
    center_bt_grad,
    center_bt_loss,
    dpo_grad,
    dpo_loss,
    finite_diff_check,
    make_separable_pairs,
    neg_log_sigmoid,
    train_toy_dpo,
    train_toy_rm,
)

LN2 = 0.6931471805599453


class TestLossValues:
    def test_neg_log_sigmoid_anchors(self):
        np.testing.assert_allclose(neg_log_sigmoid(0.0), LN2, rtol=0, atol=1e-15)
        np.testing.assert_allclose(neg_log_sigmoid(2.0), 0.12692801104297263, rtol=0, atol=1e-15)
        np.testing.assert_allclose(neg_log_sigmoid(-2.0), 2.1269280110429727, rtol=0, atol=1e-15)

    def test_neg_log_sigmoid_extremes_finite(self):
        assert neg_log_sigmoid(1000.0) == 0.0
        assert math.isfinite(neg_log_sigmoid(-1000.0))
        np.testing.assert_allclose(neg_log_sigmoid(-1000.0), 1000.0)

    def test_center_bt_loss_anchor(self):
        np.testing.assert_allclose(center_bt_loss(1.0, 1.0, 0.1),
                                   LN2 + 0.4, rtol=0, atol=1e-15)

    def test_center_bt_zero_lambda_matches_plain_bt(self):
        np.testing.assert_allclose(center_bt_loss(2.0, 1.0, 0.0), neg_log_sigmoid(1.0))

    def test_center_bt_grad_anchor(self):
        g_w, g_l = center_bt_grad(1.0, 1.0, 0.1)
        np.testing.assert_allclose(g_w, -0.5 + 0.4, rtol=0, atol=1e-15)
        np.testing.assert_allclose(g_l, 0.5 + 0.4, rtol=0, atol=1e-15)

    def test_dpo_loss_zero_margin(self):
        np.testing.assert_allclose(dpo_loss(0.3, 0.3, 0.1), LN2, rtol=0, atol=1e-15)

    def test_dpo_grad_zero_margin(self):
        np.testing.assert_allclose(dpo_grad(0.3, 0.3, 0.1), (-0.05, 0.05), rtol=0, atol=1e-15)

    def test_dpo_grad_antisymmetric(self):
        g_w, g_l = dpo_grad(1.2, -0.4, 0.3)
        np.testing.assert_allclose(g_w, -g_l, rtol=0, atol=1e-15)


class TestFiniteDiff:
    def test_center_bt_sweep(self):
        rng = np.random.default_rng(42)
        worst = 0.0
        for _ in range(100):
            r_w, r_l = rng.uniform(-2, 2, size=2)
            lam = float(rng.uniform(0, 1))
            err = finite_diff_check(
                lambda p: center_bt_loss(p[0], p[1], lam),
                lambda p: center_bt_grad(p[0], p[1], lam),
                (r_w, r_l),
            )
            worst = max(worst, err)
        assert worst < 1e-5

    def test_dpo_sweep(self):
        rng = np.random.default_rng(43)
        worst = 0.0
        for _ in range(100):
            lw, ll = rng.uniform(-2, 2, size=2)
            beta = float(rng.uniform(0.05, 1.0))
            err = finite_diff_check(
                lambda p: dpo_loss(p[0], p[1], beta),
                lambda p: dpo_grad(p[0], p[1], beta),
                (lw, ll),
            )
            worst = max(worst, err)
        assert worst < 1e-5

    def test_detects_wrong_gradient(self):
        err = finite_diff_check(
            lambda p: center_bt_loss(p[0], p[1], 0.1),
            lambda p: tuple(-g for g in center_bt_grad(p[0], p[1], 0.1)),
            (0.7, -0.3),
        )
        assert err > 1e-2

    def test_non_finite_loss_raises(self):
        with pytest.raises(GradientCheckError):
            finite_diff_check(lambda p: float("inf"), lambda p: np.zeros(2), (0.0, 0.0))


class TestToyScorer:
    def test_score(self):
        scorer = ToyScorer({"a": np.array([1.0, 2.0])}, weights=np.array([0.5, 0.25]))
        assert scorer.score("a") == 1.0

    def test_requires_consistent_dims(self):
        with pytest.raises(ValueError):
            ToyScorer({"a": np.ones(2), "b": np.ones(3)})

    def test_requires_items(self):
        with pytest.raises(ValueError):
            ToyScorer({})

    def test_weights_dim_checked(self):
        with pytest.raises(ValueError):
            ToyScorer({"a": np.ones(2)}, weights=np.ones(3))

    def test_unweighted_score_rejected(self):
        with pytest.raises(ValueError):
            ToyScorer({"a": np.ones(2)}).score("a")


class TestMakeSeparablePairs:
    def test_shapes_and_flip_count(self):
        feats, pairs, clean = make_separable_pairs(50, dim=8, flip_fraction=0.1, seed=1)
        assert len(feats) == 100
        assert len(pairs) == len(clean) == 50
        flipped = sum(1 for p, c in zip(pairs, clean) if p != c)
        assert flipped == 5
        for p, c in zip(pairs, clean):
            assert p == c or p == (c[1], c[0])

    def test_no_flips_by_default(self):
        _, pairs, clean = make_separable_pairs(10, seed=2)
        assert pairs == clean

    def test_deterministic(self):
        a = make_separable_pairs(10, seed=3)
        b = make_separable_pairs(10, seed=3)
        assert a[1] == b[1]
        for key in a[0]:
            np.testing.assert_array_equal(a[0][key], b[0][key])


class TestTrainToyRm:
    def test_deterministic_given_seed(self):
        feats, pairs, _ = make_separable_pairs(40, seed=4)
        s1, h1 = train_toy_rm(pairs, ToyScorer(feats), steps=50, seed=9)
        s2, h2 = train_toy_rm(pairs, ToyScorer(feats), steps=50, seed=9)
        np.testing.assert_array_equal(s1.weights, s2.weights)
        assert h1 == h2

    def test_zero_lr_keeps_weights(self):
        feats, pairs, _ = make_separable_pairs(20, seed=5)
        w0 = np.full(8, 0.3)
        trained, history = train_toy_rm(pairs, ToyScorer(feats, weights=w0.copy()),
                                        lr=0.0, steps=25)
        np.testing.assert_array_equal(trained.weights, w0)
        assert len(history) == 26

    def test_loss_decreases(self):
        feats, pairs, _ = make_separable_pairs(100, seed=6)
        _, history = train_toy_rm(pairs, ToyScorer(feats), lam=0.1, lr=0.3, steps=100, seed=1)
        assert history[-1]["loss"] < history[0]["loss"]

    def test_history_tracks_final_state(self):
        feats, pairs, clean = make_separable_pairs(60, seed=7)
        trained, history = train_toy_rm(pairs, ToyScorer(feats), steps=80, seed=2)
        acc = pairwise_accuracy([(trained.score(c), trained.score(r)) for c, r in clean])
        assert history[-1]["pairwise_accuracy"] == acc

    def test_separates_clean_data(self):
        feats, pairs, clean = make_separable_pairs(150, seed=8)
        trained, _ = train_toy_rm(pairs, ToyScorer(feats), lam=0.1, lr=0.3, steps=400, seed=3)
        acc = pairwise_accuracy([(trained.score(c), trained.score(r)) for c, r in clean])
        assert acc == 1.0

    def test_empty_pairs_rejected(self):
        feats, _, _ = make_separable_pairs(5, seed=9)
        with pytest.raises(ValueError):
            train_toy_rm([], ToyScorer(feats))


class TestTrainToyDpo:
    def test_initial_loss_is_ln2_when_theta_equals_ref(self):
        feats, pairs, _ = make_separable_pairs(100, seed=10)
        ref = ToyScorer(feats, weights=np.zeros(8))
        theta = ToyScorer(feats, weights=np.zeros(8))
        _, history = train_toy_dpo(pairs, theta, ref, beta=0.1, steps=5)
        assert abs(history[0]["loss"] - LN2) <= 1e-12

    def test_preference_rate_improves(self):
        feats, pairs, _ = make_separable_pairs(100, seed=11)
        ref = ToyScorer(feats, weights=np.zeros(8))
        theta = ToyScorer(feats, weights=np.zeros(8))
        _, history = train_toy_dpo(pairs, theta, ref, beta=0.1, lr=0.5, steps=200)
        assert history[-1]["preference_rate"] >= 0.95

    def test_reference_weights_required(self):
        feats, pairs, _ = make_separable_pairs(10, seed=12)
        with pytest.raises(ValueError):
            train_toy_dpo(pairs, ToyScorer(feats), ToyScorer(feats))

    def test_deterministic(self):
        feats, pairs, _ = make_separable_pairs(30, seed=13)
        ref = ToyScorer(feats, weights=np.zeros(8))
        s1, h1 = train_toy_dpo(pairs, ToyScorer(feats), ref, steps=40, seed=5)
        s2, h2 = train_toy_dpo(pairs, ToyScorer(feats), ref, steps=40, seed=5)
        np.testing.assert_array_equal(s1.weights, s2.weights)
        assert h1 == h2
