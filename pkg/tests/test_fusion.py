"""Consensus, weighted fusion, and evaluation bookkeeping."""

import numpy as np
import pytest

from synthaction.classifier import StreamClassifier, softmax
from synthaction.fusion import evaluate, fuse_scores, predict_video


class TestPredictVideo:
    def _model(self, f=4, c=3, seed=0):
        rng = np.random.default_rng(seed)
        clf = StreamClassifier(num_classes=c)
        clf.init_weights(f, rng)
        return clf

    def test_single_snippet_equals_softmax(self):
        clf = self._model()
        feats = np.random.default_rng(1).normal(size=(1, 4))
        scores = predict_video(clf, feats)
        np.testing.assert_allclose(scores, clf.predict_proba(feats)[0], atol=1e-12)

    def test_zero_weights_uniform(self):
        clf = StreamClassifier(num_classes=4)
        clf.init_weights(5, rng=None)
        scores = predict_video(clf, np.ones((3, 5)))
        np.testing.assert_allclose(scores, 0.25, atol=1e-12)

    def test_consensus_is_mean_of_snippet_scores(self):
        clf = self._model(seed=3)
        feats = np.random.default_rng(2).normal(size=(3, 4))
        scores = predict_video(clf, feats)
        manual = np.mean([clf.predict_proba(feats[i:i + 1])[0] for i in range(3)],
                         axis=0)
        np.testing.assert_allclose(scores, manual, atol=1e-12)
        assert scores.sum() == pytest.approx(1.0, abs=1e-6)


class TestFuseScores:
    def test_identical_streams_idempotent(self):
        s = np.array([0.2, 0.5, 0.3])
        fused, pred = fuse_scores([s, s, s], [1.0, 2.0, 0.5])
        np.testing.assert_allclose(fused, s, atol=1e-12)
        assert pred == 1

    def test_weighted_mean_by_hand(self):
        s1 = np.array([0.8, 0.2])
        s2 = np.array([0.1, 0.9])
        fused, pred = fuse_scores([s1, s2], [2.0, 1.0])
        np.testing.assert_allclose(fused, (2 * s1 + s2) / 3, atol=1e-12)
        assert pred == 0

    def test_network1_weights_match_independent_computation(self):
        """Stream weighting 2.0/1.0/1.0/0.5 against a brute-force mean."""
        rng = np.random.default_rng(5)
        streams = [softmax(rng.normal(size=(1, 6)))[0] for _ in range(4)]
        weights = [2.0, 1.0, 1.0, 0.5]
        fused, pred = fuse_scores(streams, weights)
        expected = np.zeros(6)
        for w, s in zip(weights, streams):
            expected += w * s
        expected /= sum(weights)
        np.testing.assert_allclose(fused, expected, atol=1e-12)
        assert pred == int(np.argmax(expected))
        assert fused.sum() == pytest.approx(1.0, abs=1e-9)

    def test_argmax_invariant_to_weight_scaling(self):
        rng = np.random.default_rng(6)
        streams = [softmax(rng.normal(size=(1, 5)))[0] for _ in range(3)]
        w = np.array([2.0, 1.0, 0.5])
        _, p1 = fuse_scores(streams, w)
        _, p2 = fuse_scores(streams, w * 7.3)
        assert p1 == p2

    def test_tie_breaks_to_lowest_index(self):
        s = np.array([0.4, 0.4, 0.2])
        _, pred = fuse_scores([s], [1.0])
        assert pred == 0

    def test_errors(self):
        with pytest.raises(ValueError):
            fuse_scores([np.ones(3), np.ones(4)], [1.0, 1.0])
        with pytest.raises(ValueError):
            fuse_scores([np.ones(3)], [0.0])
        with pytest.raises(ValueError):
            fuse_scores([np.ones(3)], [1.0, 2.0])


class TestEvaluate:
    def test_oracle_predictions_score_one(self):
        y = np.array([0, 1, 2, 1, 0])
        result = evaluate(y, y, num_classes=3)
        assert result.accuracy == 1.0
        np.testing.assert_array_equal(result.per_class_accuracy, [1.0, 1.0, 1.0])

    def test_constant_predictor_hits_chance_on_balanced_set(self):
        y = np.repeat(np.arange(4), 10)
        preds = np.zeros_like(y)
        result = evaluate(y, preds, num_classes=4)
        assert result.accuracy == pytest.approx(0.25)

    def test_confusion_rows_sum_to_class_counts(self):
        rng = np.random.default_rng(7)
        y = rng.integers(0, 3, size=60)
        preds = rng.integers(0, 3, size=60)
        result = evaluate(y, preds, num_classes=3)
        for c in range(3):
            assert result.confusion[c].sum() == np.sum(y == c)
        assert result.confusion.sum() == 60

    def test_empty_split_rejected(self):
        with pytest.raises(ValueError):
            evaluate([], [], num_classes=3)
