"""Gradient correctness, training behavior, and checkpoint round trips."""

import numpy as np
import pytest

from synthaction.classifier import (
    NumericalError,
    StreamClassifier,
    load_checkpoint,
    numerical_gradients,
    save_checkpoint,
    softmax,
)


def random_problem(rng, n=12, f=5, c=3):
    X = rng.normal(size=(n, f))
    y = rng.integers(0, c, size=n)
    return X, y


def relative_gradient_error(analytic, numeric):
    worst = 0.0
    for key in analytic:
        a, n = analytic[key].ravel(), numeric[key].ravel()
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-4)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


class TestGradients:
    def test_linear_softmax_matches_finite_differences(self):
        rng = np.random.default_rng(0)
        X, y = random_problem(rng)
        clf = StreamClassifier(num_classes=3)
        weights = clf.init_weights(5, rng)
        _, analytic = clf.loss_and_gradients(X, y, weights)
        numeric = numerical_gradients(clf, X, y, weights)
        assert relative_gradient_error(analytic, numeric) < 1e-4

    def test_mlp_matches_finite_differences(self):
        rng = np.random.default_rng(1)
        X, y = random_problem(rng)
        clf = StreamClassifier(num_classes=3, hidden_units=7)
        weights = clf.init_weights(5, rng)
        _, analytic = clf.loss_and_gradients(X, y, weights)
        numeric = numerical_gradients(clf, X, y, weights)
        assert relative_gradient_error(analytic, numeric) < 1e-4

    def test_mlp_with_fixed_dropout_mask_matches(self):
        rng = np.random.default_rng(2)
        X, y = random_problem(rng)
        clf = StreamClassifier(num_classes=3, hidden_units=7, dropout=0.5)
        weights = clf.init_weights(5, rng)
        keep = 0.5
        mask = (rng.random(7) < keep) / keep
        _, analytic = clf.loss_and_gradients(X, y, weights, dropout_mask=mask)
        numeric = numerical_gradients(clf, X, y, weights, dropout_mask=mask)
        assert relative_gradient_error(analytic, numeric) < 1e-4


class TestTraining:
    def test_zero_learning_rate_changes_nothing(self):
        rng = np.random.default_rng(3)
        X, y = random_problem(rng, n=20)
        clf = StreamClassifier(num_classes=3, learning_rate=0.0, epochs=5, seed=0)
        clf.fit(X, y)
        fresh = StreamClassifier(num_classes=3, seed=0)
        init = fresh.init_weights(5, np.random.default_rng(0))
        for key in init:
            np.testing.assert_array_equal(clf.weights_[key], init[key])
        assert len(set(round(l, 12) for l in clf.loss_history_)) == 1

    def test_separable_data_reaches_full_accuracy(self):
        rng = np.random.default_rng(4)
        n = 40
        y = np.concatenate([np.zeros(n, dtype=int), np.ones(n, dtype=int)])
        X = np.concatenate([rng.normal(-2.0, 0.4, size=(n, 3)),
                            rng.normal(+2.0, 0.4, size=(n, 3))])
        clf = StreamClassifier(num_classes=2, learning_rate=0.5, epochs=50,
                               batch_size=16, seed=1)
        clf.fit(X, y)
        assert clf.score(X, y) == 1.0

    def test_small_lr_loss_non_increasing_first_epochs(self):
        rng = np.random.default_rng(5)
        X, y = random_problem(rng, n=60, f=8, c=4)
        clf = StreamClassifier(num_classes=4, learning_rate=1e-3, momentum=0.0,
                               epochs=5, batch_size=60, seed=2)
        clf.fit(X, y)
        for earlier, later in zip(clf.loss_history_, clf.loss_history_[1:]):
            assert later <= earlier + 1e-12

    def test_training_is_bit_reproducible(self):
        rng = np.random.default_rng(6)
        X, y = random_problem(rng, n=30)
        a = StreamClassifier(num_classes=3, hidden_units=6, dropout=0.4,
                             epochs=8, seed=7).fit(X, y)
        b = StreamClassifier(num_classes=3, hidden_units=6, dropout=0.4,
                             epochs=8, seed=7).fit(X, y)
        for key in a.weights_:
            assert np.array_equal(a.weights_[key], b.weights_[key])
        assert a.loss_history_ == b.loss_history_

    def test_nan_features_rejected(self):
        X = np.full((4, 3), np.nan)
        clf = StreamClassifier(num_classes=2)
        with pytest.raises(ValueError):
            clf.fit(X, np.array([0, 1, 0, 1]))

    def test_divergence_raises_numerical_error(self):
        rng = np.random.default_rng(8)
        X, y = random_problem(rng, n=16, f=4, c=2)
        clf = StreamClassifier(num_classes=2, learning_rate=1e8, epochs=50,
                               momentum=0.9, batch_size=4, seed=0)
        with pytest.raises(NumericalError):
            clf.fit(X * 1e200, y)

    def test_batch_capped_at_dataset_size(self):
        rng = np.random.default_rng(9)
        X, y = random_problem(rng, n=10)
        clf = StreamClassifier(num_classes=3, batch_size=128, epochs=2, seed=0)
        clf.fit(X, y)
        assert clf.batch_size_used_ == 10

    def test_labels_out_of_range_rejected(self):
        clf = StreamClassifier(num_classes=2)
        with pytest.raises(ValueError):
            clf.fit(np.zeros((3, 2)), np.array([0, 1, 2]))


class TestPrediction:
    def test_zero_weights_give_uniform_scores(self):
        clf = StreamClassifier(num_classes=4)
        clf.init_weights(6, rng=None)  # zeros
        probs = clf.predict_proba(np.ones((2, 6)))
        np.testing.assert_allclose(probs, 0.25, atol=1e-12)

    def test_probabilities_form_simplex(self):
        rng = np.random.default_rng(10)
        X, y = random_problem(rng, n=25)
        clf = StreamClassifier(num_classes=3, hidden_units=5, epochs=5, seed=3)
        clf.fit(X, y)
        probs = clf.predict_proba(X)
        assert np.all(probs >= 0)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)

    def test_softmax_stability_with_large_logits(self):
        probs = softmax(np.array([[1000.0, 0.0, -1000.0]]))
        assert np.isfinite(probs).all()
        assert probs[0, 0] == pytest.approx(1.0)


class TestParamsApi:
    def test_get_set_params(self):
        clf = StreamClassifier(num_classes=3, hidden_units=9, dropout=0.8)
        params = clf.get_params()
        assert params["hidden_units"] == 9
        assert params["dropout"] == 0.8
        clf.set_params(learning_rate=0.01)
        assert clf.learning_rate == 0.01
        with pytest.raises(ValueError):
            clf.set_params(width=3)


class TestCheckpoints:
    def test_round_trip_multi_stream(self, tmp_path):
        rng = np.random.default_rng(11)
        X, y = random_problem(rng, n=30)
        linear = StreamClassifier(num_classes=3, epochs=3, seed=0).fit(X, y)
        mlp = StreamClassifier(num_classes=3, hidden_units=6, dropout=0.8,
                               epochs=3, seed=1).fit(X, y)
        path = tmp_path / "model.ckpt"
        save_checkpoint(path, [("flow_real", linear, 2.0), ("rgb_real", mlp, 0.5)])
        loaded = load_checkpoint(path)
        assert [name for name, _, _ in loaded] == ["flow_real", "rgb_real"]
        assert [w for _, _, w in loaded] == [2.0, 0.5]
        for (_, orig, _), (_, back, _) in zip(
                [("", linear, 0), ("", mlp, 0)], loaded):
            assert back.num_classes == orig.num_classes
            assert back.hidden_units == orig.hidden_units
            for key in orig.weights_:
                np.testing.assert_array_equal(back.weights_[key],
                                              orig.weights_[key])
        probs_a = mlp.predict_proba(X)
        probs_b = loaded[1][1].predict_proba(X)
        np.testing.assert_array_equal(probs_a, probs_b)

    def test_magic_and_version_bytes(self, tmp_path):
        rng = np.random.default_rng(12)
        X, y = random_problem(rng)
        clf = StreamClassifier(num_classes=3, epochs=2, seed=0).fit(X, y)
        path = tmp_path / "m.ckpt"
        save_checkpoint(path, [("flow", clf, 1.0)])
        data = path.read_bytes()
        assert data[:4] == b"TSNC"
        assert data[4] == 1

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.ckpt"
        path.write_bytes(b"NOPE" + bytes(16))
        with pytest.raises(ValueError, match="magic"):
            load_checkpoint(path)

    def test_identical_training_gives_identical_checkpoints(self, tmp_path):
        rng = np.random.default_rng(13)
        X, y = random_problem(rng, n=30)
        pa, pb = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
        for path in (pa, pb):
            clf = StreamClassifier(num_classes=3, hidden_units=4, epochs=4,
                                   seed=21).fit(X, y)
            save_checkpoint(path, [("flow", clf, 1.0)])
        assert pa.read_bytes() == pb.read_bytes()
