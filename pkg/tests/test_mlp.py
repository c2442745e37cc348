"""Network oracles: initialization, forward math, backprop, training, persistence."""

import json
import math

import numpy as np
import pytest

from xenovert.mlp import (
    MlpModel,
    TrainConfig,
    forward,
    gradient_check,
    gradients,
    init_model,
    load_model,
    loss,
    predict,
    save_model,
    train,
)


def toy_blobs(n=200, seed=0):
    """Two well-separated 2-d clusters with labels 0/1."""
    rng = np.random.default_rng(seed)
    half = n // 2
    X = np.vstack(
        [rng.normal(0.0, 0.5, size=(half, 2)), rng.normal(5.0, 0.5, size=(n - half, 2))]
    )
    y = np.array([0] * half + [1] * (n - half))
    return X, y


class TestInit:
    def test_param_count(self):
        model = init_model([4, 200, 200, 3], task="classify")
        assert model.num_params == 41_803
        assert model.layer_sizes == [4, 200, 200, 3]

    def test_biases_start_at_zero(self):
        model = init_model([3, 8, 2], task="regress")
        assert all(not b.any() for b in model.biases)

    def test_weight_scale_tracks_fan_in(self):
        model = init_model([1000, 50, 2], task="classify", seed=5)
        assert model.weights[0].std() == pytest.approx(math.sqrt(2.0 / 1000), rel=0.05)

    def test_seed_determinism(self):
        a = init_model([4, 10, 3], task="classify", seed=9)
        b = init_model([4, 10, 3], task="classify", seed=9)
        c = init_model([4, 10, 3], task="classify", seed=10)
        assert all(np.array_equal(x, y) for x, y in zip(a.weights, b.weights))
        assert not all(np.array_equal(x, y) for x, y in zip(a.weights, c.weights))

    @pytest.mark.parametrize(
        "sizes,task",
        [([4, 10, 3], "rank"), ([4], "classify"), ([], "classify"), ([4, 0, 3], "classify"), ([4, -1], "regress")],
    )
    def test_rejects_bad_arguments(self, sizes, task):
        with pytest.raises(ValueError):
            init_model(sizes, task=task)


def zero_model(sizes, task):
    return MlpModel(
        task=task,
        weights=[np.zeros((a, b)) for a, b in zip(sizes[:-1], sizes[1:])],
        biases=[np.zeros(b) for b in sizes[1:]],
    )


class TestForward:
    def test_softmax_rows_sum_to_one(self):
        model = init_model([4, 16, 3], task="classify", seed=1)
        X = np.random.default_rng(2).normal(0, 1, size=(40, 4))
        probs = forward(model, X)
        assert probs.shape == (40, 3)
        assert probs.sum(axis=1) == pytest.approx(np.ones(40), abs=1e-12)
        assert (probs >= 0).all()

    def test_zero_model_is_uniform_softmax(self):
        model = zero_model([4, 8, 3], task="classify")
        X = np.random.default_rng(0).normal(0, 1, size=(10, 4))
        assert forward(model, X) == pytest.approx(np.full((10, 3), 1 / 3), abs=1e-15)
        assert loss(model, X, np.zeros(10, dtype=int)) == pytest.approx(math.log(3), abs=1e-12)

    def test_linear_regression_oracle(self):
        # One affine layer: y_hat = 2 x + 3.
        model = MlpModel(task="regress", weights=[np.array([[2.0]])], biases=[np.array([3.0])])
        assert forward(model, np.array([[1.0]])) == pytest.approx(np.array([[5.0]]))
        assert predict(model, np.array([[1.0], [0.0]])).tolist() == [5.0, 3.0]
        assert loss(model, np.array([[1.0]]), np.array([1.0])) == pytest.approx(16.0)

    def test_relu_hidden_oracle(self):
        # Hidden ReLU kills the negative branch: out = max(x, 0) - max(-x, 0) is x,
        # but with only the positive-pass weight kept the response is max(x, 0).
        model = MlpModel(
            task="regress",
            weights=[np.array([[1.0, -1.0]]), np.array([[1.0], [0.0]])],
            biases=[np.zeros(2), np.zeros(1)],
        )
        X = np.array([[2.0], [-2.0]])
        assert forward(model, X) == pytest.approx(np.array([[2.0], [0.0]]))

    def test_predict_shapes(self):
        clf = init_model([3, 8, 4], task="classify")
        X = np.random.default_rng(1).normal(0, 1, size=(6, 3))
        labels = predict(clf, X)
        assert labels.shape == (6,) and labels.dtype.kind == "i"
        reg2 = init_model([3, 8, 2], task="regress")
        assert predict(reg2, X).shape == (6, 2)

    def test_input_validation(self):
        model = init_model([3, 8, 2], task="classify")
        with pytest.raises(ValueError):
            forward(model, np.zeros((4, 5)))
        with pytest.raises(ValueError):
            forward(model, np.zeros(3))
        X = np.zeros((4, 3))
        with pytest.raises(ValueError):
            loss(model, X, np.array([0, 1]))
        with pytest.raises(ValueError):
            loss(model, X, np.array([0, 1, 2, 0]))
        reg = init_model([3, 8, 2], task="regress")
        with pytest.raises(ValueError):
            loss(reg, X, np.zeros((4, 3)))


class TestGradients:
    def test_matches_central_differences_classify(self):
        rng = np.random.default_rng(3)
        model = init_model([3, 5, 3], task="classify", seed=3)
        X = rng.normal(0, 1, size=(8, 3))
        y = rng.integers(0, 3, size=8)
        err, worst = gradient_check(model, X, y)
        assert err < 1e-4, f"worst coordinate {worst}"

    def test_matches_central_differences_regress(self):
        rng = np.random.default_rng(4)
        model = init_model([2, 4, 2], task="regress", seed=4)
        X = rng.normal(0, 1, size=(6, 2))
        y = rng.normal(0, 1, size=(6, 2))
        err, worst = gradient_check(model, X, y)
        assert err < 1e-4, f"worst coordinate {worst}"

    def test_zero_gradient_at_exact_optimum(self):
        # Affine model reproducing its targets exactly: every gradient is zero.
        model = MlpModel(task="regress", weights=[np.array([[2.0]])], biases=[np.array([1.0])])
        X = np.array([[0.0], [1.0], [2.0]])
        y = 2.0 * X[:, 0] + 1.0
        grad_w, grad_b = gradients(model, X, y)
        assert grad_w[0] == pytest.approx(np.zeros((1, 1)), abs=1e-12)
        assert grad_b[0] == pytest.approx(np.zeros(1), abs=1e-12)
        # Both gradients are ~0 here, so the checker's absolute floor sets the
        # scale of the reported relative error; the usual bar still applies.
        err, _ = gradient_check(model, X, y)
        assert err < 1e-4

    def test_worst_coordinate_structure(self):
        model = init_model([2, 3, 2], task="classify", seed=0)
        X = np.random.default_rng(0).normal(0, 1, size=(4, 2))
        y = np.array([0, 1, 0, 1])
        _, (kind, layer, idx) = gradient_check(model, X, y)
        assert kind in ("W", "b")
        assert 0 <= layer < 2
        assert idx >= 0


class TestTrainConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"batch_size": 0},
            {"epochs": -1},
            {"learning_rate": 0.0},
            {"learning_rate": float("inf")},
            {"plateau_patience": 0},
            {"plateau_rtol": -1e-3},
        ],
    )
    def test_rejects(self, kwargs):
        with pytest.raises(ValueError):
            TrainConfig(**kwargs)

    def test_defaults(self):
        cfg = TrainConfig()
        assert cfg.batch_size == 200 and cfg.epochs == 2000
        assert cfg.learning_rate == 0.01 and cfg.plateau_patience is None


class TestTrain:
    def test_learns_separable_blobs(self):
        X, y = toy_blobs()
        model = init_model([2, 16, 2], task="classify", seed=0)
        curve = train(model, X, y, TrainConfig(batch_size=32, epochs=200, seed=0))
        assert (predict(model, X) == y).mean() >= 0.99
        assert curve[-1] < curve[0]
        assert all(math.isfinite(v) for v in curve)

    def test_zero_epochs_is_a_no_op(self):
        X, y = toy_blobs(40)
        model = init_model([2, 8, 2], task="classify", seed=1)
        before = [w.copy() for w in model.weights]
        curve = train(model, X, y, TrainConfig(epochs=0))
        assert curve == []
        assert all(np.array_equal(w, b) for w, b in zip(model.weights, before))

    def test_determinism(self):
        X, y = toy_blobs(80)
        cfg = TrainConfig(batch_size=16, epochs=30, seed=5)
        runs = []
        for _ in range(2):
            model = init_model([2, 8, 2], task="classify", seed=2)
            runs.append((train(model, X, y, cfg), model))
        assert runs[0][0] == runs[1][0]
        assert all(np.array_equal(a, b) for a, b in zip(runs[0][1].weights, runs[1][1].weights))

    def test_regression_fits_line(self):
        rng = np.random.default_rng(6)
        X = rng.uniform(-1, 1, size=(200, 1))
        y = 3.0 * X[:, 0] - 0.5
        model = init_model([1, 16, 1], task="regress", seed=6)
        train(model, X, y, TrainConfig(batch_size=32, epochs=300, learning_rate=0.05, seed=6))
        assert loss(model, X, y) < 1e-2

    def test_batch_larger_than_dataset(self):
        X, y = toy_blobs(30)
        model = init_model([2, 4, 2], task="classify", seed=0)
        curve = train(model, X, y, TrainConfig(batch_size=1000, epochs=5))
        assert len(curve) == 5

    def test_divergence_raises_floating_point_error(self):
        rng = np.random.default_rng(7)
        X = rng.normal(0, 10, size=(64, 2))
        y = rng.normal(0, 1000, size=64)
        model = init_model([2, 8, 1], task="regress", seed=7)
        # The overflow that makes the loss non-finite is the point here.
        with np.errstate(over="ignore"), pytest.raises(FloatingPointError, match="learning rate"):
            train(model, X, y, TrainConfig(batch_size=64, epochs=500, learning_rate=1e6))

    def test_plateau_stop_counts_stale_epochs(self):
        # Model already at its optimum: the first epoch sets the best loss and
        # every later epoch is stale, so exactly 1 + patience epochs run.
        model = MlpModel(task="regress", weights=[np.array([[2.0]])], biases=[np.array([1.0])])
        X = np.array([[0.0], [1.0], [2.0]])
        y = 2.0 * X[:, 0] + 1.0
        cfg = TrainConfig(batch_size=3, epochs=100, plateau_patience=5)
        curve = train(model, X, y, cfg)
        assert len(curve) == 6

    def test_no_plateau_runs_all_epochs(self):
        X, y = toy_blobs(40)
        model = init_model([2, 4, 2], task="classify", seed=3)
        curve = train(model, X, y, TrainConfig(batch_size=8, epochs=12))
        assert len(curve) == 12


class TestPersistence:
    def test_round_trip(self):
        model = init_model([3, 6, 2], task="classify", seed=8)
        X = np.random.default_rng(8).normal(0, 1, size=(5, 3))
        clone = load_model(save_model(model))
        assert clone.task == "classify"
        assert all(np.array_equal(a, b) for a, b in zip(clone.weights, model.weights))
        assert all(np.array_equal(a, b) for a, b in zip(clone.biases, model.biases))
        assert np.array_equal(predict(clone, X), predict(model, X))

    def test_loaded_model_trains_further(self):
        X, y = toy_blobs(40)
        model = load_model(save_model(init_model([2, 4, 2], task="classify")))
        curve = train(model, X, y, TrainConfig(batch_size=8, epochs=3))
        assert len(curve) == 3

    def test_rejects_malformed_payloads(self):
        good = json.loads(save_model(init_model([2, 3, 2], task="regress")))
        mutations = [
            "not json{",
            json.dumps([1, 2]),
            json.dumps({**good, "version": 99}),
            json.dumps({**good, "task": "rank"}),
            json.dumps({k: v for k, v in good.items() if k != "weights"}),
            json.dumps({**good, "weights": good["weights"][:1]}),
            json.dumps({**good, "layer_sizes": [2, 4, 2]}),
            json.dumps({**good, "biases": [[0.0, 0.0, 0.0], [0.0, float("inf")]]}),
        ]
        for text in mutations:
            with pytest.raises(ValueError):
                load_model(text)
