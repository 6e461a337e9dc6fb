import json

import numpy as np
import pytest

from ndcoreset.classifiers import LinearModel, TrainConfig, TrainingError, objective, predict, train
from ndcoreset.data import Dataset
from ndcoreset.metrics import f1, table_from_predictions

from conftest import random_dataset


@pytest.mark.parametrize("loss", ["logistic", "hinge"])
def test_two_point_separable(loss):
    data = Dataset([[1.0], [-1.0]], [1, -1])
    model = train(data, TrainConfig(loss=loss, epochs=50))
    np.testing.assert_array_equal(predict(model, data), data.y)
    assert f1(table_from_predictions(data.y, predict(model, data))) == 1.0


@pytest.mark.parametrize("loss", ["logistic", "hinge"])
def test_duplicate_equals_weight_two(loss, rng):
    for _ in range(5):
        data = random_dataset(rng, 15, 3)
        k = int(rng.integers(data.n))
        dup = data.subset(np.append(np.arange(data.n), k))
        w = np.ones(data.n)
        w[k] = 2.0
        cfg = TrainConfig(loss=loss, epochs=100, step_size=0.5)
        a, b = train(dup, cfg), train(data.with_weights(w), cfg)
        np.testing.assert_allclose(a.weights, b.weights, atol=1e-8)
        assert a.bias == pytest.approx(b.bias, abs=1e-8)


def test_scaling_all_weights_is_noop(rng):
    data = random_dataset(rng, 20, 2)
    a = train(data)
    b = train(data.with_weights(np.full(data.n, 7.5)))
    np.testing.assert_allclose(a.weights, b.weights, atol=1e-10)


@pytest.mark.parametrize(
    "kwargs", [{"epochs": 0}, {"loss": "squared"}, {"step_size": 0.0}, {"l2_reg": -1.0}]
)
def test_bad_config(kwargs):
    with pytest.raises(ValueError):
        TrainConfig(**kwargs)


def test_single_class():
    with pytest.raises(TrainingError):
        train(Dataset([[0.0], [1.0]], [1, 1]))


def test_zero_weight_total():
    with pytest.raises(TrainingError):
        train(Dataset([[0.0], [1.0]], [1, -1], [0.0, 0.0]))


class TestPredict:
    def test_zero_model(self):
        m = LinearModel(np.zeros(2), 0.0)
        np.testing.assert_array_equal(predict(m, np.ones((3, 2))), [-1, -1, -1])

    def test_threshold_agreement(self, rng):
        m = LinearModel(rng.standard_normal(3), 0.3)
        X = rng.standard_normal((50, 3))
        np.testing.assert_array_equal(predict(m, X) == 1, m.decision_function(X) > 0)

    def test_as_query_matches(self, rng):
        m = LinearModel(rng.standard_normal(3), -0.2)
        X = rng.standard_normal((40, 3))
        np.testing.assert_array_equal(m.as_query().predict(X), predict(m, X))

    def test_dim_mismatch(self):
        with pytest.raises(ValueError):
            predict(LinearModel(np.zeros(2), 0.0), np.ones((3, 4)))

    def test_separable_recovers_truth(self):
        rng = np.random.default_rng(2)
        X = rng.standard_normal((200, 2))
        y = np.where(X[:, 0] - 0.5 * X[:, 1] > 0, 1, -1)
        keep = np.abs(X[:, 0] - 0.5 * X[:, 1]) > 0.2
        data = Dataset(X[keep], y[keep])
        m = train(data, TrainConfig(epochs=2000, l2_reg=0.0, step_size=2.0))
        np.testing.assert_array_equal(predict(m, data), data.y)


@pytest.mark.parametrize("loss", ["logistic", "hinge"])
def test_objective_decreases_small_step(loss, rng):
    data = random_dataset(rng, 40, 3)
    hist = []
    train(data, TrainConfig(loss=loss, epochs=100, step_size=0.01), history=hist)
    assert all(b <= a + 1e-12 for a, b in zip(hist, hist[1:]))


def test_objective_matches_history(rng):
    data = random_dataset(rng, 30, 2)
    cfg = TrainConfig(epochs=10)
    hist = []
    train(data, cfg, history=hist)
    cfg9 = TrainConfig(epochs=9)
    assert objective(data, train(data, cfg9), cfg) == pytest.approx(hist[-1], rel=1e-10)


def test_deterministic(rng):
    data = random_dataset(rng, 30, 2)
    assert train(data).to_json() == train(data).to_json()


def test_model_roundtrip(rng):
    m = train(random_dataset(rng, 20, 3))
    back = LinearModel.from_dict(json.loads(m.to_json()))
    np.testing.assert_array_equal(back.weights, m.weights)
    assert back.bias == m.bias
