import numpy as np
import pytest

import gradient_checks as gc
from disco.errors import ContractViolation, InsufficientDataError, ShapeError
from disco.models import (
    EnsembleMlp,
    EstimatorOutput,
    badge_gradient_embedding,
    penultimate_embeddings,
    predict_ensemble,
    rf_predict,
    train_mlp_ensemble,
    train_random_forest,
    variance_gradient_wrt_input,
)


# ---- EstimatorOutput ----

def test_output_row_0_2():
    o = EstimatorOutput.from_members([[0.0, 2.0]])
    assert o.mean[0] == 1.0 and o.variance[0] == 1.0


def test_output_row_3337():
    o = EstimatorOutput.from_members([[3.0, 3.0, 3.0, 7.0]])
    assert o.mean[0] == 4.0 and o.variance[0] == 3.0


def test_output_trees_123():
    o = EstimatorOutput.from_members([[1.0, 2.0, 3.0]])
    assert o.mean[0] == 2.0 and o.variance[0] == pytest.approx(2 / 3, abs=1e-15)


def test_output_recomputed_consistency():
    pm = np.random.default_rng(0).normal(size=(200, 7)) * 5 + 3
    o = EstimatorOutput.from_members(pm)
    assert np.max(np.abs(o.mean - pm.mean(axis=1))) <= 1e-12
    assert np.max(np.abs(o.variance - pm.var(axis=1))) <= 1e-12


def test_output_constant_rows_exact():
    v = np.random.default_rng(1).normal(size=500)
    o = EstimatorOutput.from_members(np.repeat(v[:, None], 9, axis=1))
    assert np.all(o.variance == 0.0) and np.array_equal(o.mean, v)


# ---- ensemble MLP ----

def _net(seed=0, m=3, h=5, q=4):
    return gc.random_net(np.random.default_rng(seed), m, h, q)


def test_single_member_zero_variance():
    net = _net(m=1)
    X = np.random.default_rng(2).normal(size=(20, 4))
    assert np.all(predict_ensemble(net, X).variance == 0.0)


def test_identical_members_mean_equals_member():
    one = _net(m=1)
    many = EnsembleMlp(np.repeat(one.W1, 4, 0), np.repeat(one.b1, 4, 0), np.repeat(one.w2, 4, 0),
                       np.repeat(one.b2, 4), one.x_mean, one.x_scale)
    X = np.random.default_rng(3).normal(size=(30, 4))
    assert np.array_equal(predict_ensemble(many, X).mean, predict_ensemble(one, X).mean)


def test_predict_shape_error():
    with pytest.raises(ShapeError):
        predict_ensemble(_net(), np.zeros((3, 5)))


def test_embedding_relu_clamps():
    net = EnsembleMlp(np.eye(2)[None], np.zeros((1, 2)), np.ones((1, 2)), [0.0])
    assert penultimate_embeddings(net, [[-1.0, 3.0]]).values.tolist() == [[0.0, 3.0]]
    assert penultimate_embeddings(net, [[0.0, 0.0]]).values.tolist() == [[0.0, 0.0]]


def test_embedding_hand_forward():
    rng = np.random.default_rng(4)
    W1, b1 = rng.normal(size=(3, 2)), rng.normal(size=3)
    net = EnsembleMlp(W1[None], b1[None], np.ones((1, 3)), [0.0])
    t = rng.normal(size=2)
    hand = [max(0.0, W1[i, 0] * t[0] + W1[i, 1] * t[1] + b1[i]) for i in range(3)]
    assert np.allclose(penultimate_embeddings(net, t[None]).values[0], hand, atol=1e-12, rtol=0)


def test_embedding_member_range():
    with pytest.raises(ContractViolation):
        penultimate_embeddings(_net(m=2), np.zeros((1, 4)), member_index=2)


def test_badge_hand_example():
    # h = (1, 2), w2 = (1, 1), b2 = 0 -> g = 3
    net = EnsembleMlp(np.eye(2)[None], np.zeros((1, 2)), [[1.0, 1.0]], [0.0])
    g = badge_gradient_embedding(net, [[1.0, 2.0]], targets=[2.0])
    assert g.tolist() == [[1.0, 2.0, 1.0]]


def test_badge_zero_residual():
    net = _net()
    X = np.random.default_rng(5).normal(size=(6, 4))
    g = predict_ensemble(net, X).per_member[:, 0]
    assert np.all(badge_gradient_embedding(net, X, targets=g) == 0.0)


def test_badge_scales_with_hidden():
    # with w2 = 0 and b2 = 0, g = 0 so the residual is -y regardless of h
    c = 2.5
    net = EnsembleMlp(np.eye(2)[None], np.zeros((1, 2)), np.zeros((1, 2)), [0.0])
    a = badge_gradient_embedding(net, [[1.0, 2.0]], targets=[1.0])
    b = badge_gradient_embedding(net, [[c * 1.0, c * 2.0]], targets=[1.0])
    assert np.allclose(b[0, :2], c * a[0, :2], rtol=1e-15) and b[0, 2] == a[0, 2]


def test_badge_deterministic_per_seed():
    net, X = _net(), np.random.default_rng(6).normal(size=(8, 4))
    a = badge_gradient_embedding(net, X, rng_seed=3)
    assert np.array_equal(a, badge_gradient_embedding(net, X, rng_seed=3))
    assert not np.array_equal(a, badge_gradient_embedding(net, X, rng_seed=4))


def test_variance_gradient_single_member():
    assert np.all(variance_gradient_wrt_input(_net(m=1), np.ones(4)) == 0.0)


def test_variance_gradient_identical_members():
    one = _net(m=1)
    two = EnsembleMlp(np.repeat(one.W1, 2, 0), np.repeat(one.b1, 2, 0), np.repeat(one.w2, 2, 0),
                      np.repeat(one.b2, 2), one.x_mean, one.x_scale)
    assert np.all(variance_gradient_wrt_input(two, np.array([0.3, -1.0, 2.0, 0.5])) == 0.0)


@pytest.mark.parametrize("seed", range(120))
def test_variance_gradient_finite_difference(seed):
    assert gc.variance_gradient_case(seed) <= 1e-4


@pytest.mark.parametrize("seed", range(120))
def test_badge_gradient_finite_difference(seed):
    assert gc.badge_gradient_case(seed) <= 1e-4


def test_train_constant_target():
    X = np.random.default_rng(7).normal(size=(100, 3))
    model = train_mlp_ensemble(X, np.zeros(100), m=3, rng_seed=0)
    assert np.max(np.abs(predict_ensemble(model, X).mean)) <= 1e-3


def test_train_linear_fit():
    X = np.random.default_rng(8).normal(size=(500, 4))
    y = 2.0 * X[:, 0]
    model = train_mlp_ensemble(X, y, m=3, rng_seed=0)
    assert np.mean((predict_ensemble(model, X).mean - y) ** 2) < 0.01


def test_train_deterministic():
    rng = np.random.default_rng(9)
    X, y = rng.normal(size=(80, 3)), rng.normal(size=80)
    a = train_mlp_ensemble(X, y, m=2, hidden_grid=(8, 16), rng_seed=4)
    b = train_mlp_ensemble(X, y, m=2, hidden_grid=(8, 16), rng_seed=4)
    for name in ("W1", "b1", "w2", "b2"):
        assert np.array_equal(getattr(a, name), getattr(b, name))
    assert a.hidden_size in (8, 16) and a.meta.grid_scores


def test_train_too_few_rows():
    with pytest.raises(InsufficientDataError):
        train_mlp_ensemble(np.zeros((1, 2)), np.zeros(1))


# ---- random forest ----

def test_forest_constant_target():
    X = np.random.default_rng(10).normal(size=(50, 4))
    f = train_random_forest(X, np.full(50, -1.5), m=10)
    o = rf_predict(f, np.random.default_rng(11).normal(size=(20, 4)))
    assert np.all(o.per_member == -1.5) and np.all(o.variance == 0.0)


def test_forest_single_point():
    f = train_random_forest([[1.0, 2.0]], [4.2], m=5)
    o = rf_predict(f, np.random.default_rng(12).normal(size=(7, 2)))
    assert np.all(o.per_member == 4.2)


def test_forest_step_function():
    X = np.random.default_rng(13).uniform(-1, 1, size=(200, 3))
    y = (X[:, 0] > 0).astype(float)
    f = train_random_forest(X, y, m=30, rng_seed=1)
    assert np.mean((rf_predict(f, X).mean - y) ** 2) < 0.01


def test_forest_single_tree_zero_variance():
    rng = np.random.default_rng(14)
    X, y = rng.normal(size=(40, 3)), rng.normal(size=40)
    assert np.all(rf_predict(train_random_forest(X, y, m=1), X).variance == 0.0)


def test_forest_deterministic_and_leaf_counts():
    rng = np.random.default_rng(15)
    X, y = rng.normal(size=(60, 6)), rng.normal(size=60)
    a = train_random_forest(X, y, m=5, rng_seed=3)
    b = train_random_forest(X, y, m=5, rng_seed=3)
    assert a.max_features == 2
    for s, t in zip(a.trees, b.trees):
        assert np.array_equal(s.threshold, t.threshold) and np.array_equal(s.value, t.value)
        leaves = s.feature < 0
        assert np.all(s.n_node_samples[leaves] >= 1) and np.all(np.isfinite(s.value))


def test_forest_zero_rows():
    with pytest.raises(InsufficientDataError):
        train_random_forest(np.zeros((0, 2)), np.zeros(0))
