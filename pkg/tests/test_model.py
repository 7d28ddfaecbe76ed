import numpy as np
import pytest

from tannin import checkpoint
from tannin.nn import (
    EVAL,
    TRAIN,
    VARIANTS,
    ModelSpec,
    TrainConfig,
    TrainingError,
    build_model,
    predict,
    train,
)
from tannin.nn.layers import BatchNorm, Conv1D, Dense, Dropout
from tannin.preprocess import FeatureOrdering, fit_scaler
from conftest import separable_task
from gradcheck import check_network, randomize

TOL = 1e-4


def _batch(model, rng, n=4):
    shape = (n, 1, model.spec.n_features) if model.spec.conv else (n, model.spec.n_features)
    return rng.normal(size=shape), rng.integers(0, 10, n)


# ---- architecture

def test_plain_dnn_has_no_regularization_layers():
    net = build_model("DNN-D", 1).network
    assert net.count(Dropout) == 0 and net.count(BatchNorm) == 0
    assert net.count(Dense) == 5 and net.count(Conv1D) == 0  # 4 hidden + softmax head


def test_1dcnn_has_three_dropout_and_batchnorm():
    model = build_model("1DCNN", 1)
    assert model.network.count(Dropout) == 3 and model.network.count(BatchNorm) == 3
    assert model.network.count(Conv1D) == 1
    conv = model.network.layers[0]
    assert (conv.num_filters, conv.kernel_width, conv.stride) == (16, 3, 1)
    assert [l.n_out for l in model.network.layers if isinstance(l, Dense)] == [64, 64, 32, 16, 10]


def test_layer_order_dense_bn_relu_dropout():
    kinds = [l.kind for l in build_model("DNN", 0).network.layers]
    assert kinds[:4] == ["dense", "batchnorm", "relu", "dropout"]
    assert kinds[-3:] == ["dense", "relu", "dense"]


@pytest.mark.parametrize("variant", VARIANTS)
def test_equal_seeds_bit_identical(variant):
    a, b = build_model(variant, 5), build_model(variant, 5)
    assert a.network.theta.tobytes() == b.network.theta.tobytes()
    assert build_model(variant, 6).network.theta.tobytes() != a.network.theta.tobytes()


def test_he_uniform_bounds():
    net = build_model("DNN-D", 0).network
    first = net.layers[0]
    limit = np.sqrt(6 / first.n_in)
    assert np.abs(first.params["weights"]).max() <= limit
    assert first.params["weights"].std() == pytest.approx(limit / np.sqrt(3), rel=0.05)


def test_unknown_variant():
    with pytest.raises(ValueError, match="unknown variant"):
        build_model("CNN", 0)


def test_spec_invariants():
    with pytest.raises(ValueError):
        ModelSpec(variant="DNN-D", conv=None, dropout_rate=0.3, use_batchnorm=False)
    with pytest.raises(ValueError):
        ModelSpec(variant="1DCNN", conv=None)
    spec = ModelSpec.for_variant("1DCNN-D", 3, dropout_rate=0.5)
    assert spec.dropout_rate == 0 and not spec.use_batchnorm
    assert ModelSpec.from_dict(spec.to_dict()) == spec


# ---- gradients

@pytest.mark.parametrize("variant", VARIANTS)
@pytest.mark.parametrize("mode", [TRAIN, EVAL])
def test_composite_gradients_full(variant, mode):
    rng = np.random.default_rng(123)
    model = build_model(variant, 123)
    randomize(model.network, rng)
    x, y = _batch(model, rng)
    errors, skipped, checked = check_network(model.network, x, y, mode, per_tensor=150, rng=rng)
    assert max(errors.values()) < TOL, errors
    assert skipped / checked < 0.05


def test_backward_without_forward():
    net = build_model("DNN-D", 0).network
    with pytest.raises(RuntimeError, match="without a preceding forward"):
        net.backward(np.zeros((2, 10)))


def test_zero_signal_zero_gradient():
    model = build_model("DNN-D", 0)
    head = model.network.layers[-1]
    head.params["bias"][3] = 1e3
    x, _ = _batch(model, np.random.default_rng(0))
    model.network.loss_and_grad(x, np.full(4, 3), EVAL)
    assert np.linalg.norm(model.network.grad) < 1e-6


@pytest.mark.parametrize("variant", ["DNN-D", "1DCNN-D"])
def test_duplicated_batch_same_mean_gradient(variant):
    rng = np.random.default_rng(1)
    model = build_model(variant, 1)
    x, y = _batch(model, rng)
    model.network.loss_and_grad(x, y, EVAL)
    g1 = model.network.grad.copy()
    model.network.loss_and_grad(np.concatenate([x, x]), np.concatenate([y, y]), EVAL)
    np.testing.assert_allclose(model.network.grad, g1, atol=1e-10)


# ---- training / prediction

@pytest.mark.parametrize("seed", range(5))
def test_separable_task_learned(seed):
    X, y = separable_task(seed=seed)
    model = build_model("1DCNN-D", seed)
    model.scaler = fit_scaler(X)
    model, history = train(model, X, TrainConfig(epochs=20, seed=seed), labels=y)
    assert len(history) == 20
    assert history[-1].train_accuracy == 1.0
    labels, _ = predict(model, X)
    assert (labels == y).all()


def test_regularized_cnn_nearly_separates():
    X, y = separable_task(seed=0)
    model = build_model("1DCNN", 0)
    model.scaler = fit_scaler(X)
    model, history = train(model, X, TrainConfig(epochs=20, seed=0), labels=y)
    assert history[-1].train_accuracy >= 0.95


def test_training_deterministic():
    X, y = separable_task(seed=2)
    runs = []
    for _ in range(2):
        m = build_model("1DCNN", 9)
        m.scaler = fit_scaler(X)
        _, h = train(m, X, TrainConfig(epochs=5, seed=4), labels=y)
        runs.append((h[-1].loss, m.network.theta.tobytes()))
    assert runs[0] == runs[1]


def test_sgd_reduces_loss():
    X, y = separable_task(seed=3)
    m = build_model("DNN-D", 0)
    m.scaler = fit_scaler(X)
    _, h = train(m, X, TrainConfig(epochs=30, optimizer="sgd", learning_rate=0.05, seed=0), labels=y)
    assert h[-1].loss < h[0].loss


@pytest.mark.parametrize("kwargs", [{"epochs": 0}, {"batch_size": 0}, {"learning_rate": 0.0}, {"optimizer": "rmsprop"}])
def test_invalid_train_config(kwargs):
    with pytest.raises(ValueError):
        TrainConfig(**kwargs)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_non_finite_loss_reported():
    X, y = separable_task(seed=0)
    m = build_model("DNN-D", 0)
    m.network.theta[:] = np.inf
    with pytest.raises(TrainingError, match="epoch 1, batch 0"):
        train(m, X, TrainConfig(epochs=1), labels=y)


def test_predict_rows_and_batch_independence():
    X, y = separable_task(seed=1)
    m = build_model("1DCNN", 1)
    m.scaler = fit_scaler(X)
    m.ordering = FeatureOrdering(tuple(reversed(range(11))), 0.0)
    train(m, X, TrainConfig(epochs=3, seed=1), labels=y)
    labels, probs = predict(m, X)
    np.testing.assert_allclose(probs.sum(1), 1.0, atol=1e-9)
    doubled = np.vstack([X[:1], X])
    labels2, probs2 = predict(m, doubled)
    assert labels2[0] == labels2[1] == labels[0]
    assert (labels2[1:] == labels).all()
    single = np.array([predict(m, X[i : i + 1])[0][0] for i in range(len(X))])
    assert (single == labels).all()


def test_predict_dimension_mismatch():
    with pytest.raises(ValueError, match="expected 11 features"):
        predict(build_model("DNN", 0), np.zeros((2, 10)))


def test_argmax_ties_to_smaller_class():
    m = build_model("DNN-D", 0)
    m.network.theta[:] = 0.0
    labels, probs = predict(m, np.ones((3, 11)))
    assert (labels == 0).all()


@pytest.mark.parametrize("variant", VARIANTS)
def test_checkpoint_round_trip(variant, tmp_path):
    X, y = separable_task(seed=5)
    m = build_model(variant, 2)
    m.scaler = fit_scaler(X)
    m.ordering = FeatureOrdering(tuple(np.random.default_rng(0).permutation(11).tolist()), 1.0)
    train(m, X, TrainConfig(epochs=3, seed=0), labels=y)
    path = tmp_path / "ckpt.json"
    checkpoint.save(checkpoint.model_to_dict(m), path)
    again = checkpoint.model_from_dict(checkpoint.load(path))
    assert again.spec == m.spec
    assert again.network.theta.tobytes() == m.network.theta.tobytes()
    for (a, b), (c, d) in zip(again.bn_running_stats, m.bn_running_stats):
        assert a.tobytes() == c.tobytes() and b.tobytes() == d.tobytes()
    assert predict(again, X)[1].tobytes() == predict(m, X)[1].tobytes()


def test_checkpoint_rejects_wrong_version():
    d = checkpoint.model_to_dict(build_model("DNN", 0))
    d["version"] = 99
    with pytest.raises(ValueError, match="version"):
        checkpoint.model_from_dict(d)
