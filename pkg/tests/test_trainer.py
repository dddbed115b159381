import io
import json

import numpy as np
import pytest

from benn.belt import BeltMode, build_benn
from benn.ensemble import build_gauss_ensemble, identity_ensemble
from benn.errors import DivergenceError, ParameterError, ShapeError
from benn.metrics import ensemble_mse
from benn.network import DenseNet, StructuralParams, benn_forward, forward
from benn.trainer import (FitResult, TrainConfig, empirical_loss, fit, gradient,
                          predict_ensemble, predict_sufficient, step_function)

from conftest import naive_loss, random_small_model

SMALL = StructuralParams(p=3, l1=1, k1=4, d=1, l2=1, k2=4, m=1)


def toy_data(n=40, p=3, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    y = np.sin(X[:, 0]) + 0.1 * rng.normal(size=n)
    return X, y


def test_zero_model_loss_arithmetic():
    params = StructuralParams(p=2, l1=0, k1=(), d=1, l2=0, k2=(), m=1)
    model = build_benn("nonlinear-cs", params)
    model = type(model)(DenseNet(([[0.0, 0.0]],), ([0.0],)), DenseNet(([[0.0]],), ([0.0],)),
                        model.mode, params)
    assert empirical_loss(model, [[0.3, 1.0], [2.0, -1.0]], [[1.0], [-1.0]]) == 1.0


def test_perfect_fit_zero_loss_and_gradient(rng):
    model = random_small_model(rng)
    X = rng.normal(size=(6, model.params.p))
    G = forward(model.h_net, forward(model.f_net, X))
    assert empirical_loss(model, X, G) == pytest.approx(0.0, abs=1e-28)
    assert np.all(gradient(model, X, G).flat() == 0)


def test_loss_matches_double_loop(rng):
    for _ in range(10):
        model = random_small_model(rng)
        n = int(rng.integers(1, 10))
        X = rng.normal(size=(n, model.params.p))
        G = rng.normal(size=(n, model.params.m))
        for trunc, tau in ((None, 1.0), (0.3, 2.5)):
            got = empirical_loss(model, X, G, trunc, tau)
            assert got == pytest.approx(naive_loss(model, X, G, trunc, tau), rel=1e-12)


def test_loss_shape_error(rng):
    model = random_small_model(rng)
    with pytest.raises(ShapeError):
        empirical_loss(model, np.ones((3, model.params.p + 1)), np.ones((3, model.params.m)))
    with pytest.raises(ShapeError):
        gradient(model, np.ones((3, model.params.p)), np.ones((2, model.params.m)))


def test_gradient_finite_difference(rng):
    model = random_small_model(rng, p_max=4, w_max=4, m_max=3)
    X = rng.normal(size=(5, model.params.p))
    G = rng.normal(size=(5, model.params.m))
    g = gradient(model, X, G).flat()
    f_params, h_params = model.f_net.params(), model.h_net.params()
    flat = np.concatenate([p.ravel() for p in (*f_params, *h_params)])
    sizes = [p.size for p in (*f_params, *h_params)]

    def loss_at(v):
        parts = np.split(v, np.cumsum(sizes)[:-1])
        nf = len(f_params)
        fp = [p.reshape(q.shape) for p, q in zip(parts[:nf], f_params)]
        hp = [p.reshape(q.shape) for p, q in zip(parts[nf:], h_params)]
        m2 = type(model)(model.f_net.replace_params(fp), model.h_net.replace_params(hp),
                         model.mode, model.params)
        return empirical_loss(m2, X, G)

    h = 1e-6
    for k in range(flat.size):
        e = np.zeros_like(flat)
        e[k] = h
        fd = (loss_at(flat + e) - loss_at(flat - e)) / (2 * h)
        assert g[k] == pytest.approx(fd, rel=1e-4, abs=1e-7)


def test_gradient_partitions_agree(rng):
    model = random_small_model(rng)
    X = rng.normal(size=(9, model.params.p))
    G = rng.normal(size=(9, model.params.m))
    one = gradient(model, X, G).flat()
    many = gradient(model, X, G, workers=3).flat()
    np.testing.assert_allclose(many, one, rtol=1e-12, atol=1e-15)


def test_fit_constant_response():
    X, _ = toy_data(64)
    y = np.full(64, 0.7)
    cfg = TrainConfig(epochs=200, batch_size=16, learning_rate=1e-2, seed=1)
    res = fit(X, y, "nonlinear-cs", SMALL, identity_ensemble(y), cfg)
    assert len(res.loss_trace) == 200
    assert res.loss_trace[-1] <= 1e-4


def test_fit_reduces_loss():
    X, y = toy_data(80)
    spec = build_gauss_ensemble(y, 5, seed=0)
    params = StructuralParams(p=3, l1=1, k1=8, d=1, l2=1, k2=8, m=5)
    res = fit(X, y, "nonlinear-cs", params, spec, TrainConfig(epochs=30, batch_size=16,
                                                                learning_rate=1e-2))
    assert res.loss_trace[-1] < res.loss_trace[0]
    assert res.truncation == 1.0


def test_fit_deterministic():
    X, y = toy_data()
    cfg = TrainConfig(epochs=5, batch_size=8)
    a = fit(X, y, "nonlinear-cs", SMALL, identity_ensemble(y), cfg)
    b = fit(X, y, "nonlinear-cs", SMALL, identity_ensemble(y), cfg)
    assert a.loss_trace == b.loss_trace
    for u, v in zip(a.model.f_net.params(), b.model.f_net.params()):
        assert u.tobytes() == v.tobytes()


def test_fit_verbose_stream():
    X, y = toy_data()
    buf = io.StringIO()
    fit(X, y, "nonlinear-cs", SMALL, identity_ensemble(y), TrainConfig(epochs=3),
        verbose=True, stream=buf)
    lines = [json.loads(s) for s in buf.getvalue().splitlines()]
    assert [r["epoch"] for r in lines] == [1, 2, 3]


def test_fit_weight_clip():
    X, y = toy_data()
    res = fit(X, y, "nonlinear-cs", SMALL, identity_ensemble(y),
              TrainConfig(epochs=5, learning_rate=0.1, weight_clip=0.05))
    assert res.model.f_net.max_abs_param() <= 0.05
    assert res.model.h_net.max_abs_param() <= 0.05


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_fit_divergence():
    X, y = toy_data()
    y = y * 1e150
    with pytest.raises(DivergenceError) as info:
        fit(X, y, "nonlinear-cs", SMALL, identity_ensemble(y),
            TrainConfig(epochs=3, optimizer="sgd", learning_rate=1e10, truncation=None))
    assert info.value.epoch >= 1


def test_fit_shape_errors():
    X, y = toy_data()
    with pytest.raises(ShapeError):
        fit(X[:, :2], y, "nonlinear-cs", SMALL, identity_ensemble(y))


def test_config_validation():
    for kw in ({"epochs": 0}, {"learning_rate": 0}, {"optimizer": "rmsprop"},
               {"truncation": -1.0}, {"batch_size": 0}):
        with pytest.raises(ParameterError):
            TrainConfig(**kw)


def test_linear_belt_prediction_is_affine():
    X, y = toy_data()
    params = StructuralParams(p=3, l1=0, k1=(), d=1, l2=1, k2=4, m=1)
    res = fit(X, y, "linear-cs", params, identity_ensemble(y), TrainConfig(epochs=3))
    W, b = res.model.f_net.weights[0], res.model.f_net.biases[0]
    np.testing.assert_allclose(predict_sufficient(res, X), X @ W.T + b, atol=1e-13)


def test_predict_training_row_matches_forward():
    X, y = toy_data()
    res = fit(X, y, "nonlinear-cs", SMALL, identity_ensemble(y), TrainConfig(epochs=2))
    z, yt = benn_forward(res.model, X[3])
    np.testing.assert_array_equal(predict_sufficient(res, X[3:4])[0], z)
    assert predict_ensemble(res, X[3:4]).shape == (1, 1)
    with pytest.raises(ShapeError):
        predict_sufficient(res, X[:, :2])


def test_predict_ensemble_clamps():
    X, y = toy_data()
    res = fit(X, y, "nonlinear-cs", SMALL, identity_ensemble(y), TrainConfig(epochs=2))
    clamped = FitResult(res.model, res.loss_trace, res.config, res.ensemble, truncation=1e-3)
    assert np.all(np.abs(predict_ensemble(clamped, X)) <= 1e-3)


def test_ensemble_mse_perfect_oracle():
    params = StructuralParams(p=2, l1=0, k1=(), d=1, l2=0, k2=(), m=1)
    f = DenseNet(([[1.0, 0.0]],), ([0.0],), activation="none")
    h = DenseNet(([[2.0]],), ([0.5],))
    model = type(build_benn("linear-cs", params))(f, h, BeltMode("linear-cs"), params)
    X = np.random.default_rng(0).normal(size=(20, 2))
    y = 2 * X[:, 0] + 0.5
    res = FitResult(model, [], TrainConfig(), identity_ensemble(y), truncation=None)
    assert ensemble_mse(res, X, y) == 0.0


def test_step_function():
    pred = np.arange(8.0).reshape(2, 4)
    np.testing.assert_array_equal(step_function(pred, 0.3), [1, 5])
    np.testing.assert_array_equal(step_function(pred, 0.0), [0, 4])
    with pytest.raises(ParameterError):
        step_function(pred, 1.0)


def test_gradient_skips_clamped_outputs():
    params = StructuralParams(p=2, l1=0, k1=(), d=1, l2=0, k2=(), m=1)
    f = DenseNet(([[1.0, 0.0]],), ([0.0],))
    h = DenseNet(([[1.0]],), ([0.0],))
    model = type(build_benn("nonlinear-cs", params))(f, h, BeltMode("nonlinear-cs"), params)
    g = gradient(model, [[5.0, 2.0]], [[0.0]], trunc=1.0)
    assert np.all(g.flat() == 0)
    assert g.loss == pytest.approx(1.0)


def test_spec_tau_scales_loss(rng):
    model = random_small_model(rng)
    X = rng.normal(size=(4, model.params.p))
    G = rng.normal(size=(4, model.params.m))
    assert empirical_loss(model, X, G, tau=3.0) == pytest.approx(3 * empirical_loss(model, X, G))
