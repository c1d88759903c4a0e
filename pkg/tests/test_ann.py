import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qsurrogate.ann import (MlpConfig, MlpModel, _forward, flatten, init_parameters, layer_shapes,
                            loss_and_grad, mlp_fit, mlp_forward, mlp_predict_many, n_parameters,
                            unflatten)
from qsurrogate.data import MinMaxScaler, grid_sample
from qsurrogate.errors import DimensionError, ScalingError
from qsurrogate.metrics import r2_score
from qsurrogate.qnn import load_model, save_model


def unit_scalers(d, y_lo=-1.0, y_hi=1.0):
    return MinMaxScaler(np.zeros(d), np.ones(d)), MinMaxScaler([y_lo], [y_hi], -1.0, 1.0)


def random_model(d=2, seed=0):
    w, b = unflatten(np.random.default_rng(seed).normal(size=n_parameters(d)), d)
    return MlpModel(w, b, *unit_scalers(d, 10.0, 30.0))


def test_parameter_count():
    assert layer_shapes(2) == [(2, 10), (10, 3), (3, 1)]
    assert n_parameters(2) == 67
    assert n_parameters(5) == 97


def test_zero_weights_decode_to_midpoint():
    w, b = unflatten(np.zeros(67), 2)
    model = MlpModel(w, b, *unit_scalers(2, 4.0, 10.0))
    assert mlp_forward(model, [0.3, 0.9]) == 7.0


def test_hand_built_near_linear_network():
    # tiny weights keep sigmoid and tanh in their linear regime:
    # sigmoid(a x) ~ 1/2 + a x / 4, tanh(z) ~ z
    a = 1e-3
    w1 = np.zeros((1, 10)); w1[0, 0] = a
    w2 = np.zeros((10, 3)); w2[0, 0] = 1.0
    b2 = np.array([-0.5, 0.0, 0.0])
    w3 = np.zeros((3, 1)); w3[0, 0] = 4.0 / a
    model = MlpModel([w1, w2, w3], [np.zeros(10), b2, np.zeros(1)], *unit_scalers(1))
    for x in (0.0, 0.25, 0.5, 1.0):
        assert mlp_forward(model, [x]) == pytest.approx(x, abs=1e-6)


def test_forward_matches_matrix_oracle():
    model = random_model(seed=3)
    x = np.random.default_rng(4).uniform(0, 1, (11, 2))
    w, b = model.weights, model.biases
    h1 = 1.0 / (1.0 + np.exp(-(x @ w[0] + b[0])))
    h2 = np.tanh(h1 @ w[1] + b[1])
    y = (h2 @ w[2] + b[2]).ravel()
    np.testing.assert_allclose(mlp_predict_many(model, x), 10.0 + (y + 1) / 2 * 20.0, rtol=0, atol=1e-10)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31), d=st.integers(1, 4))
def test_backprop_matches_finite_differences(seed, d):
    rng = np.random.default_rng(seed)
    vec = rng.normal(size=n_parameters(d))
    x, y = rng.uniform(0, 1, (8, d)), rng.uniform(-1, 1, 8)
    _, grad = loss_and_grad(vec, x, y, d)
    h = 1e-6
    for k in rng.choice(vec.size, 5, replace=False):
        vp, vm = vec.copy(), vec.copy()
        vp[k] += h
        vm[k] -= h
        fd = (loss_and_grad(vp, x, y, d)[0] - loss_and_grad(vm, x, y, d)[0]) / (2 * h)
        assert abs(fd - grad[k]) <= 1e-5 * max(abs(fd), 1e-3)


@given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=2))
def test_forward_finite_for_finite_inputs(x):
    assert math.isfinite(mlp_forward(random_model(seed=1), x))


def test_flatten_round_trip():
    vec = init_parameters(3, 5)
    w, b = unflatten(vec, 3)
    np.testing.assert_array_equal(flatten(w, b), vec)
    with pytest.raises(DimensionError):
        unflatten(vec[:-1], 3)


def test_glorot_init_bounds_and_zero_bias():
    w, b = unflatten(init_parameters(2, 0), 2)
    for wi, (fan_in, fan_out) in zip(w, layer_shapes(2)):
        assert np.all(np.abs(wi) <= math.sqrt(6 / (fan_in + fan_out)))
    assert all(np.all(bi == 0) for bi in b)


def test_model_validation():
    model = random_model()
    with pytest.raises(DimensionError):
        MlpModel(model.weights[:2] + [np.zeros((4, 1))], model.biases, model.input_scaler, model.output_scaler)
    bad = [w.copy() for w in model.weights]
    bad[0][0, 0] = math.nan
    with pytest.raises(ValueError):
        MlpModel(bad, model.biases, model.input_scaler, model.output_scaler)
    with pytest.raises(DimensionError):
        mlp_forward(model, [0.1, 0.2, 0.3])


def test_fit_deterministic_and_best_returned():
    ds = grid_sample("griewank", None, 8, 2)
    m1, r1 = mlp_fit(ds.inputs, ds.targets, epochs=200, seed=3)
    m2, _ = mlp_fit(ds.inputs, ds.targets, epochs=200, seed=3)
    np.testing.assert_array_equal(m1.flat(), m2.flat())
    assert r1.best_value == min(v for _, v in r1.history)
    assert r1.best_value < r1.history[0][1]


def test_fit_clean_griewank_grid():
    # full 50x50 grid at the default budget
    ds = grid_sample("griewank", None, 50, 2)
    scores = [r2_score(ds.targets, mlp_predict_many(mlp_fit(ds.inputs, ds.targets, seed=s)[0], ds.inputs))
              for s in range(5)]
    assert np.median(scores) >= 0.9


def test_fit_on_jittered_constant_cannot_beat_mean():
    rng = np.random.default_rng(0)
    x = rng.uniform(0, 1, (60, 1))
    y = 5.0 + 1e-9 * rng.normal(size=60)
    model, _ = mlp_fit(x, y, epochs=300, seed=0)
    assert r2_score(y, mlp_predict_many(model, x)) < 0.3


def test_fit_constant_target_is_scaling_error():
    with pytest.raises(ScalingError):
        mlp_fit(np.arange(4.0).reshape(-1, 1), np.ones(4), epochs=5)


def test_config_overrides_keywords():
    ds = grid_sample("griewank", None, 5, 1)
    _, res = mlp_fit(ds.inputs, ds.targets, cfg=MlpConfig(epochs=7))
    assert res.n_evaluations == 8


def test_json_round_trip(tmp_path):
    model = random_model(d=3, seed=6)
    back = load_model(save_model(model, tmp_path / "mlp.json"))
    assert isinstance(back, MlpModel)
    x = np.random.default_rng(2).uniform(0, 1, (5, 3))
    np.testing.assert_array_equal(mlp_predict_many(back, x), mlp_predict_many(model, x))
