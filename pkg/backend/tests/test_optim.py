import math

import numpy as np
import pytest

from app.core.errors import ConfigError
from app.core.optim import SGD, Adam, adam_step, build_optimizer
from app.schemas import OptimizerSpec


class TestAdam:
    def test_first_steps_move_by_lr(self):
        params = {"w": np.array([1.0, -2.0])}
        grads = {"w": np.array([0.5, -3.0])}
        state = {}
        adam_step(params, grads, state, lr=0.1)
        np.testing.assert_allclose(params["w"], [0.9, -1.9], atol=1e-7)
        adam_step(params, grads, state, lr=0.1)
        np.testing.assert_allclose(params["w"], [0.8, -1.8], atol=1e-7)
        assert state["t"] == 2

    def test_matches_scalar_reference_over_100_steps(self):
        beta1, beta2, eps, lr = 0.9, 0.999, 1e-8, 0.01
        grads = np.random.default_rng(0).normal(size=(100, 3))
        w = np.array([0.3, -1.2, 2.0])
        expected = w.tolist()
        m, v = [0.0] * 3, [0.0] * 3
        state = {}
        for t, g in enumerate(grads, start=1):
            adam_step({"w": w}, {"w": g}, state, lr=lr)
            for i in range(3):
                m[i] = beta1 * m[i] + (1 - beta1) * g[i]
                v[i] = beta2 * v[i] + (1 - beta2) * g[i] * g[i]
                m_hat = m[i] / (1 - beta1 ** t)
                v_hat = v[i] / (1 - beta2 ** t)
                expected[i] -= lr * m_hat / (math.sqrt(v_hat) + eps)
        np.testing.assert_allclose(w, expected, rtol=0, atol=1e-12)
        assert state["t"] == 100

    def test_moments(self):
        params = {"w": np.array([0.0])}
        state = {}
        adam_step(params, {"w": np.array([2.0])}, state, lr=0.01, beta1=0.5, beta2=0.75)
        np.testing.assert_allclose(state["m"]["w"], [1.0])
        np.testing.assert_allclose(state["v"]["w"], [1.0])

    def test_zero_lr_leaves_params_bitwise(self):
        w = np.array([0.1, 0.2, 0.3])
        before = w.copy()
        opt = Adam({"w": w}, lr=0.0)
        for _ in range(3):
            opt.step({"w": np.array([1.0, -1.0, 5.0])})
        np.testing.assert_array_equal(w, before)
        assert opt.state["t"] == 3

    def test_state_shape_mismatch(self):
        state = {"t": 1, "m": {"w": np.zeros(3)}, "v": {"w": np.zeros(3)}}
        with pytest.raises(ConfigError):
            adam_step({"w": np.zeros(2)}, {"w": np.zeros(2)}, state, lr=0.1)


class TestSGD:
    def test_step_updates_in_place(self):
        w = np.array([1.0, 1.0])
        SGD({"w": w}, lr=0.5).step({"w": np.array([2.0, -2.0])})
        np.testing.assert_allclose(w, [0.0, 2.0])


class TestBuildOptimizer:
    def test_kinds(self):
        params = {"w": np.zeros(2)}
        assert type(build_optimizer(params, OptimizerSpec(kind="sgd"), 0.1)) is SGD
        adam = build_optimizer(params, OptimizerSpec(beta1=0.8), 0.1)
        assert isinstance(adam, Adam) and adam.beta1 == 0.8

    def test_negative_lr(self):
        with pytest.raises(ConfigError) as info:
            build_optimizer({"w": np.zeros(1)}, OptimizerSpec(), -1.0)
        assert info.value.key == "optimizer.lr"
