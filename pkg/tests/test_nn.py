"""Extractor forward/backward against finite differences; optimizer rules."""

import numpy as np
import pytest

from corrspace.errors import NumericalError
from corrspace.nn import Identity, Mlp, OptimizerState, glorot_uniform, step
from oracles import central_difference, max_relative_error


def random_net(rng, d_in=4, hidden=5, d_out=3, activation="tanh"):
    return Mlp(
        W1=rng.standard_normal((hidden, d_in)),
        b1=rng.standard_normal(hidden),
        W2=rng.standard_normal((d_out, hidden)),
        b2=rng.standard_normal(d_out),
        activation=activation,
    )


class TestForward:
    def test_zero_net_outputs_zero(self):
        net = Mlp(np.zeros((3, 2)), np.zeros(3), np.zeros((2, 3)), np.zeros(2))
        y, _ = net.forward(np.ones((2, 5)))
        assert np.array_equal(y, np.zeros((2, 5)))

    def test_identity_configuration(self):
        net = Mlp(np.eye(4), np.zeros(4), np.eye(4), np.zeros(4), activation="identity")
        x = np.arange(8.0).reshape(4, 2)
        y, _ = net.forward(x)
        assert np.array_equal(y, x)

    def test_deterministic(self, rng):
        net = random_net(rng)
        x = rng.standard_normal((4, 7))
        a, _ = net.forward(x)
        b, _ = net.forward(x)
        assert np.array_equal(a, b)

    def test_dimension_mismatch(self, rng):
        net = random_net(rng)
        with pytest.raises(ValueError):
            net.forward(np.ones((5, 3)))


class TestBackward:
    def test_zero_upstream_gives_zero_grads(self, rng):
        net = random_net(rng)
        x = rng.standard_normal((4, 6))
        _, cache = net.forward(x)
        grads, dx = net.backward(cache, np.zeros((3, 6)))
        assert all(np.all(g == 0) for g in grads.values())
        assert np.all(dx == 0)

    def test_finite_difference_oracle(self, rng):
        net = random_net(rng, d_in=3, hidden=5, d_out=2)
        x = rng.standard_normal((3, 4))
        dy = rng.standard_normal((2, 4))
        _, cache = net.forward(x)
        grads, dx = net.backward(cache, dy)

        def loss_with(name, value):
            saved = net.params()[name]
            params = dict(net.params())
            params[name] = value
            clone = Mlp(params["W1"], params["b1"], params["W2"], params["b2"],
                        activation=net.activation)
            y, _ = clone.forward(x)
            return float(np.sum(dy * y))

        for name, got in grads.items():
            want = central_difference(lambda v: loss_with(name, v), net.params()[name])
            assert max_relative_error(got, want) < 1e-6, name
        want_dx = central_difference(
            lambda v: float(np.sum(dy * net.forward(v)[0])), x
        )
        assert max_relative_error(dx, want_dx) < 1e-6

    def test_linearity_in_upstream(self, rng):
        net = random_net(rng)
        x = rng.standard_normal((4, 5))
        dy = rng.standard_normal((3, 5))
        _, cache = net.forward(x)
        g1, dx1 = net.backward(cache, dy)
        g2, dx2 = net.backward(cache, 2.0 * dy)
        for name in g1:
            assert np.allclose(2.0 * g1[name], g2[name], atol=1e-12)
        assert np.allclose(2.0 * dx1, dx2, atol=1e-12)

    def test_stale_cache_rejected(self, rng):
        net = random_net(rng)
        with pytest.raises(ValueError):
            net.backward(None, np.zeros((3, 2)))


class TestInit:
    def test_seeded_determinism(self):
        a = Mlp.init(6, 3, seed=11)
        b = Mlp.init(6, 3, seed=11)
        assert np.array_equal(a.W1, b.W1) and np.array_equal(a.W2, b.W2)

    def test_glorot_bounds(self):
        net = Mlp.init(10, 4, seed=0)
        bound1 = np.sqrt(6.0 / (10 + 10))
        bound2 = np.sqrt(6.0 / (10 + 4))
        assert np.max(np.abs(net.W1)) <= bound1
        assert np.max(np.abs(net.W2)) <= bound2
        assert np.all(net.b1 == 0) and np.all(net.b2 == 0)

    def test_hidden_defaults_to_input_width(self):
        net = Mlp.init(7, 3, seed=1)
        assert net.W1.shape == (7, 7) and net.W2.shape == (3, 7)

    def test_uniform_spread(self, rng):
        sample = glorot_uniform(rng, 50, 50)
        bound = np.sqrt(6.0 / 100)
        assert np.min(sample) < -0.8 * bound and np.max(sample) > 0.8 * bound


class TestOptimizer:
    def test_zero_gradient_no_decay_keeps_params(self):
        opt = OptimizerState(lr=0.1, weight_decay=0.0)
        params = {"w": np.array([1.0, -2.0])}
        out = step(opt, params, {"w": np.zeros(2)})
        assert np.array_equal(out["w"], params["w"])

    def test_descends_on_constant_gradient(self):
        opt = OptimizerState(lr=0.1)
        params = {"w": np.array([1.0])}
        values = [params["w"][0]]
        for _ in range(3):
            params = step(opt, params, {"w": np.array([1.0])})
            values.append(params["w"][0])
        assert values[0] > values[1] > values[2] > values[3]

    def test_decoupled_decay_closed_form(self):
        opt = OptimizerState(lr=1.0, weight_decay=1e-5)
        params = {"w": np.array([2.0])}
        out = step(opt, params, {"w": np.zeros(1)})
        assert np.allclose(out["w"], 2.0 * (1.0 - 1e-5), rtol=0, atol=1e-15)
        out = step(opt, out, {"w": np.zeros(1)})
        assert np.allclose(out["w"], 2.0 * (1.0 - 1e-5) ** 2, rtol=0, atol=1e-15)

    def test_non_finite_gradient_raises(self):
        opt = OptimizerState()
        with pytest.raises(NumericalError):
            step(opt, {"w": np.ones(2)}, {"w": np.array([1.0, np.nan])})


class TestIdentityExtractor:
    def test_passthrough(self, rng):
        ext = Identity(4)
        x = rng.standard_normal((4, 6))
        y, cache = ext.forward(x)
        assert y is x
        grads, dx = ext.backward(cache, x)
        assert grads == {} and dx is x
