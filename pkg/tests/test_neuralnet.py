import math

import numpy as np
import pytest

from sleepgan.errors import NonFiniteGradient, ShapeMismatch
from sleepgan.neuralnet import (
    ACTIVATIONS,
    DenseNet,
    Layer,
    RMSPropState,
    backward,
    forward,
    init_net,
    numerical_gradients,
    relative_error,
    rmsprop_step,
)


def scalar_forward(net, x_row):
    """Straight-line re-evaluation with plain Python floats."""
    act = {
        "relu": lambda z: max(z, 0.0),
        "tanh": math.tanh,
        "sigmoid": lambda z: 1.0 / (1.0 + math.exp(-z)),
        "identity": lambda z: z,
    }
    x = [float(v) for v in x_row]
    for layer in net.layers:
        out = []
        for i in range(layer.n_out):
            z = float(layer.bias[i])
            for j in range(layer.n_in):
                z += float(layer.weights[i, j]) * x[j]
            out.append(act[layer.activation](z))
        x = out
    return x


def random_net(rng, depth=None, max_width=8):
    depth = depth or int(rng.integers(1, 4))
    widths = [int(w) for w in rng.integers(1, max_width + 1, depth + 1)]
    acts = [str(a) for a in rng.choice(ACTIVATIONS, depth)]
    net = init_net(widths, acts, rng)
    for layer in net.layers:
        layer.bias[:] = rng.normal(0, 0.5, layer.n_out)
    return net


def test_identity_layer():
    net = DenseNet([Layer(np.eye(2), np.zeros(2), "identity")])
    assert forward(net, [[1.0, 2.0]])[0].tolist() == [[1.0, 2.0]]


def test_relu():
    net = DenseNet([Layer(np.eye(2), np.zeros(2), "relu")])
    assert forward(net, [[-1.0, 2.0]])[0].tolist() == [[0.0, 2.0]]


def test_forward_matches_scalar_oracle():
    rng = np.random.default_rng(0)
    for _ in range(10):
        net = random_net(rng, depth=3)
        x = rng.normal(size=(4, net.layers[0].n_in))
        out = forward(net, x)[0]
        for r in range(4):
            np.testing.assert_allclose(out[r], scalar_forward(net, x[r]), rtol=1e-12, atol=1e-14)


def test_shape_errors():
    net = init_net([3, 4, 2], ["relu", "identity"], np.random.default_rng(0))
    with pytest.raises(ShapeMismatch):
        forward(net, np.zeros((2, 4)))
    _, cache = forward(net, np.zeros((2, 3)))
    with pytest.raises(ShapeMismatch):
        backward(net, cache, np.zeros((2, 3)))
    with pytest.raises(ShapeMismatch):
        DenseNet([Layer(np.zeros((4, 3)), np.zeros(4)), Layer(np.zeros((2, 5)), np.zeros(2))])


def test_zero_upstream_gives_zero_grads():
    rng = np.random.default_rng(1)
    net = random_net(rng, depth=3)
    out, cache = forward(net, rng.normal(size=(5, net.layers[0].n_in)))
    grads, dx = backward(net, cache, np.zeros_like(out))
    assert all(not g.any() for g in grads) and not dx.any()


def test_scalar_chain_rule():
    net = DenseNet([Layer([[2.0]], [0.0], "identity")])
    out, cache = forward(net, [[3.0]])
    grads, dx = backward(net, cache, np.ones_like(out))
    assert grads[0].tolist() == [[3.0]]
    assert grads[1].tolist() == [1.0]
    assert dx.tolist() == [[2.0]]


def test_mean_loss_weight_grad_is_mean_input():
    rng = np.random.default_rng(2)
    net = DenseNet([Layer(rng.normal(size=(1, 3)), [0.0], "identity")])
    x = rng.normal(size=(6, 3))
    out, cache = forward(net, x)
    grads, _ = backward(net, cache, np.full_like(out, 1 / 6))
    np.testing.assert_allclose(grads[0][0], x.mean(axis=0), rtol=1e-14)


def test_gradients_match_finite_differences():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(10):
        net = random_net(rng)
        x = rng.normal(size=(4, net.layers[0].n_in))
        r = rng.normal(size=(4, net.layers[-1].n_out))
        loss = lambda out: float(np.sum(r * out) + 0.5 * np.sum(out ** 2))
        out, cache = forward(net, x)
        grads, _ = backward(net, cache, r + out)
        for a, n in zip(grads, numerical_gradients(net, x, loss)):
            worst = max(worst, relative_error(a, n))
    assert worst < 1e-5


def test_input_gradient_matches_finite_differences():
    rng = np.random.default_rng(4)
    net = random_net(rng, depth=3)
    x = rng.normal(size=(3, net.layers[0].n_in))
    out, cache = forward(net, x)
    _, dx = backward(net, cache, np.ones_like(out))
    num = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        xp, xm = x.copy(), x.copy()
        xp[idx] += 1e-5
        xm[idx] -= 1e-5
        num[idx] = (forward(net, xp)[0].sum() - forward(net, xm)[0].sum()) / 2e-5
    assert relative_error(dx, num) < 1e-5


def test_rmsprop_zero_gradient():
    p = [np.array([1.0, -2.0])]
    state = RMSPropState([np.array([0.5, 2.0])], lr=0.1, rho=0.9)
    rmsprop_step(p, [np.zeros(2)], state)
    assert p[0].tolist() == [1.0, -2.0]
    np.testing.assert_allclose(state.square_avg[0], [0.45, 1.8], rtol=1e-15)


def test_rmsprop_hand_value():
    p = [np.array([1.0])]
    state = RMSPropState([np.array([0.0])], lr=0.005, rho=0.9, eps=1e-8)
    rmsprop_step(p, [np.array([2.0])], state)
    # s = 0.1 * 4 = 0.4 ; theta = 1 - 0.005 * 2 / (sqrt(0.4) + 1e-8)
    assert state.square_avg[0][0] == pytest.approx(0.4, rel=1e-15)
    assert p[0][0] == pytest.approx(1 - 0.01 / (math.sqrt(0.4) + 1e-8), rel=1e-15)
    assert p[0][0] == pytest.approx(0.9841886, abs=1e-7)


def test_rmsprop_constant_gradient_fixed_point():
    p = [np.array([0.0])]
    state = RMSPropState([np.array([0.0])], lr=1e-3, rho=0.9)
    s = 0.0
    for _ in range(500):
        rmsprop_step(p, [np.array([3.0])], state)
        s = 0.9 * s + 0.1 * 9.0
        assert np.isfinite(p[0]).all()
    assert state.square_avg[0][0] == pytest.approx(s, rel=1e-12)
    assert state.square_avg[0][0] == pytest.approx(9.0, rel=1e-12)


def test_rmsprop_rejects_non_finite():
    p = [np.array([1.0])]
    state = RMSPropState.zeros_like(p)
    with pytest.raises(NonFiniteGradient):
        rmsprop_step(p, [np.array([np.nan])], state)
    assert p[0][0] == 1.0 and state.square_avg[0][0] == 0.0
    with pytest.raises(ShapeMismatch):
        rmsprop_step(p, [np.zeros(2)], state)


def test_training_is_bit_deterministic():
    def run():
        rng = np.random.default_rng(42)
        net = init_net([4, 8, 3], ["tanh", "identity"], rng)
        state = RMSPropState.zeros_like(net.params(), lr=1e-2)
        for _ in range(20):
            x = rng.normal(size=(5, 4))
            out, cache = forward(net, x)
            grads, _ = backward(net, cache, out - 1.0)
            rmsprop_step(net.params(), grads, state)
        return b"".join(p.tobytes() for p in net.params())

    assert run() == run()


def test_glorot_init_bounds():
    net = init_net([10, 20, 5], ["relu", "identity"], np.random.default_rng(0))
    assert np.abs(net.layers[0].weights).max() <= math.sqrt(6 / 30)
    assert np.abs(net.layers[1].weights).max() <= math.sqrt(6 / 25)
    assert not net.layers[0].bias.any()
