"""Dense feed-forward networks with hand-written backprop and RMSProp.

Everything is float64.  A network is a list of ``Layer`` objects; ``forward``
returns the output together with a cache of per-layer inputs and
pre-activations that ``backward`` consumes.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonFiniteGradient, ShapeMismatch

ACTIVATIONS = ("relu", "tanh", "sigmoid", "identity")


def _activate(name, z):
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "tanh":
        return np.tanh(z)
    if name == "sigmoid":
        return 0.5 * (1.0 + np.tanh(0.5 * z))
    return z


def _activation_grad(name, z, a):
    """d activation / d z, given pre-activation ``z`` and output ``a``."""
    if name == "relu":
        return (z > 0).astype(z.dtype)
    if name == "tanh":
        return 1.0 - a * a
    if name == "sigmoid":
        return a * (1.0 - a)
    return np.ones_like(z)


@dataclass
class Layer:
    weights: np.ndarray  # (out, in)
    bias: np.ndarray     # (out,)
    activation: str = "identity"

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64).reshape(-1)
        if self.weights.ndim != 2 or self.bias.shape[0] != self.weights.shape[0]:
            raise ShapeMismatch(f"weights {self.weights.shape} and bias {self.bias.shape} disagree")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def n_in(self):
        return self.weights.shape[1]

    @property
    def n_out(self):
        return self.weights.shape[0]


@dataclass
class DenseNet:
    layers: list = field(default_factory=list)

    def __post_init__(self):
        for a, b in zip(self.layers, self.layers[1:]):
            if a.n_out != b.n_in:
                raise ShapeMismatch(f"layer widths do not chain: {a.n_out} -> {b.n_in}")

    @property
    def widths(self):
        return [self.layers[0].n_in] + [l.n_out for l in self.layers]

    def params(self):
        """Parameter arrays in declaration order: W1, b1, W2, b2, ..."""
        out = []
        for layer in self.layers:
            out += [layer.weights, layer.bias]
        return out

    def copy(self):
        return DenseNet([Layer(l.weights.copy(), l.bias.copy(), l.activation) for l in self.layers])

    def __call__(self, x):
        return forward(self, x)[0]


def init_net(widths, activations, rng) -> DenseNet:
    """Glorot-uniform weights, zero biases.

    ``activations`` has one entry per layer (``len(widths) - 1``).
    """
    if len(activations) != len(widths) - 1:
        raise ShapeMismatch("need one activation per layer")
    layers = []
    for n_in, n_out, act in zip(widths[:-1], widths[1:], activations):
        bound = np.sqrt(6.0 / (n_in + n_out))
        layers.append(Layer(rng.uniform(-bound, bound, size=(n_out, n_in)), np.zeros(n_out), act))
    return DenseNet(layers)


@dataclass
class Cache:
    inputs: list  # input to each layer
    pre: list     # pre-activation of each layer
    post: list    # output of each layer


def forward(net: DenseNet, batch):
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != net.layers[0].n_in:
        raise ShapeMismatch(f"batch shape {x.shape} does not fit input width {net.layers[0].n_in}")
    cache = Cache([], [], [])
    for layer in net.layers:
        cache.inputs.append(x)
        z = x @ layer.weights.T + layer.bias
        x = _activate(layer.activation, z)
        cache.pre.append(z)
        cache.post.append(x)
    return x, cache


def backward(net: DenseNet, cache: Cache, upstream):
    """Gradients of a scalar loss whose gradient w.r.t. the output is ``upstream``.

    Returns ``(grads, input_grad)`` where ``grads`` follows ``net.params()`` order.
    """
    g = np.asarray(upstream, dtype=np.float64)
    if g.shape != cache.post[-1].shape:
        raise ShapeMismatch(f"upstream gradient {g.shape} vs output {cache.post[-1].shape}")
    grads = [None] * (2 * len(net.layers))
    for i in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[i]
        dz = g * _activation_grad(layer.activation, cache.pre[i], cache.post[i])
        grads[2 * i] = dz.T @ cache.inputs[i]
        grads[2 * i + 1] = dz.sum(axis=0)
        g = dz @ layer.weights
    return grads, g


@dataclass
class RMSPropState:
    square_avg: list
    lr: float = 5e-5
    rho: float = 0.9
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, params, lr=5e-5, rho=0.9, eps=1e-8):
        return cls([np.zeros_like(p) for p in params], lr, rho, eps)


def rmsprop_step(params, grads, state: RMSPropState):
    """In-place RMSProp update; returns ``(params, state)``.

    s <- rho*s + (1-rho)*g**2 ;  theta <- theta - lr*g/(sqrt(s)+eps)
    """
    if len(params) != len(grads) or len(params) != len(state.square_avg):
        raise ShapeMismatch("params, grads and optimizer state differ in length")
    for p, g, s in zip(params, grads, state.square_avg):
        if p.shape != g.shape or p.shape != s.shape:
            raise ShapeMismatch(f"parameter {p.shape}, gradient {g.shape}, state {s.shape}")
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradient("gradient contains NaN or inf")
    for p, g, s in zip(params, grads, state.square_avg):
        s *= state.rho
        s += (1.0 - state.rho) * g * g
        p -= state.lr * g / (np.sqrt(s) + state.eps)
    return params, state


def numerical_gradients(net: DenseNet, batch, loss_fn, step=1e-5):
    """Central finite differences of ``loss_fn(net(batch))`` for every parameter."""
    out = []
    for p in net.params():
        g = np.zeros_like(p)
        flat, gflat = p.reshape(-1), g.reshape(-1)
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + step
            plus = loss_fn(forward(net, batch)[0])
            flat[k] = orig - step
            minus = loss_fn(forward(net, batch)[0])
            flat[k] = orig
            gflat[k] = (plus - minus) / (2 * step)
        out.append(g)
    return out


def relative_error(a, b, floor=1e-12) -> float:
    """||a - b|| / max(||a|| + ||b||, floor), Euclidean norms."""
    a, b = np.asarray(a), np.asarray(b)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a) + np.linalg.norm(b), floor))
