"""Minimal feedforward network engine in float64 numpy.

Supports exactly what the representer and discriminator networks need:
forward evaluation, reverse-mode gradients with respect to parameters
*and* inputs (the particle flow differentiates the discriminator w.r.t.
its input), SGD-with-momentum and Adam updates, and JSON checkpoints.

Everything is deterministic: weights come from a seeded generator and
all updates are pure float64 arithmetic on a single thread.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, NumericError

__all__ = [
    "Activation",
    "relu",
    "leaky_relu",
    "identity",
    "Layer",
    "MlpNetwork",
    "init_network",
    "forward",
    "backward",
    "Sgd",
    "Adam",
    "optimizer_apply",
    "save_checkpoint",
    "load_checkpoint",
]

_ACTIVATION_KINDS = ("relu", "leaky_relu", "identity")


@dataclass(frozen=True)
class Activation:
    """Elementwise nonlinearity tag: relu, leaky_relu(slope) or identity."""

    kind: str
    slope: float = 0.0

    def __post_init__(self):
        if self.kind not in _ACTIVATION_KINDS:
            raise ValueError(f"unknown activation kind {self.kind!r}")
        if self.kind == "leaky_relu" and not 0.0 < self.slope < 1.0:
            raise ValueError(f"leaky_relu slope must be in (0, 1), got {self.slope}")

    def apply(self, z: np.ndarray) -> np.ndarray:
        if self.kind == "relu":
            return np.maximum(z, 0.0)
        if self.kind == "leaky_relu":
            return np.where(z > 0.0, z, self.slope * z)
        return z

    def derivative(self, z: np.ndarray) -> np.ndarray:
        # Subgradient at 0 is taken as the left value (0 for relu,
        # slope for leaky_relu), keeping gradients bounded.
        if self.kind == "relu":
            return (z > 0.0).astype(np.float64)
        if self.kind == "leaky_relu":
            return np.where(z > 0.0, 1.0, self.slope)
        return np.ones_like(z)


def relu() -> Activation:
    return Activation("relu")


def leaky_relu(slope: float = 0.01) -> Activation:
    return Activation("leaky_relu", slope)


def identity() -> Activation:
    return Activation("identity")


@dataclass
class Layer:
    """One affine+activation block: ``act(x @ weight.T + bias)``."""

    weight: np.ndarray  # (out, in)
    bias: np.ndarray  # (out,)
    activation: Activation

    @property
    def in_dim(self) -> int:
        return self.weight.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[0]


@dataclass
class MlpNetwork:
    """An ordered stack of layers; the last layer is always linear."""

    layers: list[Layer]

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim

    def parameter_count(self) -> int:
        return sum(l.weight.size + l.bias.size for l in self.layers)

    def copy(self) -> "MlpNetwork":
        return MlpNetwork(
            [Layer(l.weight.copy(), l.bias.copy(), l.activation) for l in self.layers]
        )


def init_network(layer_dims, activation: Activation, seed: int) -> MlpNetwork:
    """Build an MLP with He-uniform weights and zero biases.

    ``layer_dims`` lists [input, hidden..., output] sizes. Hidden layers
    use ``activation``; the output layer is linear. Weights are drawn
    from Uniform(+-sqrt(6 / fan_in)) with a PCG64 generator, so the same
    (dims, seed) pair always yields a bit-identical network.
    """
    dims = [int(d) for d in layer_dims]
    if len(dims) < 2:
        raise DimensionError(f"need at least [input, output] dims, got {dims}")
    if any(d < 1 for d in dims):
        raise DimensionError(f"layer dims must be positive, got {dims}")
    rng = np.random.Generator(np.random.PCG64(seed))
    layers = []
    for k in range(len(dims) - 1):
        fan_in, fan_out = dims[k], dims[k + 1]
        limit = np.sqrt(6.0 / fan_in)
        weight = rng.uniform(-limit, limit, size=(fan_out, fan_in))
        bias = np.zeros(fan_out)
        act = activation if k < len(dims) - 2 else identity()
        layers.append(Layer(weight, bias, act))
    return MlpNetwork(layers)


def _check_input(net: MlpNetwork, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionError(f"expected a 2-D input, got shape {x.shape}")
    if x.shape[1] != net.input_dim:
        raise DimensionError(
            f"input has {x.shape[1]} columns but the network expects {net.input_dim}"
        )
    return x


def forward(net: MlpNetwork, x: np.ndarray) -> np.ndarray:
    """Evaluate the network row-wise: (n, input_dim) -> (n, output_dim)."""
    x = _check_input(net, x)
    out = x
    for layer in net.layers:
        out = layer.activation.apply(out @ layer.weight.T + layer.bias)
    return out


def forward_hidden(net: MlpNetwork, x: np.ndarray, upto: int) -> np.ndarray:
    """Activations after the first ``upto`` layers (feature extraction)."""
    x = _check_input(net, x)
    out = x
    for layer in net.layers[:upto]:
        out = layer.activation.apply(out @ layer.weight.T + layer.bias)
    return out


def backward(net: MlpNetwork, x: np.ndarray, grad_output: np.ndarray):
    """Reverse-mode gradients of ``sum(grad_output * forward(net, x))``.

    Returns ``(param_grads, input_grad)`` where ``param_grads`` is a list
    of ``(d_weight, d_bias)`` pairs matching ``net.layers`` and
    ``input_grad`` has the shape of ``x``.
    """
    x = _check_input(net, x)
    grad_output = np.asarray(grad_output, dtype=np.float64)
    if grad_output.shape != (x.shape[0], net.output_dim):
        raise DimensionError(
            f"grad_output shape {grad_output.shape} does not match "
            f"({x.shape[0]}, {net.output_dim})"
        )
    inputs = []  # input to each layer
    pre = []  # pre-activation of each layer
    out = x
    for layer in net.layers:
        inputs.append(out)
        z = out @ layer.weight.T + layer.bias
        pre.append(z)
        out = layer.activation.apply(z)

    param_grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(net.layers)
    g = grad_output
    for k in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[k]
        g = g * layer.activation.derivative(pre[k])
        param_grads[k] = (g.T @ inputs[k], g.sum(axis=0))
        g = g @ layer.weight
    return param_grads, g


def _zeros_like_params(net: MlpNetwork):
    return [(np.zeros_like(l.weight), np.zeros_like(l.bias)) for l in net.layers]


def _check_grads(net: MlpNetwork, grads) -> None:
    if len(grads) != len(net.layers):
        raise DimensionError("gradient list does not match the network's layers")
    for k, ((gw, gb), layer) in enumerate(zip(grads, net.layers)):
        if gw.shape != layer.weight.shape or gb.shape != layer.bias.shape:
            raise DimensionError(f"gradient shapes do not match layer {k}")
        if not (np.isfinite(gw).all() and np.isfinite(gb).all()):
            raise NumericError(f"non-finite gradient in layer {k}")


@dataclass
class Sgd:
    """SGD with momentum and coupled L2 weight decay."""

    learning_rate: float
    momentum: float = 0.0
    weight_decay: float = 0.0
    step_count: int = 0
    _velocity: list = field(default=None, repr=False)

    def apply(self, net: MlpNetwork, grads) -> None:
        _check_grads(net, grads)
        if self._velocity is None:
            self._velocity = _zeros_like_params(net)
        for (vw, vb), (gw, gb), layer in zip(self._velocity, grads, net.layers):
            if self.weight_decay:
                gw = gw + self.weight_decay * layer.weight
                gb = gb + self.weight_decay * layer.bias
            vw *= self.momentum
            vw += gw
            vb *= self.momentum
            vb += gb
            layer.weight -= self.learning_rate * vw
            layer.bias -= self.learning_rate * vb
        self.step_count += 1


@dataclass
class Adam:
    """Adam with bias correction and coupled L2 weight decay."""

    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    step_count: int = 0
    _m: list = field(default=None, repr=False)
    _v: list = field(default=None, repr=False)

    def apply(self, net: MlpNetwork, grads) -> None:
        _check_grads(net, grads)
        if self._m is None:
            self._m = _zeros_like_params(net)
            self._v = _zeros_like_params(net)
        self.step_count += 1
        t = self.step_count
        c1 = 1.0 - self.beta1**t
        c2 = 1.0 - self.beta2**t
        for (mw, mb), (vw, vb), (gw, gb), layer in zip(
            self._m, self._v, grads, net.layers
        ):
            if self.weight_decay:
                gw = gw + self.weight_decay * layer.weight
                gb = gb + self.weight_decay * layer.bias
            mw *= self.beta1
            mw += (1.0 - self.beta1) * gw
            mb *= self.beta1
            mb += (1.0 - self.beta1) * gb
            vw *= self.beta2
            vw += (1.0 - self.beta2) * gw * gw
            vb *= self.beta2
            vb += (1.0 - self.beta2) * gb * gb
            layer.weight -= self.learning_rate * (mw / c1) / (np.sqrt(vw / c2) + self.eps)
            layer.bias -= self.learning_rate * (mb / c1) / (np.sqrt(vb / c2) + self.eps)


def optimizer_apply(state, net: MlpNetwork, grads) -> None:
    """Apply one optimizer step in place (dispatches to ``state.apply``)."""
    state.apply(net, grads)


# Checkpoint format: JSON object whose first key is "version" (currently 1),
# then layer dims, activation tags and row-major weights/biases.
CHECKPOINT_VERSION = 1


def save_checkpoint(net: MlpNetwork, path: str) -> None:
    dims = [net.input_dim] + [l.out_dim for l in net.layers]
    doc = {
        "version": CHECKPOINT_VERSION,
        "layer_dims": dims,
        "activations": [[l.activation.kind, l.activation.slope] for l in net.layers],
        "weights": [l.weight.ravel().tolist() for l in net.layers],
        "biases": [l.bias.tolist() for l in net.layers],
    }
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
    os.replace(tmp, path)


def load_checkpoint(path: str) -> MlpNetwork:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {doc.get('version')!r}")
    dims = doc["layer_dims"]
    layers = []
    for k in range(len(dims) - 1):
        kind, slope = doc["activations"][k]
        weight = np.array(doc["weights"][k], dtype=np.float64).reshape(
            dims[k + 1], dims[k]
        )
        bias = np.array(doc["biases"][k], dtype=np.float64)
        layers.append(Layer(weight, bias, Activation(kind, slope)))
    return MlpNetwork(layers)
