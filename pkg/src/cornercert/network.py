"""Small dense networks with MinMax / ReLU activations.

Weights are stored rows = input dim, cols = output dim, so a layer computes
``x @ W + b``. Every function here accepts a single point of shape ``(n,)``
or a batch of shape ``(N, n)``.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class InputShapeError(ValueError):
    pass


class UnsupportedActivationError(ValueError):
    pass


class Activation(str, enum.Enum):
    MINMAX = "minmax"
    RELU = "relu"
    IDENTITY = "identity"


@dataclass(frozen=True)
class DenseLayer:
    weights: np.ndarray
    bias: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 2 or w.size == 0:
            raise ValueError(f"weights must be a nonempty matrix, got shape {w.shape}")
        b = np.zeros(w.shape[1]) if self.bias is None else np.asarray(self.bias, dtype=np.float64)
        if b.shape != (w.shape[1],):
            raise ValueError(f"bias shape {b.shape} does not match output dim {w.shape[1]}")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise ValueError("layer parameters must be finite")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @property
    def in_dim(self) -> int:
        return self.weights.shape[0]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class Network:
    layers: tuple[tuple[DenseLayer, Activation], ...]
    input_dim: int
    num_classes: int

    def __post_init__(self):
        layers = tuple((layer, Activation(act)) for layer, act in self.layers)
        object.__setattr__(self, "layers", layers)
        if not layers:
            raise ValueError("network needs at least one layer")
        if self.num_classes < 2:
            raise ValueError("num_classes must be >= 2")
        dim = self.input_dim
        for k, (layer, act) in enumerate(layers):
            if layer.in_dim != dim:
                raise ValueError(f"layer {k} expects input dim {layer.in_dim}, got {dim}")
            if act is Activation.MINMAX and layer.out_dim % 2:
                raise ValueError(f"layer {k}: MinMax needs an even width, got {layer.out_dim}")
            dim = layer.out_dim
        if layers[-1][1] is not Activation.IDENTITY:
            raise ValueError("last layer must have identity activation")
        if dim != self.num_classes:
            raise ValueError(f"output dim {dim} != num_classes {self.num_classes}")

    @classmethod
    def from_weights(cls, weights, biases=None, activation="minmax") -> "Network":
        """Chain of dense layers with one hidden activation kind and identity output."""
        biases = biases if biases is not None else [None] * len(weights)
        layers = []
        for k, (w, b) in enumerate(zip(weights, biases)):
            act = Activation.IDENTITY if k == len(weights) - 1 else Activation(activation)
            layers.append((DenseLayer(w, b), act))
        return cls(tuple(layers), layers[0][0].in_dim, layers[-1][0].out_dim)

    @property
    def hidden_layers(self):
        return self.layers[:-1]

    @property
    def output_layer(self) -> DenseLayer:
        return self.layers[-1][0]

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "num_classes": self.num_classes,
            "layers": [
                {
                    "weights": layer.weights.tolist(),
                    "bias": layer.bias.tolist(),
                    "activation": act.value,
                }
                for layer, act in self.layers
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Network":
        layers = tuple(
            (DenseLayer(np.array(spec["weights"], dtype=np.float64),
                        np.array(spec.get("bias") or np.zeros(len(spec["weights"][0])))),
             Activation(spec["activation"]))
            for spec in doc["layers"]
        )
        return cls(layers, int(doc["input_dim"]), int(doc["num_classes"]))


def save_network(net: Network, path) -> None:
    Path(path).write_text(json.dumps(net.to_dict(), indent=1) + "\n")


def load_network(path) -> Network:
    return Network.from_dict(json.loads(Path(path).read_text()))


# -- activations -------------------------------------------------------------

def minmax(z: np.ndarray) -> np.ndarray:
    """Sort each consecutive pair (z[2k], z[2k+1]) into (min, max)."""
    a, b = z[..., 0::2], z[..., 1::2]
    out = np.empty_like(z)
    out[..., 0::2] = np.minimum(a, b)
    out[..., 1::2] = np.maximum(a, b)
    return out


def _activation_state(act: Activation, z: np.ndarray):
    # MinMax: True where the pair is swapped (strictly a > b), so ties keep order
    # and the Jacobian stays a permutation. ReLU: True where active (z > 0).
    if act is Activation.MINMAX:
        return z[..., 0::2] > z[..., 1::2]
    if act is Activation.RELU:
        return z > 0
    if act is Activation.IDENTITY:
        return None
    raise UnsupportedActivationError(act)


def _apply(act: Activation, z: np.ndarray, state) -> np.ndarray:
    if act is Activation.IDENTITY:
        return z
    if act is Activation.RELU:
        return np.where(state, z, 0.0)
    return _swap_pairs(z, state)


def _swap_pairs(z: np.ndarray, swap: np.ndarray) -> np.ndarray:
    a, b = z[..., 0::2], z[..., 1::2]
    out = np.empty_like(z)
    out[..., 0::2] = np.where(swap, b, a)
    out[..., 1::2] = np.where(swap, a, b)
    return out


def _backprop_act(act: Activation, g: np.ndarray, state) -> np.ndarray:
    if act is Activation.IDENTITY:
        return g
    if act is Activation.RELU:
        return np.where(state, g, 0.0)
    # a permutation is its own inverse pairwise
    return _swap_pairs(g, state)


# -- evaluation ----------------------------------------------------------------

def _as_input(net: Network, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    xb = x[None, :] if single else x
    if xb.ndim != 2 or xb.shape[1] != net.input_dim:
        raise InputShapeError(f"expected input of dim {net.input_dim}, got shape {x.shape}")
    return xb, single


def forward_cache(net: Network, x):
    """Forward pass on a batch keeping what backprop needs.

    Returns ``(logits, cache)``; cache holds (layer input, activation state)
    per layer.
    """
    h = np.asarray(x, dtype=np.float64)
    cache = []
    for layer, act in net.layers:
        # einsum rather than BLAS matmul: each row's result does not depend on
        # how many other rows share the call, so chunked grids match exactly
        z = np.einsum("...i,ij->...j", h, layer.weights) + layer.bias
        state = _activation_state(act, z)
        cache.append((h, state))
        h = _apply(act, z, state)
    return h, cache


def backward(net: Network, cache, grad_out: np.ndarray):
    """Reverse pass. Returns ``(grad_input, [(dW, db), ...])`` summed over the batch."""
    g = grad_out
    grads = []
    for (layer, act), (h, state) in zip(reversed(net.layers), reversed(cache)):
        g = _backprop_act(act, g, state)
        grads.append((h.T @ g, g.sum(axis=0)))
        g = g @ layer.weights.T
    grads.reverse()
    return g, grads


def forward(net: Network, x) -> np.ndarray:
    xb, single = _as_input(net, x)
    logits, _ = forward_cache(net, xb)
    return logits[0] if single else logits


def predict(net: Network, x):
    # np.argmax returns the first maximal index, i.e. ties go to the smallest class
    out = np.argmax(forward(net, x), axis=-1)
    return int(out) if np.ndim(out) == 0 else out


def margin(net: Network, x):
    """f_j(x) - max_{i != j} f_i(x) for the predicted class j (always >= 0)."""
    logits = forward(net, x)
    top2 = np.sort(logits, axis=-1)[..., -2:]
    m = top2[..., 1] - top2[..., 0]
    return float(m) if np.ndim(m) == 0 else m


def signed_margin(net: Network, x):
    """f_1 - f_0; positive on the class-1 side. Binary networks only."""
    if net.num_classes != 2:
        raise ValueError("signed margin is defined for binary networks")
    logits = forward(net, x)
    return logits[..., 1] - logits[..., 0]


def input_gradient(net: Network, x, v) -> np.ndarray:
    """Exact gradient of ``v . f(x)`` w.r.t. x (batched if x is)."""
    xb, single = _as_input(net, x)
    v = np.asarray(v, dtype=np.float64)
    _, cache = forward_cache(net, xb)
    gv = np.broadcast_to(v, (xb.shape[0], net.num_classes))
    g, _ = backward(net, cache, gv)
    return g[0] if single else g


def activation_jacobian(act: Activation, z: np.ndarray) -> np.ndarray:
    """Jacobian of a single activation layer at pre-activation z (1-D)."""
    act = Activation(act)
    state = _activation_state(act, z)
    # row k of the result is e_k @ J
    return _backprop_act(act, np.eye(len(z)), state)


def make_minimal_corner_net() -> Network:
    """2-2-2 MinMax net with f(x) = (0, max(x1, x2))."""
    w1 = np.array([[1.0, 0.0], [0.0, 1.0]])
    w2 = np.array([[0.0, 0.0], [0.0, 1.0]])
    return Network.from_weights([w1, w2], activation="minmax")
