"""Point certifiers: global Lipschitz, local Lipschitz and activation-region."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..lipschitz import LipschitzBound, local_lipschitz
from ..network import Activation, Network, forward, input_gradient


class UnsupportedArchitectureError(ValueError):
    pass


@dataclass(frozen=True)
class CertResult:
    certified: bool
    max_radius: float
    margin: float
    constant_used: float
    method: str
    predicted: int
    # False for estimate-based certificates that are not guaranteed sound
    sound: bool = True

    def row(self) -> dict:
        return {
            "certified": self.certified,
            "max_radius": self.max_radius,
            "margin": self.margin,
            "constant": self.constant_used,
            "method": self.method,
            "predicted": self.predicted,
        }


def _radius(gaps: np.ndarray, K: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(K > 0, gaps / np.where(K > 0, K, 1.0), np.inf)
    return r


def certify_global_batch(net: Network, bound: LipschitzBound, x, eps: float):
    """Vectorized global certification.

    Returns a dict of arrays: ``certified``, ``radius``, ``margin``,
    ``constant`` (K of the binding pair) and ``predicted``.
    """
    if eps < 0:
        raise ValueError("eps must be >= 0")
    logits = np.atleast_2d(forward(net, x))
    K = bound.pair_constants
    rows = np.arange(len(logits))
    j = np.argmax(logits, axis=1)
    gaps = logits[rows, j][:, None] - logits
    Kj = K[j]
    # certified iff f_j - f_i - eps*K_ji >= 0 for all i != j
    slack = gaps - eps * Kj
    slack[rows, j] = np.inf
    radii = _radius(gaps, Kj)
    radii[rows, j] = np.inf
    gaps[rows, j] = np.inf
    # the binding pair sets the radius; with no finite radius fall back to the runner-up
    binding = np.where(np.isinf(radii.min(axis=1)), np.argmin(gaps, axis=1), np.argmin(radii, axis=1))
    return {
        "certified": slack.min(axis=1) >= 0,
        "radius": radii[rows, binding],
        "margin": gaps[rows, binding],
        "constant": Kj[rows, binding],
        "predicted": j,
    }


def certify_global(net: Network, bound: LipschitzBound, x, eps: float) -> CertResult:
    r = certify_global_batch(net, bound, np.asarray(x, dtype=np.float64)[None], eps)
    return CertResult(bool(r["certified"][0]), float(r["radius"][0]), float(r["margin"][0]),
                      float(r["constant"][0]), "global_lipschitz", int(r["predicted"][0]))


def certify_local(net: Network, x, eps: float, budget: int = 256,
                  bound: LipschitzBound | None = None, seed: int = 0) -> CertResult:
    """Certify with sampled local constants K_eps(x) per class pair.

    The constants are lower estimates, so a positive verdict here is NOT a
    guarantee; results carry ``sound=False``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    x = np.asarray(x, dtype=np.float64)
    logits = forward(net, x)
    j = int(np.argmax(logits))
    pairs = []
    for i in range(net.num_classes):
        if i != j:
            k_loc = local_lipschitz(net, x, eps, budget, pair=(j, i), bound=bound, seed=seed).lower
            pairs.append((float(logits[j] - logits[i]), k_loc))
    certified = all(gap - eps * k >= 0 for gap, k in pairs)
    radius, margin, k_used = min(((gap / k if k > 0 else np.inf), gap, k) for gap, k in pairs)
    return CertResult(certified, float(radius), margin, float(k_used),
                      "local_lipschitz", j, sound=False)


def activation_hyperplanes(net: Network) -> tuple[np.ndarray, np.ndarray]:
    """(normals, offsets) of the hyperplanes where the hidden pattern changes."""
    if len(net.layers) != 2:
        raise UnsupportedArchitectureError("region certification needs exactly one hidden layer")
    layer, act = net.layers[0]
    w, b = layer.weights, layer.bias
    if act is Activation.RELU:
        return w.T.copy(), b.copy()
    if act is Activation.MINMAX:
        return (w[:, 0::2] - w[:, 1::2]).T, b[0::2] - b[1::2]
    raise UnsupportedArchitectureError(f"unsupported hidden activation {act.value}")


def certify_region(net: Network, x, eps: float) -> CertResult:
    """Certify iff the eps-ball sits inside one activation region and the
    region's linear decision boundaries are all at least eps away.

    ``max_radius`` is the smaller of the two distances; ``constant_used`` is
    the gradient norm of the binding local margin.
    """
    normals, offsets = activation_hyperplanes(net)
    x = np.asarray(x, dtype=np.float64)
    norms = np.linalg.norm(normals, axis=1)
    live = norms > 0
    d_region = np.inf
    if live.any():
        d_region = float(np.min(np.abs(normals[live] @ x + offsets[live]) / norms[live]))

    logits = forward(net, x)
    j = int(np.argmax(logits))
    pairs = []
    for i in range(net.num_classes):
        if i != j:
            c = np.zeros(net.num_classes)
            c[j], c[i] = 1.0, -1.0
            gnorm = float(np.linalg.norm(input_gradient(net, x, c)))
            gap = float(logits[j] - logits[i])
            pairs.append(((gap / gnorm if gnorm > 0 else np.inf), gnorm, gap))
    d_boundary, k_used, _ = min(pairs)
    margin = min(gap for _, _, gap in pairs)
    certified = d_region >= eps and d_boundary >= eps
    return CertResult(bool(certified), float(min(d_region, d_boundary)), margin, k_used,
                      "activation_region", j)
