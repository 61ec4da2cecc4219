"""Global (layer-wise product) and local (sampled) Lipschitz bounds."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import (
    Activation,
    Network,
    UnsupportedActivationError,
    _activation_state,
    _apply,
    forward,
    input_gradient,
    predict,
)

_ONE_LIPSCHITZ = {Activation.MINMAX, Activation.RELU, Activation.IDENTITY}


@dataclass(frozen=True)
class LipschitzBound:
    pair_constants: np.ndarray  # K[j, i], symmetric, zero diagonal
    method: str = "layerwise_product"
    power_iters: int = 1000
    tol: float = 1e-9

    def K(self, j: int, i: int) -> float:
        return float(self.pair_constants[j, i])

    def to_dict(self) -> dict:
        return {"K": self.pair_constants.tolist(), "method": self.method}


@dataclass(frozen=True)
class LocalLipschitzEstimate:
    point: np.ndarray
    radius: float
    lower: float
    upper: float
    samples: int
    pair: tuple[int, int]
    kind: str = "sampled_lower_bound"


def top_singular(matrix, iters: int = 1000, tol: float = 1e-9):
    """Top singular triple ``(sigma, u, v)`` with ``matrix @ v = sigma * u``.

    Power iteration on the smaller Gram matrix, squaring the iterate each step
    so that k steps act like 2**k plain power steps. Working with the matrix
    iterate instead of a vector means no start vector can be orthogonal to the
    top singular space. Deterministic.
    """
    a = np.asarray(matrix, dtype=np.float64)
    if a.size == 0 or not np.all(np.isfinite(a)):
        raise ValueError("matrix must be nonempty and finite")
    transposed = a.shape[0] > a.shape[1]
    if transposed:
        a = a.T
    gram = a @ a.T
    scale = np.abs(gram).max()
    if scale == 0.0:
        u = np.zeros(a.shape[0])
        v = np.zeros(a.shape[1])
        return (0.0, v, u) if transposed else (0.0, u, v)
    p = gram / scale
    for _ in range(iters):
        q = p @ p
        q /= np.abs(q).max()
        done = np.abs(q - p).max() <= tol * 1e-3
        p = q
        if done:
            break
    col = p[:, np.argmax(np.linalg.norm(p, axis=0))]
    u = col / np.linalg.norm(col)
    # one extra Rayleigh refinement against the unscaled Gram matrix
    u = gram @ u
    u /= np.linalg.norm(u)
    av = a.T @ u
    sigma = float(np.linalg.norm(av))
    v = av / sigma
    return (sigma, v, u) if transposed else (sigma, u, v)


def spectral_norm(matrix, iters: int = 1000, tol: float = 1e-9) -> float:
    return top_singular(matrix, iters, tol)[0]


def hidden_norm_product(net: Network, iters: int = 1000, tol: float = 1e-9) -> float:
    prod = 1.0
    for layer, act in net.hidden_layers:
        if act not in _ONE_LIPSCHITZ:
            raise UnsupportedActivationError(act)
        prod *= spectral_norm(layer.weights, iters, tol)
    return prod


def pair_bounds(net: Network, iters: int = 1000, tol: float = 1e-9) -> LipschitzBound:
    """K[j, i] = (prod of hidden spectral norms) * ||w_j - w_i||_2.

    w_c is column c of the output weight matrix, so K[j, i] bounds the
    Lipschitz constant of f_j - f_i directly instead of going through the
    norm of the whole output layer.
    """
    prod = hidden_norm_product(net, iters, tol)
    w = net.output_layer.weights
    diff = w.T[:, None, :] - w.T[None, :, :]
    K = prod * np.linalg.norm(diff, axis=-1)
    return LipschitzBound(K, power_iters=iters, tol=tol)


# -- local estimate ------------------------------------------------------------

def _tangent_forward(net: Network, x: np.ndarray, u: np.ndarray):
    """Pre-activation values and their directional derivatives along u at x.

    The activation pattern is taken as the one holding just past x in
    direction u (ties broken by the derivative). Returns the list of
    (value, slope) pairs of every quantity whose sign flip changes the
    pattern, i.e. the next-breakpoint candidates.
    """
    h, dh = x, u
    watched = []
    for layer, act in net.layers:
        z = h @ layer.weights + layer.bias
        dz = dh @ layer.weights
        if act is Activation.IDENTITY:
            h, dh = z, dz
            continue
        if act is Activation.RELU:
            val, slope = z, dz
        else:
            val = z[0::2] - z[1::2]
            slope = dz[0::2] - dz[1::2]
        # state one step past x: sign of val, or of slope on an exact tie
        probe = np.where(val != 0.0, val, slope)
        state = probe > 0
        watched.append((val, slope))
        h = _apply(act, z, state)
        dh = _apply(act, dz, state)
    return watched


def _next_break(watched) -> float:
    best = np.inf
    for val, slope in watched:
        with np.errstate(divide="ignore", invalid="ignore"):
            s = -val / slope
        ok = (s > 0) & np.isfinite(s)
        if ok.any():
            best = min(best, float(s[ok].min()))
    return best


def ray_gradient_norms(net: Network, x, direction, length: float, c, max_pieces: int = 10_000):
    """Norms of grad(c . f) on every linear piece crossed by the segment x + t*dir, t in [0, length].

    Walks the segment piece by piece using exact breakpoints, so the set of
    pieces seen for a shorter segment is a subset of those for a longer one.
    """
    x = np.asarray(x, dtype=np.float64)
    d = np.asarray(direction, dtype=np.float64)
    d = d / np.linalg.norm(d)
    norms = []
    t = 0.0
    for _ in range(max_pieces):
        step = _next_break(_tangent_forward(net, x + t * d, d))
        end = min(t + step, length)
        mid = x + 0.5 * (t + end) * d
        norms.append(float(np.linalg.norm(input_gradient(net, mid, c))))
        if end >= length:
            break
        # nudge past the breakpoint; pieces narrower than this are skipped
        t = end + 1e-12 * max(1.0, length)
    return norms


def _unit_directions(n: int, count: int, seed: int) -> np.ndarray:
    if n == 2:
        # evenly spaced with a seeded phase: deterministic and well spread
        phase = np.random.default_rng(seed).uniform(0, 2 * np.pi / count)
        ang = phase + 2 * np.pi * np.arange(count) / count
        return np.stack([np.cos(ang), np.sin(ang)], axis=1)
    g = np.random.default_rng(seed).standard_normal((count, n))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def local_lipschitz(
    net: Network,
    x,
    eps: float,
    budget: int = 256,
    pair: tuple[int, int] | None = None,
    bound: LipschitzBound | None = None,
    seed: int = 0,
) -> LocalLipschitzEstimate:
    """Sampled lower bound on the local Lipschitz constant of f_j - f_i in the eps-ball.

    f is piecewise linear, so the sup is a max of gradient norms over the
    linear pieces meeting the ball. ``budget`` rays from x are walked exactly
    through those pieces; any piece a ray misses is not counted, hence a lower
    bound. ``upper`` is the global layer-wise bound for the same pair.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if budget < 1:
        raise ValueError("budget must be >= 1")
    x = np.asarray(x, dtype=np.float64)
    if pair is None:
        logits = forward(net, x)
        j = int(np.argmax(logits))
        rest = logits.copy()
        rest[j] = -np.inf
        pair = (j, int(np.argmax(rest)))
    j, i = pair
    c = np.zeros(net.num_classes)
    c[j], c[i] = 1.0, -1.0
    lower = float(np.linalg.norm(input_gradient(net, x, c)))
    for d in _unit_directions(net.input_dim, budget, seed):
        lower = max(lower, max(ray_gradient_norms(net, x, d, eps, c)))
    bound = bound or pair_bounds(net)
    return LocalLipschitzEstimate(x, float(eps), lower, bound.K(j, i), budget, (j, i))
