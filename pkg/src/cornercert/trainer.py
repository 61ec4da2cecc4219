"""Certified training with a GloRo-style bottom logit and a TRADES-style split loss.

The loss per batch is

    CE(softmax(f(x)), y) + lam * CE(softmax([f(x), bot(x)]), y)

where bot(x) = max_{i != j} (f_i(x) + eps * K_ji) and K are the layer-wise
pair bounds, recomputed (and differentiated) every batch.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .datagen import CornerDataset
from .lipschitz import LipschitzBound, pair_bounds, top_singular
from .network import Network, backward, forward, forward_cache


class TrainingError(RuntimeError):
    def __init__(self, msg: str, epoch: int):
        super().__init__(f"{msg} (epoch {epoch})")
        self.epoch = epoch


@dataclass(frozen=True)
class TrainConfig:
    hidden_units: int = 200
    epochs: int = 64
    batch_size: int = 128
    lam: float = 1.2
    eps_final: float = 0.5
    lr_initial: float = 1e-3
    seed: int = 0
    optimizer: str = "adam"

    def __post_init__(self):
        if self.hidden_units < 2 or self.hidden_units % 2:
            raise ValueError("hidden_units must be a positive even number")
        for name in ("epochs", "batch_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        for name in ("lam", "eps_final", "lr_initial"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")

    @property
    def eps_start(self) -> float:
        return self.eps_final / 100.0


@dataclass
class TrainReport:
    config: TrainConfig
    rows: list[dict] = field(default_factory=list)
    network: Network | None = None

    def save_csv(self, path) -> None:
        cols = ["epoch", "eps", "lr", "loss", "accuracy", "vra"]
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=cols, lineterminator="\n")
            w.writeheader()
            for row in self.rows:
                w.writerow({k: (f"{row[k]:.17g}" if isinstance(row[k], float) else row[k])
                            for k in cols})

    def save_config(self, path) -> None:
        Path(path).write_text(json.dumps(asdict(self.config), indent=2, sort_keys=True) + "\n")


def eps_schedule(epoch: int, cfg: TrainConfig) -> float:
    """Log-interpolate from eps_final/100 to eps_final by the halfway epoch."""
    half = cfg.epochs / 2
    frac = min(1.0, epoch / half)
    return cfg.eps_final * (cfg.eps_start / cfg.eps_final) ** (1.0 - frac)


def lr_schedule(epoch: int, cfg: TrainConfig) -> float:
    """Constant for the first half, then linear decay towards zero."""
    half = cfg.epochs / 2
    if epoch < half:
        return cfg.lr_initial
    return cfg.lr_initial * (1.0 - (epoch - half) / half)


def _bottom_logit(logits: np.ndarray, K: np.ndarray, eps: float):
    """bot = max_{i != j}(f_i + eps*K_ji); also returns j and the argmax i."""
    logits = np.atleast_2d(logits)
    j = np.argmax(logits, axis=1)
    cand = logits + eps * K[j]
    cand[np.arange(len(j)), j] = -np.inf
    i = np.argmax(cand, axis=1)
    return cand[np.arange(len(j)), i], j, i


def gloro_logits(net: Network, bound: LipschitzBound, x, eps: float) -> np.ndarray:
    """Logits with an extra bottom logit appended (m + 1 entries)."""
    f = forward(net, x)
    bot, _, _ = _bottom_logit(f, bound.pair_constants, eps)
    out = np.concatenate([np.atleast_2d(f), bot[:, None]], axis=1)
    return out[0] if np.ndim(f) == 1 else out


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _xent(z: np.ndarray, y: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=1))
    return lse - z[np.arange(len(y)), y]


def loss_and_grads(net: Network, x: np.ndarray, y: np.ndarray, eps: float, lam: float):
    """Mean batch loss and its gradient w.r.t. every (W, b) of the net."""
    n = len(y)
    m = net.num_classes
    logits, cache = forward_cache(net, x)

    hidden = [top_singular(layer.weights) for layer, _ in net.hidden_layers]
    prod = math.prod(s for s, _, _ in hidden)
    w_out = net.output_layer.weights
    diff = w_out.T[:, None, :] - w_out.T[None, :, :]
    dnorm = np.linalg.norm(diff, axis=-1)
    K = prod * dnorm

    bot, j, i = _bottom_logit(logits, K, eps)
    aug = np.concatenate([logits, bot[:, None]], axis=1)
    loss = float(np.mean(_xent(logits, y) + lam * _xent(aug, y)))

    onehot = np.eye(m + 1)[y]
    g_clean = _softmax(logits) - onehot[:, :m]
    g_aug = _softmax(aug) - onehot
    g_logits = (g_clean + lam * g_aug[:, :m]) / n
    g_bot = lam * g_aug[:, m] / n
    rows = np.arange(n)
    np.add.at(g_logits, (rows, i), g_bot)
    # d loss / d K_ji accumulated over the pairs actually used
    g_K = np.zeros((m, m))
    np.add.at(g_K, (j, i), eps * g_bot)

    _, grads = backward(net, cache, g_logits)
    grads = [[dw, db] for dw, db in grads]

    # K_ji = prod * ||w_j - w_i||
    g_prod = float((g_K * dnorm).sum())
    for k, (sigma, u, v) in enumerate(hidden):
        if sigma > 0:
            grads[k][0] = grads[k][0] + g_prod * (prod / sigma) * np.outer(u, v)
    with np.errstate(invalid="ignore", divide="ignore"):
        unit = np.where(dnorm[..., None] > 0, diff / dnorm[..., None], 0.0)
    # d||w_j - w_i|| / dw_j = unit_ji, / dw_i = -unit_ji
    g_cols = prod * np.einsum("ji,jid->jd", g_K, unit) - prod * np.einsum("ji,jid->id", g_K, unit)
    grads[-1][0] = grads[-1][0] + g_cols.T
    return loss, grads


def init_network(cfg: TrainConfig, input_dim: int = 2, num_classes: int = 2) -> Network:
    """Glorot-uniform weights, zero biases."""
    rng = np.random.default_rng(cfg.seed)
    dims = [input_dim, cfg.hidden_units, num_classes]
    weights = []
    for a, b in zip(dims[:-1], dims[1:]):
        lim = math.sqrt(6.0 / (a + b))
        weights.append(rng.uniform(-lim, lim, size=(a, b)))
    return Network.from_weights(weights, activation="minmax")


def _with_params(net: Network, params) -> Network:
    return Network.from_weights([w for w, _ in params], [b for _, b in params], activation="minmax")


def evaluate(net: Network, x: np.ndarray, y: np.ndarray, eps: float) -> tuple[float, float]:
    """(clean accuracy, VRA) under global Lipschitz certification."""
    bound = pair_bounds(net)
    aug = gloro_logits(net, bound, x, eps)
    pred = np.argmax(aug[:, :-1], axis=1)
    certified = np.argmax(aug, axis=1) != net.num_classes
    correct = pred == y
    return float(correct.mean()), float((correct & certified).mean())


def train(dataset: CornerDataset, cfg: TrainConfig, init: Network | None = None):
    """Train a 2-H-2 MinMax net. Returns ``(network, TrainReport)``."""
    x_all = np.asarray(dataset.points, dtype=np.float64)
    y_all = np.asarray(dataset.labels, dtype=int)
    net = init or init_network(cfg)
    params = [[layer.weights.copy(), layer.bias.copy()] for layer, _ in net.layers]
    rng = np.random.default_rng(cfg.seed + 1)
    report = TrainReport(cfg)
    moments = [[(np.zeros_like(p), np.zeros_like(p)) for p in pair] for pair in params]
    step = 0
    for epoch in range(cfg.epochs):
        eps = eps_schedule(epoch, cfg)
        lr = lr_schedule(epoch, cfg)
        order = rng.permutation(len(y_all))
        losses = []
        for start in range(0, len(order), cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            loss, grads = loss_and_grads(net, x_all[idx], y_all[idx], eps, cfg.lam)
            if not math.isfinite(loss):
                report.network = net
                raise TrainingError("loss is not finite", epoch)
            losses.append(loss)
            step += 1
            for k, (pair, gpair) in enumerate(zip(params, grads)):
                for q in range(2):
                    if cfg.optimizer == "sgd":
                        pair[q] -= lr * gpair[q]
                    else:
                        m1, m2 = moments[k][q]
                        m1 = 0.9 * m1 + 0.1 * gpair[q]
                        m2 = 0.999 * m2 + 0.001 * gpair[q] ** 2
                        moments[k][q] = (m1, m2)
                        mh = m1 / (1 - 0.9 ** step)
                        vh = m2 / (1 - 0.999 ** step)
                        pair[q] -= lr * mh / (np.sqrt(vh) + 1e-7)
            net = _with_params(net, params)
        acc, vra_ = evaluate(net, x_all, y_all, eps)
        report.rows.append({"epoch": epoch, "eps": eps, "lr": lr, "loss": float(np.mean(losses)),
                            "accuracy": acc, "vra": vra_})
    report.network = net
    return net, report
