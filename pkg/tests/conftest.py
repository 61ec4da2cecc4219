import functools

import numpy as np
import pytest

from cornercert.network import Network, make_minimal_corner_net


def random_net(widths, activation="minmax", seed=0, bias=True):
    rng = np.random.default_rng(seed)
    weights = [rng.normal(size=(a, b)) / np.sqrt(a) for a, b in zip(widths[:-1], widths[1:])]
    biases = [rng.normal(scale=0.3, size=b) if bias else np.zeros(b) for b in widths[1:]]
    return Network.from_weights(weights, biases, activation=activation)


def relu_corner_net():
    """ReLU net with f1 - f0 = max(x1, x2) = relu(x1 - x2) + relu(x2) - relu(-x2)."""
    w1 = np.array([[1.0, 0.0, 0.0], [-1.0, 1.0, -1.0]])
    w2 = np.array([[0.0, 1.0], [0.0, 1.0], [0.0, -1.0]])
    return Network.from_weights([w1, w2], activation="relu")


def scaled_corner_net(scale=3.0, shift=0.7):
    """Redundant 2-4-2 MinMax net whose boundary is still max(x1, x2) = 0."""
    w1 = np.array([[1.0, 0.0, 1.0, 0.0], [0.0, 1.0, 0.0, 1.0]])
    w2 = np.array([[0.0, 0.0], [0.0, scale], [0.0, 0.0], [0.0, scale]])
    b2 = np.array([shift, shift])
    return Network.from_weights([w1, w2], [None, b2], activation="minmax")


@pytest.fixture
def minimal():
    return make_minimal_corner_net()


@functools.lru_cache(maxsize=None)
def trained(hidden, seed, n_per_class=5000):
    """Train once per (hidden, seed) per session; acceptance and unit tests share these."""
    from cornercert.datagen import generate
    from cornercert.trainer import TrainConfig, train

    ds = generate(0.5, n_per_class, seed, 2.0)
    net, report = train(ds, TrainConfig(hidden_units=hidden, seed=seed))
    return ds, net, report


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
