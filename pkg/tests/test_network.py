import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cornercert.network import (
    Activation,
    DenseLayer,
    InputShapeError,
    Network,
    activation_jacobian,
    forward,
    input_gradient,
    load_network,
    make_minimal_corner_net,
    margin,
    minmax,
    predict,
    save_network,
)

from conftest import random_net

finite = st.floats(-5, 5, allow_nan=False, allow_infinity=False)


def chain_by_hand(weights, biases, acts, x):
    """Layer-by-layer evaluation with explicit loops, no shared code."""
    h = list(x)
    for w, b, act in zip(weights, biases, acts):
        z = [sum(h[r] * w[r][c] for r in range(len(h))) + b[c] for c in range(len(b))]
        if act == "relu":
            z = [max(v, 0.0) for v in z]
        elif act == "minmax":
            z = [f(z[k - k % 2], z[k - k % 2 + 1]) for k in range(len(z))
                 for f in [(min if k % 2 == 0 else max)]]
        h = z
    return np.array(h)


def test_minimal_forward_examples(minimal):
    assert forward(minimal, [0.3, -0.2]).tolist() == [0.0, 0.3]
    assert forward(minimal, [0.0, 0.0]).tolist() == [0.0, 0.0]


def test_minimal_forward_is_zero_and_max(minimal):
    x = np.random.default_rng(1).uniform(-3, 3, size=(1000, 2))
    out = forward(minimal, x)
    assert np.array_equal(out[:, 0], np.zeros(1000))
    assert np.array_equal(out[:, 1], x.max(axis=1))


def test_random_relu_net_matches_hand_chain():
    net = random_net([2, 16, 2], "relu", seed=4)
    ws = [layer.weights.tolist() for layer, _ in net.layers]
    bs = [layer.bias.tolist() for layer, _ in net.layers]
    acts = [a.value for _, a in net.layers]
    for x in np.random.default_rng(5).normal(size=(20, 2)):
        np.testing.assert_allclose(forward(net, x), chain_by_hand(ws, bs, acts, x), rtol=1e-13, atol=1e-13)


def test_random_minmax_net_matches_hand_chain():
    net = random_net([2, 8, 6, 3], "minmax", seed=6)
    ws = [layer.weights.tolist() for layer, _ in net.layers]
    bs = [layer.bias.tolist() for layer, _ in net.layers]
    acts = [a.value for _, a in net.layers]
    for x in np.random.default_rng(7).normal(size=(20, 2)):
        np.testing.assert_allclose(forward(net, x), chain_by_hand(ws, bs, acts, x), rtol=1e-13, atol=1e-13)


@pytest.mark.parametrize("x,label", [((0.3, -0.2), 1), ((-0.5, -0.5), 0), ((0.0, 0.0), 0)])
def test_predict_examples(minimal, x, label):
    assert predict(minimal, x) == label


@pytest.mark.parametrize("x,m", [((0.3, -0.2), 0.3), ((-0.7, -0.8), 0.7), ((0.0, -0.3), 0.0)])
def test_margin_examples(minimal, x, m):
    assert margin(minimal, x) == pytest.approx(m, abs=1e-15)


def test_input_gradient_examples(minimal):
    g = input_gradient(minimal, [0.3, -0.2], [-1, 1])
    assert g.tolist() == [1.0, 0.0]
    assert np.linalg.norm(g) == 1.0
    assert input_gradient(minimal, [-0.2, 0.3], [-1, 1]).tolist() == [0.0, 1.0]


def _fd_check(net, n_points=100, seed=0, h=1e-6):
    rng = np.random.default_rng(seed)
    checked = 0
    worst = 0.0
    while checked < n_points:
        x = rng.uniform(-2, 2, size=net.input_dim)
        v = rng.normal(size=net.num_classes)
        g = input_gradient(net, x, v)
        fd = np.empty_like(x)
        for k in range(len(x)):
            e = np.zeros_like(x)
            e[k] = h
            fd[k] = (forward(net, x + e) @ v - forward(net, x - e) @ v) / (2 * h)
        # skip points whose stencil straddles a kink
        same = all(np.allclose(input_gradient(net, x + s * h * np.eye(len(x))[k], v), g, rtol=1e-12, atol=1e-12)
                   for k in range(len(x)) for s in (-1, 1))
        if not same:
            continue
        checked += 1
        worst = max(worst, np.linalg.norm(fd - g) / max(np.linalg.norm(g), 1e-12))
    return worst


@pytest.mark.parametrize("widths,act", [([2, 20, 2], "minmax"), ([2, 16, 2], "relu"),
                                        ([2, 8, 8, 3], "minmax")])
def test_input_gradient_matches_finite_differences(widths, act):
    assert _fd_check(random_net(widths, act, seed=11)) <= 1e-4


@settings(max_examples=200, deadline=None)
@given(st.lists(finite, min_size=6, max_size=6), st.lists(finite, min_size=6, max_size=6))
def test_minmax_jacobian_is_norm_preserving(z, u):
    z, u = np.array(z), np.array(u)
    J = activation_jacobian(Activation.MINMAX, z)
    # a permutation matrix
    assert np.array_equal(np.sort(J.sum(axis=0)), np.ones(6))
    assert np.array_equal(np.sort(J.sum(axis=1)), np.ones(6))
    assert np.linalg.norm(J @ u) == pytest.approx(np.linalg.norm(u), rel=1e-14)
    assert np.array_equal(minmax(z), J @ z)


@settings(max_examples=100, deadline=None)
@given(st.lists(finite, min_size=2, max_size=2))
def test_predict_is_argmax_of_forward(x):
    net = random_net([2, 6, 3], "minmax", seed=2)
    logits = forward(net, x)
    assert predict(net, x) == int(np.argmax(logits))
    assert margin(net, x) >= 0


def test_margin_vanishes_on_bisected_boundary():
    net = random_net([2, 20, 2], "minmax", seed=3)
    rng = np.random.default_rng(0)
    found = 0
    for _ in range(200):
        a, b = rng.uniform(-3, 3, size=(2, 2))
        if predict(net, a) == predict(net, b):
            continue
        la = predict(net, a)
        for _ in range(200):
            mid = 0.5 * (a + b)
            if np.array_equal(mid, a) or np.array_equal(mid, b):
                break
            if predict(net, mid) == la:
                a = mid
            else:
                b = mid
        scale = np.abs(forward(net, a)).max() + 1.0
        assert margin(net, a) <= 1e-13 * scale
        assert margin(net, b) <= 1e-13 * scale
        found += 1
    assert found > 10


def test_margin_exactly_zero_on_corner_boundary(minimal):
    for t in np.linspace(-2, 0, 21):
        assert margin(minimal, [0.0, t]) == 0.0
        assert margin(minimal, [t, 0.0]) == 0.0


def test_input_shape_error(minimal):
    with pytest.raises(InputShapeError):
        forward(minimal, [1.0, 2.0, 3.0])


def test_network_validation():
    with pytest.raises(ValueError):
        Network.from_weights([np.ones((2, 3)), np.ones((3, 2))], activation="minmax")
    with pytest.raises(ValueError):
        Network.from_weights([np.ones((2, 4)), np.ones((3, 2))])
    with pytest.raises(ValueError):
        DenseLayer(np.array([[np.nan]]))
    with pytest.raises(ValueError):
        Network(((DenseLayer(np.eye(2)), Activation.RELU),), 2, 2)


def test_json_round_trip(tmp_path):
    net = random_net([2, 6, 2], "relu", seed=8)
    path = tmp_path / "net.json"
    save_network(net, path)
    doc = json.loads(path.read_text())
    assert set(doc) == {"input_dim", "num_classes", "layers"}
    assert doc["layers"][0]["activation"] == "relu"
    assert doc["layers"][-1]["activation"] == "identity"
    back = load_network(path)
    x = np.random.default_rng(0).normal(size=(10, 2))
    assert np.array_equal(forward(back, x), forward(net, x))


def test_minimal_net_weights():
    net = make_minimal_corner_net()
    assert net.layers[0][0].weights.tolist() == [[1, 0], [0, 1]]
    assert net.layers[1][0].weights.tolist() == [[0, 0], [0, 1]]
    assert not net.layers[0][0].bias.any() and not net.layers[1][0].bias.any()
    assert net.layers[0][1] is Activation.MINMAX
