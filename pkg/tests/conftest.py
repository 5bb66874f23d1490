import sys
from dataclasses import replace

import numpy as np
import pytest

from hybridsnn.layers import ConvLayerSpec, FcLayerSpec, random_weights
from hybridsnn.quant import quantize_tensor
from hybridsnn.topology import parse_topology


def random_topology(rng, max_spiking=4, max_ch=8, max_hw=16, dense_first=False):
    """Topology string with 1..max_spiking spiking layers ending in P.

    ``dense_first`` forces a 3x3 first convolution the dense core can run.
    """
    n_spiking = int(rng.integers(2 if dense_first else 1, max_spiking + 1))
    n_conv = min(int(rng.integers(1, n_spiking + 1)), n_spiking - 1)
    hw = int(rng.choice([s for s in (4, 6, 8, 12, 16) if s <= max_hw]))
    tokens, size = [], hw
    for i in range(n_conv):
        k = 3 if dense_first and i == 0 else int(rng.choice([1, 3, 3, 3, 5]))
        tokens.append(f"{int(rng.integers(1, max_ch + 1))}C{k}")
        if size % 2 == 0 and size > 2 and rng.random() < 0.4:
            tokens.append("MP2")
            size //= 2
    for _ in range(n_spiking - n_conv - 1):
        tokens.append(str(int(rng.integers(2, 17))))
    tokens.append("P")
    return "-".join(tokens), hw


def random_network(seed, quantized=False, max_t=4, coding=None):
    """Seeded random network, input image and coding.

    Direct-coded networks start with a 3-channel 3x3 convolution for the
    dense core; rate-coded ones run every layer on sparse cores.
    """
    rng = np.random.default_rng(seed)
    if coding is None:
        coding = "direct" if rng.random() < 0.6 else "rate"
    topo, hw = random_topology(rng, dense_first=coding == "direct")
    c_in = 3 if coding == "direct" else int(rng.integers(1, 4))
    population, classes = int(rng.integers(1, 4)), int(rng.integers(2, 5))
    T = int(rng.integers(1, max_t + 1))
    net = parse_topology(topo, input_shape=(c_in, hw, hw), population=population, classes=classes, timesteps=T)
    net = random_weights(net, rng, gain=float(rng.uniform(0.8, 3.0)))
    if quantized:
        net = quantize_network(net)
    image = rng.random((c_in, hw, hw))
    return net, image, coding


def quantize_network(net, bit_width=4):
    layers = []
    for layer in net.layers:
        if isinstance(layer, (ConvLayerSpec, FcLayerSpec)):
            layer = replace(layer, weights=quantize_tensor(layer.weights, bit_width))
        layers.append(layer)
    return net.with_layers(layers)


# --- pure python reference, one neuron at a time -------------------------

def naive_lif(u, current, beta, theta):
    v = beta * u + current
    if v > theta:
        return v - theta, True
    return v, False


def naive_forward(net, frames, beta=0.15, theta=0.5):
    """Nested-loop forward pass. ``frames`` is a list of T input tensors
    (C, H, W). Returns per-layer bool arrays (T, C, H, W) before pooling."""
    T = net.timesteps
    out_trains = []
    for plan in net.plan:
        layer = plan.layer
        w, b = layer.real_weights(), layer.real_bias()
        C_out, Ho, Wo = plan.out_shape
        u = np.zeros(plan.out_shape)
        out = np.zeros((T,) + plan.out_shape, dtype=bool)
        for t in range(T):
            x = frames[t]
            if isinstance(layer, ConvLayerSpec):
                C, H, W = x.shape
                k, p = layer.kernel, layer.kernel // 2
                for co in range(C_out):
                    for r in range(H):
                        for c in range(W):
                            acc = 0.0
                            for ci in range(C):
                                for ky in range(k):
                                    for kx in range(k):
                                        rr, cc = r + ky - p, c + kx - p
                                        if 0 <= rr < H and 0 <= cc < W and x[ci, rr, cc] != 0:
                                            acc = acc + w[co, ci, ky, kx] * x[ci, rr, cc]
                            u[co, r, c], out[t, co, r, c] = naive_lif(u[co, r, c], acc + b[co], beta, theta)
            else:
                flat = x.ravel()
                for n in range(layer.out_neurons):
                    acc = 0.0
                    for i in range(flat.size):
                        if flat[i] != 0:
                            acc = acc + w[n, i] * flat[i]
                    u[n, 0, 0], out[t, n, 0, 0] = naive_lif(u[n, 0, 0], acc + b[n], beta, theta)
        out_trains.append(out)
        pooled = out
        for z in plan.pools:
            Tn, Cn, Hn, Wn = pooled.shape
            pooled = pooled.reshape(Tn, Cn, Hn // z, z, Wn // z, z).any(axis=(3, 5))
        frames = [pooled[t].astype(np.float64) for t in range(T)]
    return out_trains


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def toy_net():
    """Three spiking layers with eight outputs each."""
    rng = np.random.default_rng(7)
    net = parse_topology("8C3-MP2-8C3-P", input_shape=(3, 8, 8), population=4, classes=2, timesteps=3)
    return random_weights(net, rng, gain=2.0), rng.random((3, 8, 8))


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    lines = getattr(acceptance, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
