"""Reference forward pass with no hardware structure.

Convolutions and fully connected products are evaluated densely, tap by
tap, in a fixed channel-major then row-major order so results can be
compared bit-for-bit with the core simulators.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError, ShapeError
from .layers import ConvLayerSpec, FcLayerSpec, NetworkSpec
from .neuron import LifParams, lif_plane_step
from .spikes import SpikeTrain


def reference_conv(x, layer: ConvLayerSpec, include_bias: bool = True) -> np.ndarray:
    """Same-padded stride-1 convolution of a ``C x H x W`` tensor.

    Products are summed per output element in order: input channel,
    kernel row, kernel column. The bias is added last.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3 or x.shape[0] != layer.in_channels:
        raise ShapeError(f"input shape {x.shape} does not match {layer.in_channels} input channels")
    w = layer.real_weights()
    k, p = layer.kernel, layer.padding
    C, H, W = x.shape
    padded = np.zeros((C, H + 2 * p, W + 2 * p))
    padded[:, p:p + H, p:p + W] = x
    out = np.zeros((layer.out_channels, H, W))
    for ci in range(C):
        for ky in range(k):
            for kx in range(k):
                tap = w[:, ci, ky, kx][:, None, None]
                out += tap * padded[ci, ky:ky + H, kx:kx + W][None, :, :]
    if include_bias:
        out = out + layer.real_bias()[:, None, None]
    return out


def reference_fc(x, layer: FcLayerSpec, include_bias: bool = True) -> np.ndarray:
    """Dense product ``W @ x`` accumulated input by input, ascending."""
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size != layer.in_neurons:
        raise ShapeError(f"fc expects {layer.in_neurons} inputs, got {x.size}")
    wt = np.ascontiguousarray(layer.real_weights().T)
    out = np.zeros(layer.out_neurons)
    for i in range(x.size):
        out += wt[i] * x[i]
    if include_bias:
        out = out + layer.real_bias()
    return out


def reference_pool(bits: np.ndarray, z: int) -> np.ndarray:
    """Max-pool a ``(..., H, W)`` binary array with ``z x z`` windows."""
    *lead, H, W = bits.shape
    if H % z or W % z:
        raise ShapeError(f"{H}x{W} not divisible by {z}")
    v = bits.reshape(*lead, H // z, z, W // z, z).astype(np.uint8)
    return v.max(axis=(-3, -1)).astype(bool)


@dataclass
class ForwardResult:
    trains: list
    """Per spiking layer output :class:`SpikeTrain` (before pooling)."""
    output_counts: np.ndarray
    """Spike count of each output neuron (or output channel) summed over
    timesteps."""
    class_scores: np.ndarray
    prediction: int
    inputs: list
    """Per spiking layer input (a real image or a pooled :class:`SpikeTrain`)."""

    @property
    def spike_counts(self) -> list[int]:
        return [t.total_spikes for t in self.trains]


def population_scores(counts: np.ndarray, population: int, classes: int) -> np.ndarray:
    """Sum output spike counts over each class's block of ``population`` neurons."""
    counts = np.asarray(counts)
    if counts.size != population * classes:
        raise ShapeError(f"{counts.size} output neurons, expected {population}*{classes}")
    return counts.reshape(classes, population).sum(axis=1)


def output_scores(net: NetworkSpec, last: SpikeTrain) -> tuple[np.ndarray, np.ndarray]:
    """Output spike counts and class scores from the last layer's train.

    Counts are per neuron, or per channel when the network ends in a
    convolution. Scores group the counts into ``population``-sized blocks
    when they cover ``population * classes`` outputs; otherwise each
    output channel scores as its own class.
    """
    counts = last.bits.sum(axis=(0, 2, 3))
    if counts.size == net.population * net.classes:
        return counts, population_scores(counts, net.population, net.classes)
    return counts, counts.copy()


def reference_forward(net: NetworkSpec, image, params: LifParams) -> ForwardResult:
    """Evaluate ``net`` timestep by timestep.

    ``image`` is either a real ``C x H x W`` tensor, presented unchanged at
    every timestep, or a :class:`SpikeTrain` of pre-encoded input spikes.
    """
    T = net.timesteps
    if isinstance(image, SpikeTrain):
        if image.shape[1:] != net.input_shape or image.T != T:
            raise ShapeError(f"input train {image.shape} does not match network input {net.input_shape} x T={T}")
        frames = [image.bits[t].astype(np.float64) for t in range(T)]
    else:
        image = np.asarray(image, dtype=np.float64)
        if image.shape != net.input_shape:
            raise ShapeError(f"image shape {image.shape} does not match network input {net.input_shape}")
        if not np.all(np.isfinite(image)):
            raise DomainError("image must be finite")
        frames = [image] * T

    trains, inputs = [], []
    current_in = image
    for plan in net.plan:
        layer = plan.layer
        inputs.append(current_in)
        u = np.zeros(plan.out_shape)
        out = np.zeros((T,) + plan.out_shape, dtype=bool)
        for t in range(T):
            if isinstance(layer, ConvLayerSpec):
                current = reference_conv(frames[t], layer)
            else:
                current = reference_fc(frames[t], layer).reshape(plan.out_shape)
            u, s = lif_plane_step(u, current, 0.0, params)
            out[t] = s
        train = SpikeTrain(out)
        trains.append(train)
        pooled = out
        for z in plan.pools:
            pooled = reference_pool(pooled, z)
        current_in = SpikeTrain(pooled) if plan.pools else train
        frames = [pooled[t].astype(np.float64) for t in range(T)]

    counts, scores = output_scores(net, trains[-1])
    return ForwardResult(trains, counts, scores, int(np.argmax(scores)), inputs)


def rate_encode(image, T: int, seed) -> SpikeTrain:
    """Bernoulli rate coding: each pixel spikes with probability equal to
    its intensity at every timestep, drawn from ``default_rng(seed)``."""
    image = np.asarray(image, dtype=np.float64)
    if T < 1:
        raise DomainError(f"T must be >= 1, got {T}")
    if image.ndim != 3:
        raise ShapeError(f"expected a C x H x W image, got shape {image.shape}")
    if not np.all(np.isfinite(image)) or image.min(initial=0.0) < 0.0 or image.max(initial=0.0) > 1.0:
        raise DomainError("rate coding needs intensities in [0, 1]")
    rng = np.random.default_rng(seed)
    return SpikeTrain(rng.random((T,) + image.shape) < image)
