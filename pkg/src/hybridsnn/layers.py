"""Layer and network descriptions consumed by the cores and the oracle."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np

from .exceptions import ShapeError, TopologyError
from .quant import QuantTensor

Weights = Union[np.ndarray, QuantTensor, None]


def _as_real(w: Weights) -> np.ndarray | None:
    if w is None:
        return None
    if isinstance(w, QuantTensor):
        return w.dequantize()
    return np.asarray(w, dtype=np.float64)


@dataclass(frozen=True)
class ConvLayerSpec:
    """Same-padded, stride-1 convolution with ``out_channels`` filters.

    ``weights`` has shape ``(out, in, k, k)`` and may be real or a
    :class:`QuantTensor`; ``bias`` has shape ``(out,)``.
    """

    in_channels: int
    out_channels: int
    kernel: int = 3
    weights: Weights = None
    bias: Weights = None
    name: str = ""

    kind = "conv"

    def __post_init__(self):
        if self.in_channels < 1 or self.out_channels < 1:
            raise ShapeError("channel counts must be positive")
        if self.kernel < 1 or self.kernel % 2 == 0:
            raise ShapeError(f"kernel must be odd, got {self.kernel}")
        want = (self.out_channels, self.in_channels, self.kernel, self.kernel)
        if self.weights is not None and tuple(self.weights.shape) != want:
            raise ShapeError(f"conv weights have shape {tuple(self.weights.shape)}, expected {want}")
        if self.bias is not None and tuple(self.bias.shape) != (self.out_channels,):
            raise ShapeError(f"conv bias has shape {tuple(self.bias.shape)}, expected ({self.out_channels},)")

    @property
    def padding(self) -> int:
        return self.kernel // 2

    @property
    def n_out(self) -> int:
        return self.out_channels

    @property
    def filter_coefficients(self) -> int:
        return self.kernel * self.kernel

    @property
    def is_quantized(self) -> bool:
        return isinstance(self.weights, QuantTensor)

    def real_weights(self) -> np.ndarray:
        if self.weights is None:
            raise ShapeError(f"layer {self.name or 'conv'} has no weights")
        return _as_real(self.weights)

    def real_bias(self) -> np.ndarray:
        b = _as_real(self.bias)
        return np.zeros(self.out_channels) if b is None else b

    def output_shape(self, in_shape: tuple[int, int, int]) -> tuple[int, int, int]:
        C, H, W = in_shape
        if C != self.in_channels:
            raise ShapeError(f"conv expects {self.in_channels} input channels, got {C}")
        return (self.out_channels, H, W)


@dataclass(frozen=True)
class FcLayerSpec:
    """Fully connected layer; ``weights`` has shape ``(out, in)``."""

    in_neurons: int
    out_neurons: int
    weights: Weights = None
    bias: Weights = None
    name: str = ""

    kind = "fc"

    def __post_init__(self):
        if self.in_neurons < 1 or self.out_neurons < 1:
            raise ShapeError("neuron counts must be positive")
        want = (self.out_neurons, self.in_neurons)
        if self.weights is not None and tuple(self.weights.shape) != want:
            raise ShapeError(f"fc weights have shape {tuple(self.weights.shape)}, expected {want}")
        if self.bias is not None and tuple(self.bias.shape) != (self.out_neurons,):
            raise ShapeError(f"fc bias has shape {tuple(self.bias.shape)}, expected ({self.out_neurons},)")

    @property
    def n_out(self) -> int:
        return self.out_neurons

    @property
    def is_quantized(self) -> bool:
        return isinstance(self.weights, QuantTensor)

    def real_weights(self) -> np.ndarray:
        if self.weights is None:
            raise ShapeError(f"layer {self.name or 'fc'} has no weights")
        return _as_real(self.weights)

    def real_bias(self) -> np.ndarray:
        b = _as_real(self.bias)
        return np.zeros(self.out_neurons) if b is None else b

    def output_shape(self, in_shape: tuple[int, int, int]) -> tuple[int, int, int]:
        n = int(np.prod(in_shape))
        if n != self.in_neurons:
            raise ShapeError(f"fc expects {self.in_neurons} inputs, got {n} from shape {in_shape}")
        return (self.out_neurons, 1, 1)


@dataclass(frozen=True)
class MaxPoolSpec:
    size: int

    kind = "maxpool"

    def output_shape(self, in_shape: tuple[int, int, int]) -> tuple[int, int, int]:
        C, H, W = in_shape
        if H % self.size or W % self.size:
            raise ShapeError(f"{H}x{W} map not divisible by pool size {self.size}")
        return (C, H // self.size, W // self.size)


Layer = Union[ConvLayerSpec, FcLayerSpec, MaxPoolSpec]


@dataclass(frozen=True)
class LayerPlan:
    """A spiking layer with its input/output shapes and trailing pools."""

    index: int
    layer: ConvLayerSpec | FcLayerSpec
    in_shape: tuple[int, int, int]
    out_shape: tuple[int, int, int]
    pools: tuple[int, ...] = ()

    @property
    def pooled_shape(self) -> tuple[int, int, int]:
        C, H, W = self.out_shape
        for z in self.pools:
            H, W = H // z, W // z
        return (C, H, W)


@dataclass(frozen=True)
class NetworkSpec:
    """Ordered conv / maxpool / fc layers with the run-time encoding
    parameters. A fully connected last layer is the output population
    layer of ``population * classes`` neurons; a network ending in a
    convolution is a feature extractor and reports per-channel counts."""

    layers: tuple
    input_shape: tuple[int, int, int] = (3, 32, 32)
    timesteps: int = 2
    population: int = 1
    classes: int = 10
    topology: str = ""
    plan: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "input_shape", tuple(int(v) for v in self.input_shape))
        if self.timesteps < 1:
            raise TopologyError(f"timesteps must be >= 1, got {self.timesteps}")
        if self.population < 1 or self.classes < 1:
            raise TopologyError("population and classes must be positive")
        object.__setattr__(self, "plan", tuple(self._build_plan()))

    def _build_plan(self):
        plans = []
        shape = self.input_shape
        pending = None
        seen_fc = False
        for layer in self.layers:
            if isinstance(layer, MaxPoolSpec):
                if pending is None:
                    raise TopologyError("max-pooling must follow a spiking layer")
                if seen_fc:
                    raise TopologyError("max-pooling after a fully connected layer")
                shape = layer.output_shape(shape)
                pending["pools"] = pending["pools"] + (layer.size,)
                continue
            if isinstance(layer, ConvLayerSpec) and seen_fc:
                raise TopologyError("convolution after a fully connected layer")
            if pending is not None:
                plans.append(LayerPlan(**pending))
            try:
                out = layer.output_shape(shape)
            except ShapeError as exc:
                raise TopologyError(str(exc)) from exc
            seen_fc = seen_fc or isinstance(layer, FcLayerSpec)
            pending = dict(index=len(plans), layer=layer, in_shape=shape, out_shape=out, pools=())
            shape = out
        if pending is None:
            raise TopologyError("network has no spiking layers")
        plans.append(LayerPlan(**pending))
        last = plans[-1].layer
        if isinstance(last, FcLayerSpec) and last.n_out != self.population * self.classes:
            raise TopologyError(
                f"output layer has {last.n_out} neurons, expected population*classes = "
                f"{self.population}*{self.classes}"
            )
        return plans

    @property
    def spiking_layers(self) -> list:
        return [p.layer for p in self.plan]

    @property
    def n_spiking(self) -> int:
        return len(self.plan)

    @property
    def n_scores(self) -> int:
        """Number of class scores the output layer produces."""
        n_out = self.plan[-1].layer.n_out
        return self.classes if n_out == self.population * self.classes else n_out

    @property
    def has_weights(self) -> bool:
        return all(layer.weights is not None for layer in self.spiking_layers)

    def with_layers(self, layers) -> "NetworkSpec":
        return replace(self, layers=tuple(layers))

    def with_timesteps(self, timesteps: int) -> "NetworkSpec":
        return replace(self, timesteps=timesteps)

    def dequantized(self) -> "NetworkSpec":
        """Copy of the network with every quantized tensor replaced by its
        real-valued dequantization."""
        new = []
        for layer in self.layers:
            if isinstance(layer, (ConvLayerSpec, FcLayerSpec)):
                layer = replace(layer, weights=_as_real(layer.weights), bias=_as_real(layer.bias))
            new.append(layer)
        return self.with_layers(new)


def random_weights(net: NetworkSpec, rng: np.random.Generator, gain: float = 1.0) -> NetworkSpec:
    """Fill every spiking layer with He-style Gaussian weights and small biases."""
    new = []
    for layer in net.layers:
        if isinstance(layer, ConvLayerSpec):
            fan_in = layer.in_channels * layer.kernel * layer.kernel
            w = rng.normal(0.0, gain * np.sqrt(2.0 / fan_in), size=(layer.out_channels, layer.in_channels, layer.kernel, layer.kernel))
            b = rng.normal(0.0, 0.1, size=layer.out_channels)
            layer = replace(layer, weights=w, bias=b)
        elif isinstance(layer, FcLayerSpec):
            w = rng.normal(0.0, gain * np.sqrt(2.0 / layer.in_neurons), size=(layer.out_neurons, layer.in_neurons))
            b = rng.normal(0.0, 0.1, size=layer.out_neurons)
            layer = replace(layer, weights=w, bias=b)
        new.append(layer)
    return net.with_layers(new)
