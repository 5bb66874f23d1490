"""Parser for dash-separated topology strings such as
``64C3-112C3-MP2-192C3-1064-P``.

Tokens:

* ``XCY``  - convolution with ``X`` filters of size ``Y x Y``
* ``MPZ``  - ``Z x Z`` max-pooling
* ``N``    - fully connected layer with ``N`` neurons
* ``P``    - (last token only) output layer of ``population * classes`` neurons

Without a trailing ``P`` the last fully connected layer is the output
layer and must hold ``population * classes`` neurons. A string ending in
a convolution (e.g. ``32C3``) describes a feature extractor.
"""
from __future__ import annotations

import re

import numpy as np

from .exceptions import TopologyError
from .layers import ConvLayerSpec, FcLayerSpec, MaxPoolSpec, NetworkSpec

_CONV = re.compile(r"^([1-9][0-9]*)C([1-9][0-9]*)$")
_POOL = re.compile(r"^MP([1-9][0-9]*)$")
_FC = re.compile(r"^[1-9][0-9]*$")

VGG9 = "64C3-112C3-MP2-192C3-216C3-MP2-480C3-504C3-560C3-MP2-1064-P"


def parse_topology(
    s: str,
    input_shape=(3, 32, 32),
    population: int = 1,
    classes: int = 10,
    timesteps: int = 2,
) -> NetworkSpec:
    """Build a weightless :class:`NetworkSpec` from a topology string."""
    if not s or not s.strip():
        raise TopologyError("empty topology string")
    tokens = s.strip().split("-")
    layers = []
    shape = tuple(int(v) for v in input_shape)
    if len(shape) != 3 or min(shape) < 1:
        raise TopologyError(f"input shape must be (C, H, W) with positive dims, got {input_shape}")
    conv_i = fc_i = 0
    for pos, tok in enumerate(tokens):
        where = f"token {pos + 1} {tok!r}"
        if m := _CONV.match(tok):
            out, k = int(m.group(1)), int(m.group(2))
            if k % 2 == 0:
                raise TopologyError(f"{where}: even kernel sizes are not supported")
            if fc_i:
                raise TopologyError(f"{where}: convolution after a fully connected layer")
            conv_i += 1
            layers.append(ConvLayerSpec(shape[0], out, k, name=f"conv{conv_i}"))
            shape = (out, shape[1], shape[2])
        elif m := _POOL.match(tok):
            z = int(m.group(1))
            if fc_i:
                raise TopologyError(f"{where}: max-pooling after a fully connected layer")
            if not layers:
                raise TopologyError(f"{where}: max-pooling must follow a convolution")
            if shape[1] % z or shape[2] % z:
                raise TopologyError(f"{where}: {shape[1]}x{shape[2]} map not divisible by {z}")
            layers.append(MaxPoolSpec(z))
            shape = (shape[0], shape[1] // z, shape[2] // z)
        elif _FC.match(tok):
            n = int(tok)
            fc_i += 1
            layers.append(FcLayerSpec(int(np.prod(shape)), n, name=f"fc{fc_i}"))
            shape = (n, 1, 1)
        elif tok == "P":
            if pos != len(tokens) - 1:
                raise TopologyError(f"{where}: population token must be last")
            n = population * classes
            fc_i += 1
            layers.append(FcLayerSpec(int(np.prod(shape)), n, name="out"))
            shape = (n, 1, 1)
        else:
            raise TopologyError(f"{where}: unknown token")
    if not layers or isinstance(layers[0], MaxPoolSpec):
        raise TopologyError("topology must start with a spiking layer")
    return NetworkSpec(
        tuple(layers),
        input_shape=tuple(input_shape),
        timesteps=timesteps,
        population=population,
        classes=classes,
        topology=s.strip(),
    )
