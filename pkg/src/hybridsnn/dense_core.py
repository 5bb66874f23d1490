"""Weight-stationary dense core for the direct-coded input layer.

A column of 27 PEs holds one filter (3 input channels x 3x3 taps). Each
PE row works on one output channel at a time; partial sums move through
the row's PEs in :func:`tap_offsets` order, so every output potential is
the sum of its 27 products in that order. Rows tile over the output
channels and run all timesteps of a channel before moving on.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError, ShapeError
from .layers import ConvLayerSpec
from .neuron import LifParams, lif_plane_step
from .spikes import SpikeTrain

PE_PER_ROW = 27


@dataclass(frozen=True)
class DenseCoreConfig:
    rows: int = 1
    pe_per_row: int = PE_PER_ROW
    pipeline_fill: int = 27
    tile_switch_overhead: int = 0
    clock_hz: float = 100e6

    def __post_init__(self):
        if self.rows < 1:
            raise DomainError(f"rows must be >= 1, got {self.rows}")
        if self.pe_per_row != PE_PER_ROW:
            raise DomainError(f"the dense core has exactly {PE_PER_ROW} PEs per row")
        if self.pipeline_fill < 0 or self.tile_switch_overhead < 0:
            raise DomainError("cycle constants must be non-negative")
        if self.clock_hz <= 0:
            raise DomainError("clock_hz must be positive")


def tap_offsets(kernel: int = 3, in_channels: int = 3) -> list[tuple[int, int, int]]:
    """PE order of the 27 ``(channel, dy, dx)`` taps: channel-major, then
    row-major over the kernel window."""
    if kernel != 3 or in_channels != 3:
        raise ShapeError(
            f"dense core supports 3 input channels with 3x3 kernels, got {in_channels} / {kernel}x{kernel}"
        )
    r = kernel // 2
    return [
        (c, dy, dx)
        for c in range(in_channels)
        for dy in range(-r, r + 1)
        for dx in range(-r, r + 1)
    ]


def dense_cycles(out_channels: int, H: int, W: int, T: int, cfg: DenseCoreConfig) -> int:
    """``T * ceil(C_out / rows) * (H * W + fill)`` plus any tile-switch overhead."""
    passes = -(-out_channels // cfg.rows)
    return T * passes * (H * W + cfg.pipeline_fill) + max(passes - 1, 0) * cfg.tile_switch_overhead


@dataclass
class DenseResult:
    spikes: SpikeTrain
    cycles: int
    preactivations: np.ndarray
    """Accumulated PE-column output per ``(timestep, channel, row, col)``,
    before bias and leak."""


def simulate_dense(layer: ConvLayerSpec, image, T: int, cfg: DenseCoreConfig = DenseCoreConfig(),
                   params: LifParams = LifParams()) -> DenseResult:
    """Run the input layer on the dense core.

    The same real-valued image is presented at every timestep.
    """
    if T < 1:
        raise DomainError(f"T must be >= 1, got {T}")
    taps = tap_offsets(layer.kernel, layer.in_channels)
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3 or image.shape[0] != layer.in_channels:
        raise ShapeError(f"image shape {image.shape} does not match {layer.in_channels} input channels")
    C, H, W = image.shape
    if H < layer.kernel or W < layer.kernel:
        raise ShapeError(f"image {H}x{W} smaller than kernel {layer.kernel}")
    if not np.all(np.isfinite(image)):
        raise DomainError("image must be finite")

    w = layer.real_weights()
    bias = layer.real_bias()
    p = layer.padding
    # image buffer with a zero border: out-of-bounds taps read 0
    buf = np.zeros((C, H + 2 * p, W + 2 * p))
    buf[:, p:p + H, p:p + W] = image

    spikes = np.zeros((T, layer.out_channels, H, W), dtype=bool)
    pre = np.zeros((T, layer.out_channels, H, W))
    for start in range(0, layer.out_channels, cfg.rows):
        chans = np.arange(start, min(start + cfg.rows, layer.out_channels))
        # rst: membranes cleared when the rows move to new output channels
        u = np.zeros((chans.size, H, W))
        col_w = w[chans]
        for t in range(T):
            psum = np.zeros((chans.size, H, W))
            for c, dy, dx in taps:
                pixels = buf[c, p + dy:p + dy + H, p + dx:p + dx + W]
                psum += col_w[:, c, dy + p, dx + p][:, None, None] * pixels[None]
            pre[t, chans] = psum
            u, s = lif_plane_step(u, psum, bias[chans][:, None, None], params)
            spikes[t, chans] = s
    cycles = dense_cycles(layer.out_channels, H, W, T, cfg)
    return DenseResult(SpikeTrain(spikes), cycles, pre)


def dense_throughput(cycles: int, clock_hz: float) -> float:
    """Seconds taken by ``cycles`` at ``clock_hz``."""
    if clock_hz <= 0:
        raise DomainError("clock_hz must be positive")
    return cycles / clock_hz
