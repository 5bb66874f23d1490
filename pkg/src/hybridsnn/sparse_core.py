"""Event-driven sparse core: spike compression, update-address generation,
per-neural-core accumulation, the spiking phase and OR max-pooling.

Each input plane is scanned in ``n``-bit chunks by a priority encoder that
emits one set-bit address per cycle. For every event the address generator
lists the output neurons it touches and the kernel tap that connects
them. Neural cores (NCs) own strided subsets of output channels and update
one neuron per cycle. Compression of the next plane runs alongside the
accumulation of the current one.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Union

import numpy as np

from .exceptions import DomainError, ShapeError
from .layers import ConvLayerSpec, FcLayerSpec
from .neuron import LifParams, lif_plane_step
from .quant import QuantParams, dequantize
from .spikes import MemRegionStats, SpikeTrain, gated_access

CHUNK_WIDTHS = (8, 16, 32, 64)


class SpikeEvent(NamedTuple):
    row: int
    col: int


@dataclass(frozen=True)
class SparseLayerConfig:
    """Resources of one sparse core: ``nc_count`` NCs and an ``chunk_bits``
    wide compressor. ``overlap`` lets compression hide behind accumulation."""

    layer: Union[ConvLayerSpec, FcLayerSpec]
    nc_count: int = 1
    chunk_bits: int = 64
    overlap: bool = True

    def __post_init__(self):
        if self.chunk_bits not in CHUNK_WIDTHS:
            raise DomainError(f"chunk_bits must be one of {CHUNK_WIDTHS}, got {self.chunk_bits}")
        if not 1 <= self.nc_count <= self.layer.n_out:
            raise DomainError(
                f"nc_count must lie in [1, {self.layer.n_out}] for this layer, got {self.nc_count}"
            )


# --- compression -----------------------------------------------------------

def chunk_popcounts(plane, chunk_bits: int) -> np.ndarray:
    """Set bits per ``chunk_bits``-wide chunk of the row-major flattened plane."""
    flat = np.asarray(plane, dtype=bool).ravel()
    n_chunks = max(1, -(-flat.size // chunk_bits))
    padded = np.zeros(n_chunks * chunk_bits, dtype=bool)
    padded[: flat.size] = flat
    return padded.reshape(n_chunks, chunk_bits).sum(axis=1)


def compress_cycles(plane, chunk_bits: int) -> int:
    """One cycle per extracted event, one scan cycle for an empty chunk."""
    return int(np.maximum(chunk_popcounts(plane, chunk_bits), 1).sum())


def compress(plane, chunk_bits: int = 64) -> tuple[list[SpikeEvent], int]:
    """Turn a bit plane into its list of spike events.

    Events come out in chunk order and, within a chunk, lowest bit first,
    which is row-major order over the plane.
    """
    if chunk_bits not in CHUNK_WIDTHS:
        raise DomainError(f"chunk_bits must be one of {CHUNK_WIDTHS}, got {chunk_bits}")
    plane = np.asarray(plane, dtype=bool)
    if plane.ndim == 1:
        plane = plane[None, :]
    W = plane.shape[1]
    events = [SpikeEvent(int(i // W), int(i % W)) for i in np.flatnonzero(plane)]
    return events, compress_cycles(plane, chunk_bits)


def scatter_events(events, H: int, W: int) -> np.ndarray:
    plane = np.zeros((H, W), dtype=bool)
    for ev in events:
        plane[ev.row, ev.col] = True
    return plane


# --- address generation ----------------------------------------------------

def gen_update_addresses(event: SpikeEvent, kernel: int, out_dims: tuple[int, int]):
    """Output neurons reached by an input spike, with the kernel tap used.

    For a spike at ``(r, c)`` the neurons are ``(r + dy, c + dx)`` with
    ``|dy|, |dx| <= kernel // 2``, clipped to the map, each paired with
    tap ``(p - dy, p - dx)``. Pairs come in row-major neuron order.
    """
    H, W = out_dims
    r, c = event
    if not (0 <= r < H and 0 <= c < W):
        raise DomainError(f"event {tuple(event)} outside {H}x{W} map")
    p = kernel // 2
    pairs = []
    for dy in range(-p, p + 1):
        rr = r + dy
        if not 0 <= rr < H:
            continue
        for dx in range(-p, p + 1):
            cc = c + dx
            if 0 <= cc < W:
                pairs.append(((rr, cc), (p - dy, p - dx)))
    return pairs


def update_count(rows: np.ndarray, cols: np.ndarray, kernel: int, H: int, W: int) -> int:
    """Total ``len(gen_update_addresses(e))`` over events given as arrays."""
    if rows.size == 0:
        return 0
    p = kernel // 2
    span_r = np.minimum(rows + p, H - 1) - np.maximum(rows - p, 0) + 1
    span_c = np.minimum(cols + p, W - 1) - np.maximum(cols - p, 0) + 1
    return int((span_r * span_c).sum())


def nc_channels(offset: int, N: int, out_channels: int) -> list[int]:
    """Output channels handled by the NC at ``offset``: ``offset, offset + N, ...``."""
    if N < 1:
        raise DomainError(f"N must be >= 1, got {N}")
    if not 0 <= offset < N:
        raise DomainError(f"offset {offset} out of range for N={N}")
    return list(range(offset, out_channels, N))


# --- pooling ---------------------------------------------------------------

def maxpool_spikes(plane, Z: int) -> np.ndarray:
    """OR over each non-overlapping ``Z x Z`` window."""
    plane = np.asarray(plane, dtype=bool)
    H, W = plane.shape[-2:]
    if Z < 1 or H % Z or W % Z:
        raise ShapeError(f"{H}x{W} plane not divisible by pool size {Z}")
    lead = plane.shape[:-2]
    windows = plane.reshape(*lead, H // Z, Z, W // Z, Z)
    return np.logical_or.reduce(np.logical_or.reduce(windows, axis=-1), axis=-2)


def maxpool_train(train: SpikeTrain, Z: int) -> SpikeTrain:
    return SpikeTrain(maxpool_spikes(train.bits, Z))


# --- simulation ------------------------------------------------------------

@dataclass
class SparseStats:
    input_plane_spikes: np.ndarray
    """Spikes per input plane, in storage order."""
    compression_cycles: int
    accumulation_cycles: list[int]
    """Per NC: one cycle per neuron update."""
    activation_cycles: list[int]
    nc_cycles: list[int]
    """Per NC: total busy cycles including any un-hidden compression."""
    compress_stall_cycles: list[int]
    input_ram: MemRegionStats = field(default_factory=MemRegionStats)
    output_ram: MemRegionStats = field(default_factory=MemRegionStats)
    membrane_updates: int = 0

    @property
    def input_spikes(self) -> int:
        return int(self.input_plane_spikes.sum())

    def to_dict(self) -> dict:
        return {
            "input_spikes": self.input_spikes,
            "compression_cycles": self.compression_cycles,
            "accumulation_cycles": list(self.accumulation_cycles),
            "activation_cycles": list(self.activation_cycles),
            "nc_cycles": list(self.nc_cycles),
            "compress_stall_cycles": list(self.compress_stall_cycles),
            "membrane_updates": self.membrane_updates,
            "input_ram": self.input_ram.to_dict(),
            "output_ram": self.output_ram.to_dict(),
        }


@dataclass
class SparseResult:
    spikes: SpikeTrain
    cycles: int
    stats: SparseStats
    membrane: np.ndarray | None = None
    counts: np.ndarray | None = None


def _layer_params(layer, quant: QuantParams | None):
    if quant is not None:
        w = dequantize(np.asarray(layer.weights), quant)
        b = layer.real_bias()
    else:
        w = layer.real_weights()
        b = layer.real_bias()
    return w, b


def _even(n: int) -> int:
    return max(2, n + (n % 2))


def _schedule(update_per_plane, comp_per_plane, groups, act_per_channel, overlap):
    """Per-NC cycle totals given per-plane update and compression counts."""
    acc, act, total, stall = [], [], [], []
    for chans in groups:
        a = update_per_plane * len(chans)
        if overlap:
            busy = np.maximum(a, comp_per_plane)
        else:
            busy = a + comp_per_plane
        acc.append(int(a.sum()))
        act.append(act_per_channel * len(chans))
        stall.append(int((busy - a).sum()))
        total.append(int(busy.sum()) + act_per_channel * len(chans))
    return acc, act, total, stall


def _run_ncs(fn, groups, n_jobs):
    if n_jobs and n_jobs > 1 and len(groups) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            list(pool.map(fn, groups))
    else:
        for g in groups:
            fn(g)


def simulate_sparse_conv(cfg: SparseLayerConfig, inp: SpikeTrain, params: LifParams = LifParams(),
                         quant: QuantParams | None = None, n_jobs: int | None = None) -> SparseResult:
    """Event-driven simulation of a same-padded stride-1 convolution.

    Every NC accumulates its channels' input currents plane by plane
    (input channel ascending, events in compression order) and then runs
    the spiking phase, one neuron per cycle. ``quant`` dequantizes integer
    codes held in ``layer.weights``.
    """
    layer = cfg.layer
    if not isinstance(layer, ConvLayerSpec):
        raise ShapeError("simulate_sparse_conv needs a ConvLayerSpec")
    T, C, H, W = inp.shape
    if C != layer.in_channels:
        raise ShapeError(f"input has {C} channels, layer expects {layer.in_channels}")
    k, p = layer.kernel, layer.padding
    w, bias = _layer_params(layer, quant)
    groups = [np.array(nc_channels(o, cfg.nc_count, layer.out_channels)) for o in range(cfg.nc_count)]

    in_ram = MemRegionStats()
    cap_in = _even(C * T)
    # ECU: compress every plane once; events are broadcast to all NCs
    plane_events = {}
    n_planes = C * T
    updates = np.zeros(n_planes, dtype=np.int64)
    comp = np.zeros(n_planes, dtype=np.int64)
    pops = np.zeros(n_planes, dtype=np.int64)
    for addr, plane in inp.planes():
        gated_access(addr, cap_in, in_ram)
        flat = np.flatnonzero(plane)
        rows, cols = flat // W, flat % W
        comp[addr] = compress_cycles(plane, cfg.chunk_bits)
        updates[addr] = update_count(rows, cols, k, H, W)
        pops[addr] = flat.size
        taps = []
        if flat.size:
            for ky in range(k):
                for kx in range(k):
                    tr, tc = rows + (p - ky), cols + (p - kx)
                    ok = (tr >= 0) & (tr < H) & (tc >= 0) & (tc < W)
                    if ok.any():
                        taps.append((ky, kx, tr[ok], tc[ok]))
        plane_events[addr] = taps

    out = np.zeros((T, layer.out_channels, H, W), dtype=bool)

    def run_nc(chans):
        if chans.size == 0:
            return
        wc = w[chans]
        bc = bias[chans][:, None, None]
        u = np.zeros((chans.size, H, W))
        for t in range(T):
            acc = np.zeros((chans.size, H, W))
            for ci in range(C):
                for ky, kx, tr, tc in plane_events[ci * T + t]:
                    acc[:, tr, tc] += wc[:, ci, ky, kx][:, None]
            u, s = lif_plane_step(u, acc, bc, params)
            out[t, chans] = s

    _run_ncs(run_nc, groups, n_jobs)

    out_ram = MemRegionStats()
    cap_out = _even(layer.out_channels * T)
    for addr in range(layer.out_channels * T):
        gated_access(addr, cap_out, out_ram, write=True)

    acc_c, act_c, total_c, stall_c = _schedule(updates, comp, groups, T * H * W, cfg.overlap)
    stats = SparseStats(
        input_plane_spikes=pops,
        compression_cycles=int(comp.sum()),
        accumulation_cycles=acc_c,
        activation_cycles=act_c,
        nc_cycles=total_c,
        compress_stall_cycles=stall_c,
        input_ram=in_ram,
        output_ram=out_ram,
        membrane_updates=int(updates.sum()) * layer.out_channels,
    )
    return SparseResult(SpikeTrain(out), max(total_c), stats)


def simulate_sparse_fc(cfg: SparseLayerConfig, inp: SpikeTrain, params: LifParams = LifParams(),
                       quant: QuantParams | None = None, n_jobs: int | None = None) -> SparseResult:
    """Event-driven fully connected layer.

    Each timestep's input is flattened (channel, row, col) and compressed;
    every event adds its weight column to all of the NC's neurons. The
    result carries the output spike train ``(T, out, 1, 1)``, per-neuron
    spike counts over all timesteps and the final membrane potentials.
    """
    layer = cfg.layer
    if not isinstance(layer, FcLayerSpec):
        raise ShapeError("simulate_sparse_fc needs an FcLayerSpec")
    T = inp.T
    n_in = inp.C * inp.H * inp.W
    if n_in != layer.in_neurons:
        raise ShapeError(f"flattened input has {n_in} neurons, layer expects {layer.in_neurons}")
    w, bias = _layer_params(layer, quant)
    wt = np.ascontiguousarray(w.T)
    groups = [np.array(nc_channels(o, cfg.nc_count, layer.out_neurons)) for o in range(cfg.nc_count)]

    in_ram = MemRegionStats()
    cap_in = _even(T)
    events = []
    comp = np.zeros(T, dtype=np.int64)
    pops = np.zeros(T, dtype=np.int64)
    for t in range(T):
        gated_access(t, cap_in, in_ram)
        vec = inp.flatten_timestep(t)
        idx = np.flatnonzero(vec)
        events.append(idx)
        comp[t] = compress_cycles(vec, cfg.chunk_bits)
        pops[t] = idx.size

    out = np.zeros((T, layer.out_neurons), dtype=bool)
    membrane = np.zeros(layer.out_neurons)

    def run_nc(chans):
        if chans.size == 0:
            return
        wc = wt[:, chans]
        u = np.zeros(chans.size)
        for t in range(T):
            acc = np.zeros(chans.size)
            for i in events[t]:
                acc += wc[i]
            u, s = lif_plane_step(u, acc, bias[chans], params)
            out[t, chans] = s
        membrane[chans] = u

    _run_ncs(run_nc, groups, n_jobs)

    out_ram = MemRegionStats()
    cap_out = _even(layer.out_neurons * T)
    for addr in range(layer.out_neurons * T):
        gated_access(addr, cap_out, out_ram, write=True)

    acc_c, act_c, total_c, stall_c = _schedule(pops, comp, groups, T, cfg.overlap)
    stats = SparseStats(
        input_plane_spikes=pops,
        compression_cycles=int(comp.sum()),
        accumulation_cycles=acc_c,
        activation_cycles=act_c,
        nc_cycles=total_c,
        compress_stall_cycles=stall_c,
        input_ram=in_ram,
        output_ram=out_ram,
        membrane_updates=int(pops.sum()) * layer.out_neurons,
    )
    spikes = SpikeTrain(out[:, :, None, None])
    return SparseResult(spikes, max(total_c), stats, membrane=membrane, counts=out.sum(axis=0))
