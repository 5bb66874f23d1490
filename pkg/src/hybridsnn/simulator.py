"""Whole-network simulation on the hybrid accelerator.

With direct coding the first convolution runs on the dense core and every
later layer on its own sparse core. With rate coding the dense core is
switched off and the first layer also runs on a sparse core, using the
allocation's ``dense_rows`` entry as its NC count.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dense_core import DenseCoreConfig, simulate_dense
from .exceptions import DomainError, ShapeError, VerificationError
from .fileio import RunConfig
from .layers import ConvLayerSpec, NetworkSpec
from .neuron import LifParams
from .oracle import ForwardResult, output_scores, rate_encode, reference_forward
from .partition import Allocation, WorkloadTrace, partition, scale_allocation, trace_from_forward
from .quant import csd_digits
from .report import PerfReport, energy_report, get_power_table
from .sparse_core import SparseLayerConfig, maxpool_train, simulate_sparse_conv, simulate_sparse_fc

DEQUANT_FRAC_BITS = 16


@dataclass
class LayerRun:
    name: str
    kind: str
    core: str
    cycles: int
    spikes: int
    input_spikes: int | None
    resources: int
    dequant_terms: int | None = None
    stats: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name, "kind": self.kind, "core": self.core, "cycles": self.cycles,
            "spikes": self.spikes, "input_spikes": self.input_spikes, "resources": self.resources,
            "dequant_terms": self.dequant_terms, "stats": self.stats,
        }


@dataclass
class SimulationResult:
    trains: list
    layers: list
    output_counts: np.ndarray
    class_scores: np.ndarray
    prediction: int
    allocation: Allocation
    report: PerfReport
    inputs: list = field(default_factory=list, repr=False)

    @property
    def cycles(self) -> list[int]:
        return [lr.cycles for lr in self.layers]

    @property
    def spike_counts(self) -> list[int]:
        return [t.total_spikes for t in self.trains]

    def to_dict(self) -> dict:
        return {
            "prediction": self.prediction,
            "class_scores": self.class_scores.tolist(),
            "allocation": self.allocation.to_dict(),
            "layers": [lr.to_dict() for lr in self.layers],
            "report": self.report.to_dict(),
        }


def dequant_adder_terms(layer) -> int | None:
    """Signed digits needed to multiply by the layer's weight scale with
    shift-and-add at :data:`DEQUANT_FRAC_BITS` fractional bits."""
    if not layer.is_quantized:
        return None
    return len(csd_digits(int(round(layer.weights.params.scale_factor * (1 << DEQUANT_FRAC_BITS)))))


def encode_input(net: NetworkSpec, image, config: RunConfig):
    """The first layer's input: the image itself, or its rate-coded train."""
    if config.coding == "rate":
        return rate_encode(image, net.timesteps, config.seed)
    return np.asarray(image, dtype=np.float64)


def auto_allocation(net: NetworkSpec, trace: WorkloadTrace, config: RunConfig) -> Allocation:
    """Partition ``nc_budget`` NCs over the sparse layers by measured
    workload; each count is capped at the layer's output channels."""
    budget = config.nc_budget if config.nc_budget is not None else 2 * len(trace)
    alloc = partition(budget, trace, dense_rows=config.dense_rows)
    capped = tuple(min(n, p.layer.n_out) for n, p in zip(alloc.nc_per_layer, net.plan[1:]))
    return Allocation(alloc.dense_rows, capped, alloc.label)


def resolve_allocation(net: NetworkSpec, image, params: LifParams, config: RunConfig,
                       allocation: Allocation | None = None) -> Allocation:
    if allocation is None:
        if config.nc_per_layer is not None:
            allocation = Allocation(config.dense_rows, config.nc_per_layer)
        else:
            ref = reference_forward(net, encode_input(net, image, config), params)
            allocation = auto_allocation(net, trace_from_forward(net, ref), config)
    if len(allocation.nc_per_layer) != net.n_spiking - 1:
        raise ShapeError(
            f"allocation has {len(allocation.nc_per_layer)} NC counts for {net.n_spiking - 1} sparse layers"
        )
    return scale_allocation(allocation, config.scale)


def simulate_network(net: NetworkSpec, image, params: LifParams = LifParams(),
                     config: RunConfig = RunConfig(), allocation: Allocation | None = None,
                     n_jobs: int | None = None) -> SimulationResult:
    """Run one image through the accelerator and build its performance report."""
    if not net.has_weights:
        raise ShapeError("every spiking layer needs weights before simulation")
    alloc = resolve_allocation(net, image, params, config, allocation)
    current = encode_input(net, image, config)
    T = net.timesteps

    trains, runs, inputs = [], [], []
    for plan in net.plan:
        layer = plan.layer
        inputs.append(current)
        if plan.index == 0 and config.coding == "direct":
            if not isinstance(layer, ConvLayerSpec):
                raise ShapeError("direct coding needs a convolution as the first layer")
            cfg = DenseCoreConfig(
                rows=alloc.dense_rows,
                pipeline_fill=config.pipeline_fill,
                tile_switch_overhead=config.tile_switch_overhead,
                clock_hz=config.clock_hz,
            )
            res = simulate_dense(layer, current, T, cfg, params)
            train, cycles, core, resources, stats, in_spikes = res.spikes, res.cycles, "dense", cfg.rows, {}, None
        else:
            nc = alloc.dense_rows if plan.index == 0 else alloc.nc_per_layer[plan.index - 1]
            if nc > layer.n_out:
                raise DomainError(f"layer {plan.index} ({layer.name}) given {nc} NCs for {layer.n_out} outputs")
            scfg = SparseLayerConfig(layer, nc, config.chunk_bits, config.overlap)
            if isinstance(layer, ConvLayerSpec):
                res = simulate_sparse_conv(scfg, current, params, n_jobs=n_jobs)
            else:
                res = simulate_sparse_fc(scfg, current, params, n_jobs=n_jobs)
            train, cycles, core, resources = res.spikes, res.cycles, "sparse", nc
            stats, in_spikes = res.stats.to_dict(), res.stats.input_spikes
        trains.append(train)
        runs.append(LayerRun(layer.name or f"layer{plan.index}", layer.kind, core, int(cycles),
                             train.total_spikes, in_spikes, resources, dequant_adder_terms(layer), stats))
        current = train
        for z in plan.pools:
            current = maxpool_train(current, z)

    counts, scores = output_scores(net, trains[-1])

    power = get_power_table(config.power).for_network([p.layer.kind for p in net.plan])
    report = energy_report(
        [r.cycles for r in runs], power, config.clock_hz, config.accounting,
        spikes_per_layer=[r.spikes for r in runs], names=[r.name for r in runs],
        include_static=config.include_static,
    )
    return SimulationResult(trains, runs, counts, scores, int(np.argmax(scores)), alloc, report, inputs)


def verify_against_oracle(net: NetworkSpec, image, params: LifParams, result: SimulationResult,
                          config: RunConfig = RunConfig()) -> ForwardResult:
    """Raise :class:`VerificationError` unless every simulated spike train
    equals the reference model's."""
    ref = reference_forward(net, encode_input(net, image, config), params)
    for i, (a, b) in enumerate(zip(result.trains, ref.trains)):
        if a != b:
            diff = int(np.count_nonzero(a.bits != b.bits))
            raise VerificationError(f"layer {i}: {diff} spike bits differ from the reference model")
    if len(result.trains) != len(ref.trains):
        raise VerificationError("layer count differs from the reference model")
    return ref

