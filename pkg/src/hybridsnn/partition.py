"""Layer workload model and neural-core allocation.

Workload of a sparse layer is the number of neuron updates it performs:
``F * C_out * sum(S_i)`` for a convolution, ``N * S`` for a fully connected
layer. The partitioner balances ``W_l / n_l`` across layers.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Sequence

from .exceptions import DomainError, FormatError
from .layers import ConvLayerSpec, NetworkSpec
from .neuron import LifParams
from .oracle import reference_forward

TRACE_FIELDS = ("layer_index", "kind", "F", "C_out_or_N", "spike_sum")
LABELS = ("LW", "perf2", "perf4", "custom")


@dataclass(frozen=True)
class TraceEntry:
    layer_index: int
    kind: str  # "conv" or "fc"
    F: int
    C_out_or_N: int
    spike_sum: float

    def __post_init__(self):
        if self.kind not in ("conv", "fc"):
            raise DomainError(f"trace kind must be 'conv' or 'fc', got {self.kind!r}")
        if self.F < 0 or self.C_out_or_N < 0 or self.spike_sum < 0:
            raise DomainError("trace counts must be non-negative")


@dataclass(frozen=True)
class WorkloadTrace:
    entries: tuple = ()

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def workloads(self) -> list:
        return [layer_workload(e) for e in self.entries]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TRACE_FIELDS)
        for e in self.entries:
            s = int(e.spike_sum) if float(e.spike_sum).is_integer() else repr(float(e.spike_sum))
            writer.writerow([e.layer_index, e.kind, e.F, e.C_out_or_N, s])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "WorkloadTrace":
        reader = csv.DictReader(io.StringIO(text))
        if reader.fieldnames is None or tuple(f.strip() for f in reader.fieldnames) != TRACE_FIELDS:
            raise FormatError(f"trace header must be {','.join(TRACE_FIELDS)}")
        entries = []
        for lineno, row in enumerate(reader, start=2):
            try:
                spike = float(row["spike_sum"])
                entries.append(TraceEntry(
                    int(row["layer_index"]), row["kind"].strip(), int(row["F"]),
                    int(row["C_out_or_N"]), int(spike) if spike.is_integer() else spike,
                ))
            except (TypeError, ValueError) as exc:
                raise FormatError(f"trace line {lineno}: {exc}") from exc
        return cls(tuple(entries))

    @classmethod
    def mean(cls, traces: Sequence["WorkloadTrace"]) -> "WorkloadTrace":
        """Arithmetic mean of spike sums over traces of the same network."""
        if not traces:
            raise DomainError("no traces to average")
        first = traces[0]
        entries = []
        for i, e in enumerate(first.entries):
            total = sum(t.entries[i].spike_sum for t in traces)
            entries.append(replace(e, spike_sum=total / len(traces)))
        return cls(tuple(entries))


@dataclass(frozen=True)
class Allocation:
    """Dense-core row count plus one NC count per sparse layer."""

    dense_rows: int = 1
    nc_per_layer: tuple = ()
    label: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "nc_per_layer", tuple(int(n) for n in self.nc_per_layer))
        if self.dense_rows < 1 or any(n < 1 for n in self.nc_per_layer):
            raise DomainError("every allocation entry must be >= 1")
        if self.label not in LABELS:
            raise DomainError(f"label must be one of {LABELS}, got {self.label!r}")

    def as_tuple(self) -> tuple:
        return (self.dense_rows,) + self.nc_per_layer

    def to_dict(self) -> dict:
        return {"dense_rows": self.dense_rows, "nc_per_layer": list(self.nc_per_layer), "label": self.label}

    @classmethod
    def from_dict(cls, d: dict) -> "Allocation":
        return cls(int(d.get("dense_rows", 1)), tuple(d["nc_per_layer"]), d.get("label", "custom"))

    @classmethod
    def from_tuple(cls, values, label: str = "custom") -> "Allocation":
        values = tuple(values)
        return cls(values[0], values[1:], label)


def layer_workload(entry: TraceEntry):
    """``F * C_out * sum(S_i)`` for conv entries, ``N * S`` for fc entries."""
    if entry.kind == "conv":
        return entry.F * entry.C_out_or_N * entry.spike_sum
    return entry.C_out_or_N * entry.spike_sum


def max_latency(workloads, counts) -> Fraction:
    """Bottleneck ``max_l W_l / n_l`` as an exact fraction."""
    return max(Fraction(w) / n for w, n in zip(workloads, counts))


def _greedy(workloads, budget):
    L = len(workloads)
    if budget < L:
        raise DomainError(f"budget {budget} smaller than layer count {L}")
    ws = [Fraction(w) for w in workloads]
    n = [1] * L
    for _ in range(budget - L):
        best = 0
        for l in range(1, L):
            if ws[l] * n[best] > ws[best] * n[l]:
                best = l
        n[best] += 1
    return n


def partition(budget: int, trace: WorkloadTrace, dense_rows: int = 1) -> Allocation:
    """Greedy balanced allocation of ``budget`` NCs over the trace's layers.

    Starting from one NC per layer, each remaining NC goes to the layer
    with the largest ``W_l / n_l`` (lowest index on ties).
    """
    counts = _greedy(trace.workloads(), budget)
    return Allocation(dense_rows, tuple(counts), "LW")


def partition_workloads(budget: int, workloads) -> list[int]:
    return _greedy(list(workloads), budget)


def scale_allocation(a: Allocation, k: int) -> Allocation:
    """Multiply every entry by ``k`` (2 or 4); ``k == 1`` returns ``a``."""
    if k == 1:
        return a
    if k not in (2, 4):
        raise DomainError(f"scale factor must be 1, 2 or 4, got {k}")
    return Allocation(a.dense_rows * k, tuple(n * k for n in a.nc_per_layer), f"perf{k}")


def trace_from_forward(net: NetworkSpec, result) -> WorkloadTrace:
    """Workload entries for every sparse layer (all but the first) from a
    reference forward pass."""
    entries = []
    for plan, inp in zip(net.plan[1:], result.inputs[1:]):
        layer = plan.layer
        if isinstance(layer, ConvLayerSpec):
            entries.append(TraceEntry(plan.index, "conv", layer.filter_coefficients, layer.out_channels, inp.total_spikes))
        else:
            entries.append(TraceEntry(plan.index, "fc", 1, layer.out_neurons, inp.total_spikes))
    return WorkloadTrace(tuple(entries))


def measure_trace(net: NetworkSpec, image, params: LifParams = LifParams()) -> WorkloadTrace:
    """Run the reference model once and record each sparse layer's input spikes."""
    return trace_from_forward(net, reference_forward(net, image, params))
