import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from hybridsnn.exceptions import DomainError, FormatError
from hybridsnn.neuron import LifParams
from hybridsnn.oracle import reference_forward
from hybridsnn.partition import (
    Allocation,
    TraceEntry,
    WorkloadTrace,
    layer_workload,
    max_latency,
    measure_trace,
    partition,
    partition_workloads,
    scale_allocation,
    trace_from_forward,
)
from hybridsnn.topology import VGG9, parse_topology


def brute_force_best(workloads, budget):
    """Minimal bottleneck over every composition of ``budget`` into
    positive parts."""
    L = len(workloads)
    best = None
    for cuts in itertools.combinations(range(1, budget), L - 1):
        parts = [b - a for a, b in zip((0,) + cuts, cuts + (budget,))]
        v = max(Fraction(w) / n for w, n in zip(workloads, parts))
        best = v if best is None or v < best else best
    return best


def test_workload_examples():
    assert layer_workload(TraceEntry(1, "conv", 9, 64, 1000)) == 576000
    assert layer_workload(TraceEntry(8, "fc", 1, 1064, 500)) == 532000


def test_trace_entry_validation():
    with pytest.raises(DomainError):
        TraceEntry(0, "pool", 1, 1, 1)
    with pytest.raises(DomainError):
        TraceEntry(0, "fc", 1, 1, -1)


def test_partition_known():
    trace = WorkloadTrace((TraceEntry(1, "conv", 9, 10, 10), TraceEntry(2, "fc", 1, 100, 3)))
    a = partition(6, trace)
    # workloads 900 and 300: 900/4 = 225 vs 300/2 = 150
    assert a.nc_per_layer == (4, 2) and a.label == "LW"
    assert a.as_tuple() == (1, 4, 2)


def test_partition_ties_go_to_lowest_index():
    assert partition_workloads(3, [10, 10]) == [2, 1]


def test_partition_budget_too_small():
    with pytest.raises(DomainError):
        partition_workloads(1, [1, 2])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 10**6), min_size=1, max_size=5), st.integers(0, 7))
def test_greedy_is_optimal(workloads, extra):
    budget = len(workloads) + extra
    n = partition_workloads(budget, workloads)
    assert sum(n) == budget and min(n) >= 1
    assert max_latency(workloads, n) == brute_force_best(workloads, budget)


def test_scale_allocation():
    a = Allocation(1, (2, 3), "LW")
    assert scale_allocation(a, 1) is a
    b = scale_allocation(a, 4)
    assert b.as_tuple() == (4, 8, 12) and b.label == "perf4"
    with pytest.raises(DomainError):
        scale_allocation(a, 3)


def test_allocation_roundtrip_and_validation():
    a = Allocation.from_tuple((2, 1, 5), "perf2")
    assert Allocation.from_dict(a.to_dict()) == a
    with pytest.raises(DomainError):
        Allocation(1, (0,))
    with pytest.raises(DomainError):
        Allocation(1, (1,), "fast")


def test_trace_csv_roundtrip():
    t = WorkloadTrace((TraceEntry(1, "conv", 9, 64, 1200), TraceEntry(2, "fc", 1, 10, 2.5)))
    text = t.to_csv()
    assert text.splitlines()[0] == "layer_index,kind,F,C_out_or_N,spike_sum"
    assert WorkloadTrace.from_csv(text) == t


@pytest.mark.parametrize("text", ["a,b\n1,2\n", "layer_index,kind,F,C_out_or_N,spike_sum\n1,conv,x,2,3\n",
                                  "layer_index,kind,F,C_out_or_N,spike_sum\n1,pool,9,2,3\n"])
def test_trace_csv_errors(text):
    with pytest.raises((FormatError, DomainError)):
        WorkloadTrace.from_csv(text)


def test_trace_mean():
    a = WorkloadTrace((TraceEntry(1, "fc", 1, 4, 2),))
    b = WorkloadTrace((TraceEntry(1, "fc", 1, 4, 5),))
    assert WorkloadTrace.mean([a, b]).entries[0].spike_sum == 3.5


def test_trace_from_forward(toy_net):
    net, image = toy_net
    ref = reference_forward(net, image, LifParams())
    trace = trace_from_forward(net, ref)
    assert [e.kind for e in trace] == ["conv", "fc"]
    assert trace.entries[0].F == 9 and trace.entries[0].C_out_or_N == 8
    assert trace.entries[0].spike_sum == ref.inputs[1].total_spikes
    assert measure_trace(net, image) == trace


def test_vgg9_trace_length():
    net = parse_topology(VGG9)
    assert net.n_spiking == 9
    assert [p.layer.kind for p in net.plan[1:]] == ["conv"] * 6 + ["fc", "fc"]
