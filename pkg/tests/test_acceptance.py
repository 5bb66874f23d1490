"""Acceptance criteria, one test per criterion.

Each check prints a single ``[PASS]`` / ``[FAIL]`` line; the lines are
also collected into the pytest terminal summary. Run this file directly
(``python tests/test_acceptance.py``) to print the lines without pytest.
"""
import itertools
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hybridsnn.dense_core import DenseCoreConfig, simulate_dense
from hybridsnn.fileio import RunConfig
from hybridsnn.layers import ConvLayerSpec, random_weights
from hybridsnn.neuron import LifParams
from hybridsnn.oracle import rate_encode, reference_forward
from hybridsnn.partition import TraceEntry, layer_workload, partition_workloads
from hybridsnn.quant import csd_digits, shift_add_multiply
from hybridsnn.report import FP32_POWER, INT4_POWER, PowerTable, compare_runs, energy_report
from hybridsnn.simulator import simulate_network
from hybridsnn.sparse_core import (
    SparseLayerConfig,
    SpikeEvent,
    compress,
    gen_update_addresses,
    maxpool_spikes,
    scatter_events,
    simulate_sparse_conv,
)
from hybridsnn.spikes import SpikeTrain, plane_address, plane_index
from hybridsnn.topology import VGG9, parse_topology

from conftest import random_network

RESULTS = []


def record(n, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n:>2}: {title} ({detail})"
    RESULTS.append(line)
    print(line)
    return ok


# --- independent helpers ---------------------------------------------------

def bit_scan(plane, chunk_bits):
    """Chunked lowest-set-bit scan over Python integers."""
    flat = np.asarray(plane, dtype=bool).ravel()
    W = plane.shape[1]
    events, cycles = [], 0
    for start in range(0, max(flat.size, 1), chunk_bits):
        word = int(sum(1 << k for k, b in enumerate(flat[start:start + chunk_bits]) if b))
        cycles += max(1, bin(word).count("1"))
        while word:
            low = (word & -word).bit_length() - 1
            events.append(start + low)
            word &= word - 1
    return [SpikeEvent(i // W, i % W) for i in events], cycles


def best_bottleneck(workloads, budget):
    L = len(workloads)
    best = None
    for cuts in itertools.combinations(range(1, budget), L - 1):
        parts = [b - a for a, b in zip((0,) + cuts, cuts + (budget,))]
        v = max(Fraction(w) / n for w, n in zip(workloads, parts))
        if best is None or v < best:
            best = v
    return best


# --- criteria ----------------------------------------------------------------

def check_1():
    start = time.perf_counter()
    mismatches, dense_layers, sparse_layers = 0, 0, 0
    for seed in range(200):
        quantized = seed % 5 == 4
        net, image, coding = random_network(seed, quantized=quantized)
        rng = np.random.default_rng(10_000 + seed)
        ncs = tuple(int(rng.integers(1, p.layer.n_out + 1)) for p in net.plan[1:])
        rows = int(rng.integers(1, 5))
        if coding == "rate":
            rows = min(rows, net.plan[0].layer.n_out)
        cfg = RunConfig(dense_rows=rows, nc_per_layer=ncs, chunk_bits=int(rng.choice([8, 16, 32, 64])),
                        coding=coding, seed=seed if coding == "rate" else None)
        res = simulate_network(net, image, LifParams(), cfg)
        inp = rate_encode(image, net.timesteps, seed) if coding == "rate" else image
        ref = reference_forward(net, inp, LifParams())
        for lr, a, b in zip(res.layers, res.trains, ref.trains):
            dense_layers += lr.core == "dense"
            sparse_layers += lr.core == "sparse"
            mismatches += a != b
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and elapsed < 60.0 and dense_layers > 0 and sparse_layers > 0
    return record(1, "oracle equivalence on 200 random networks", ok,
                  f"{mismatches} mismatching layers, {dense_layers} dense / {sparse_layers} sparse, {elapsed:.1f}s < 60s")


def check_2():
    rng = np.random.default_rng(7)
    net = parse_topology("8C3-MP2-8C3-P", input_shape=(3, 8, 8), population=4, classes=2, timesteps=3)
    net = random_weights(net, rng, gain=2.0)
    image = rng.random((3, 8, 8))
    base = None
    runs, differing = 0, 0
    for rows, N, chunk in itertools.product((1, 2, 4), (1, 2, 4, 8), (8, 64)):
        cfg = RunConfig(dense_rows=rows, nc_per_layer=(N, N), chunk_bits=chunk)
        trains = simulate_network(net, image, LifParams(), cfg).trains
        if base is None:
            base = trains
        differing += any(a != b for a, b in zip(base, trains))
        runs += 1
    spikes = sum(t.total_spikes for t in base)
    ok = differing == 0 and runs == 24 and spikes > 0
    return record(2, "resource invariance over rows x N x chunk", ok, f"{runs} configs, {differing} differ, {spikes} spikes")


def check_3():
    rng = np.random.default_rng(3)
    bad_dense = bad_acc = bad_comp = 0
    for i in range(1000):
        H, W = int(rng.integers(1, 17)), int(rng.integers(1, 17))
        plane = rng.random((H, W)) < rng.random()
        chunk = int(rng.choice([8, 16, 32, 64]))
        # compression: sum over chunks of max(1, popcount)
        flat = plane.ravel()
        want_comp = sum(max(1, int(flat[s:s + chunk].sum())) for s in range(0, flat.size, chunk))
        bad_comp += compress(plane, chunk)[1] != want_comp
        # accumulation: per NC, updates of every event times the channels it owns
        c_out, k = int(rng.integers(1, 9)), int(rng.choice([1, 3, 5]))
        N = int(rng.integers(1, c_out + 1))
        layer = ConvLayerSpec(1, c_out, k, rng.normal(size=(c_out, 1, k, k)), np.zeros(c_out))
        res = simulate_sparse_conv(SparseLayerConfig(layer, N, chunk), SpikeTrain(plane[None, None]))
        per_event = sum(len(gen_update_addresses(SpikeEvent(r, c), k, (H, W))) for r, c in zip(*np.nonzero(plane)))
        want_acc = [per_event * len(range(o, c_out, N)) for o in range(N)]
        bad_acc += res.stats.accumulation_cycles != want_acc
        # dense: T * ceil(C_out / R) * (H * W + 27)
        if H >= 3 and W >= 3:
            R, T = int(rng.integers(1, 9)), int(rng.integers(1, 4))
            dl = ConvLayerSpec(3, c_out, 3, rng.normal(size=(c_out, 3, 3, 3)), np.zeros(c_out))
            got = simulate_dense(dl, rng.random((3, H, W)), T, DenseCoreConfig(rows=R)).cycles
            bad_dense += got != T * -(-c_out // R) * (H * W + 27)
    ok = bad_dense == bad_acc == bad_comp == 0
    return record(3, "cycle model on 1000 random planes", ok,
                  f"mismatches dense={bad_dense} accumulation={bad_acc} compression={bad_comp}")


def check_4():
    rng = np.random.default_rng(4)
    instances = failures = 0
    for L in range(1, 6):
        for B in range(L, 13):
            for trial in range(25):
                hi = 4 if trial % 2 else 10**6   # small ranges force ties
                w = [int(v) for v in rng.integers(0, hi, size=L)]
                n = partition_workloads(B, w)
                got = max(Fraction(a) / b for a, b in zip(w, n))
                failures += sum(n) != B or got != best_bottleneck(w, B)
                instances += 1
    return record(4, "greedy partition equals brute force (L<=5, B<=12)", failures == 0,
                  f"{instances} instances, {failures} suboptimal")


def check_5():
    a = energy_report([1], INT4_POWER.for_network(["conv"]))
    b = energy_report([1], FP32_POWER.for_network(["conv"]))
    power_ratio = b.total_dynamic_power_w / a.total_dynamic_power_w
    clock = 100e6
    # one-layer reports carrying the published rate vs direct latency and energy
    rate = energy_report([round(0.340 * clock)], PowerTable((0.201 / 0.340,)), clock, spikes_per_layer=[107_000])
    direct = energy_report([round(0.0117 * clock)], PowerTable((0.0076 / 0.0117,)), clock, spikes_per_layer=[41_000])
    ratios = compare_runs(direct, rate)
    ok = (abs(power_ratio - 2.82) <= 0.01 and abs(ratios["energy"] - 26.4) <= 0.1
          and abs(ratios["spikes"] - 2.6) <= 0.05)
    return record(5, "reported power/energy/spike ratios", ok,
                  f"power {power_ratio:.4f}x, energy {ratios['energy']:.3f}x, spikes {ratios['spikes']:.4f}x")


def check_6():
    conv = layer_workload(TraceEntry(1, "conv", 9, 64, 1000))
    fc = layer_workload(TraceEntry(8, "fc", 1, 1064, 500))
    return record(6, "layer workload", conv == 576_000 and fc == 532_000, f"conv {conv}, fc {fc}")


def check_7():
    bad = 0
    for C in range(1, 129):
        for T in range(1, 9):
            addrs = [plane_address(c, t, T, C) for c in range(C) for t in range(T)]
            bad += sorted(addrs) != list(range(C * T))
            bad += any(plane_index(a, T) != (c, t) for a, (c, t) in zip(addrs, itertools.product(range(C), range(T))))
    tr = SpikeTrain.zeros(2, 64, 4, 4)
    locs = tr.n_locations
    stored = len(list(tr.planes()))
    ok = bad == 0 and locs == 128 and stored == 128
    return record(7, "timestep-major layout", ok, f"{bad} non-bijective (C,T), C=64 T=2 uses {locs} locations")


def check_8():
    rng = np.random.default_rng(8)
    bad_rt = bad_scan = 0
    for i in range(10_000):
        H, W = int(rng.integers(1, 17)), int(rng.integers(1, 17))
        plane = rng.random((H, W)) < rng.random()
        chunk = int(rng.choice([8, 16, 32, 64]))
        events, cycles = compress(plane, chunk)
        bad_rt += not np.array_equal(scatter_events(events, H, W), plane)
        if i % 10 == 0:
            bad_scan += (events, cycles) != bit_scan(plane, chunk)
    bad_pool = 0
    for _ in range(1000):
        Z = int(rng.choice([2, 3, 4]))
        H, W = Z * int(rng.integers(1, 6)), Z * int(rng.integers(1, 6))
        plane = rng.random((H, W)) < rng.random()
        want = np.array([[max(int(plane[r * Z + a, c * Z + b]) for a in range(Z) for b in range(Z))
                          for c in range(W // Z)] for r in range(H // Z)], dtype=bool)
        bad_pool += not np.array_equal(maxpool_spikes(plane, Z), want)
    ok = bad_rt == bad_scan == bad_pool == 0
    return record(8, "codec round-trip and OR pooling", ok,
                  f"10000 planes: {bad_rt} round-trip / {bad_scan} scan errors; 1000 pools: {bad_pool} errors")


def check_9():
    bad_fwd = 0
    for seed in range(20):
        net, image, coding = random_network(500 + seed, quantized=True, max_t=3)
        cfg = RunConfig(coding=coding, seed=seed if coding == "rate" else None)
        q = simulate_network(net, image, LifParams(), cfg)
        real = net.dequantized()
        r = simulate_network(real, image, LifParams(), cfg)
        inp = rate_encode(image, net.timesteps, seed) if coding == "rate" else image
        ref = reference_forward(real, inp, LifParams())
        bad_fwd += any(a != b for a, b in zip(q.trains, r.trains))
        bad_fwd += any(a != b for a, b in zip(q.trains, ref.trains))
    rng = np.random.default_rng(9)
    constants = []
    while len(constants) < 100:
        c = int(rng.integers(-(1 << 15), 1 << 15))
        if len(csd_digits(c)) <= 8:
            constants.append(c)
    x = np.arange(-(1 << 15), 1 << 15, dtype=np.int64)
    bad_mul = sum(not np.array_equal(shift_add_multiply(x, c)[0], x * c) for c in constants)
    ok = bad_fwd == 0 and bad_mul == 0
    return record(9, "int4 path and shift-add multiply", ok,
                  f"{bad_fwd} forward mismatches over 20 nets; {bad_mul}/100 constants wrong over 65536 inputs")


def check_10():
    rng = np.random.default_rng(10)
    net = random_weights(parse_topology(VGG9, timesteps=2), rng)
    image = rng.random((3, 32, 32))
    start = time.perf_counter()
    res = simulate_network(net, image, LifParams(), RunConfig())
    elapsed = time.perf_counter() - start
    ok = elapsed < 120.0 and len(res.layers) == 9
    record(10, "full VGG9 single image", ok,
           f"{elapsed:.1f}s < 120s, {sum(res.spike_counts)} spikes; not reproducible here: "
           "trained-model sparsity deltas, accuracies and absolute FPS")
    return ok


CHECKS = [check_1, check_2, check_3, check_4, check_5, check_6, check_7, check_8, check_9, check_10]


@pytest.mark.parametrize("check", CHECKS, ids=[f"criterion_{i + 1}" for i in range(len(CHECKS))])
def test_criterion(check):
    assert check()


if __name__ == "__main__":
    results = [c() for c in CHECKS]
    sys.exit(0 if all(results) else 1)
