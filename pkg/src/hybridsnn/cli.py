"""Command-line interface.

Exit codes: 0 success, 2 usage error, 3 malformed input file,
4 verification failure, 5 missing or unreadable file.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .exceptions import DomainError, FormatError, ShapeError, TopologyError, VerificationError
from .fileio import RunConfig, load_model, load_tensor
from .partition import WorkloadTrace, partition, scale_allocation
from .report import energy_report, get_power_table
from .simulator import encode_input, simulate_network, verify_against_oracle
from .oracle import reference_forward
from .partition import trace_from_forward

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_FORMAT = 3
EXIT_VERIFY = 4
EXIT_IO = 5


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _config(path: str | None) -> RunConfig:
    return RunConfig.load(path) if path else RunConfig()


def cmd_simulate(args) -> int:
    net, lif = load_model(args.model)
    image = load_tensor(args.input)
    config = _config(args.config)
    result = simulate_network(net, image, lif, config, n_jobs=args.jobs)
    payload = result.to_dict()
    if args.verify:
        ref = verify_against_oracle(net, image, lif, result, config)
        payload["verified"] = True
        payload["oracle_spike_counts"] = ref.spike_counts
    _emit(json.dumps(payload, indent=2), args.out)
    return EXIT_OK


def cmd_trace(args) -> int:
    net, lif = load_model(args.model)
    image = load_tensor(args.input)
    config = _config(args.config)
    ref = reference_forward(net, encode_input(net, image, config), lif)
    _emit(trace_from_forward(net, ref).to_csv(), args.out)
    return EXIT_OK


def cmd_partition(args) -> int:
    trace = WorkloadTrace.from_csv(Path(args.trace).read_text())
    alloc = partition(args.budget, trace, dense_rows=args.dense_rows)
    alloc = scale_allocation(alloc, args.scale)
    _emit(json.dumps(alloc.to_dict()), args.out)
    return EXIT_OK


def _coding_summary(result) -> dict:
    rep = result.report
    return {
        "total_spikes": rep.total_spikes,
        "latency_ms": rep.makespan_s * 1e3,
        "energy_mj": rep.total_energy_j * 1e3,
        "prediction": result.prediction,
        "allocation": result.allocation.to_dict(),
    }


def cmd_compare_coding(args) -> int:
    net, lif = load_model(args.model)
    image = load_tensor(args.input)
    base = _config(args.config)
    direct_cfg = replace(base, coding="direct", seed=None)
    rate_cfg = replace(base, coding="rate", seed=args.seed)
    direct = simulate_network(net.with_timesteps(args.timesteps_direct), image, lif, direct_cfg)
    rate = simulate_network(net.with_timesteps(args.timesteps_rate), image, lif, rate_cfg)
    d, r = _coding_summary(direct), _coding_summary(rate)
    d["timesteps"], r["timesteps"] = args.timesteps_direct, args.timesteps_rate
    payload = {
        "rate": r,
        "direct": d,
        "energy_improvement": r["energy_mj"] / d["energy_mj"] if d["energy_mj"] else None,
        "spike_ratio": r["total_spikes"] / d["total_spikes"] if d["total_spikes"] else None,
        "latency_ratio": r["latency_ms"] / d["latency_ms"] if d["latency_ms"] else None,
    }
    _emit(json.dumps(payload, indent=2), args.out)
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        data = json.loads(Path(args.cycles).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{args.cycles}: {exc}") from exc
    if isinstance(data, list):
        data = {"cycles": data}
    if not isinstance(data, dict) or "cycles" not in data:
        raise FormatError("cycles file must be a list of counts or an object with a 'cycles' list")
    power = get_power_table(args.power)
    clock = args.clock_hz if args.clock_hz is not None else float(data.get("clock_hz", 100e6))
    rep = energy_report(
        data["cycles"], power, clock, args.accounting,
        spikes_per_layer=data.get("spikes"), names=data.get("names"),
        include_static=args.include_static,
    )
    _emit(rep.to_csv() if args.csv else rep.to_json(), args.out)
    print(f"total dynamic power: {rep.total_dynamic_power_w:.3f} W", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hybridsnn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one image through the hybrid accelerator")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--config")
    p.add_argument("--out")
    p.add_argument("--verify", action="store_true", help="compare every layer with the reference model")
    p.add_argument("--jobs", type=int, default=None, help="threads for neural-core simulation")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("trace", help="measure the per-layer workload trace")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("partition", help="allocate neural cores from a trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--budget", type=int, required=True)
    p.add_argument("--scale", type=int, default=1, choices=(1, 2, 4))
    p.add_argument("--dense-rows", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("compare-coding", help="direct vs rate coding on one image")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--timesteps-rate", type=int, required=True)
    p.add_argument("--timesteps-direct", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--config")
    p.add_argument("--out")
    p.set_defaults(func=cmd_compare_coding)

    p = sub.add_parser("report", help="energy and latency from per-layer cycles")
    p.add_argument("--cycles", required=True)
    p.add_argument("--power", required=True, help="int4, fp32 or a JSON power table")
    p.add_argument("--clock-hz", type=float)
    p.add_argument("--accounting", choices=("sequential", "pipelined"), default="sequential")
    p.add_argument("--include-static", action="store_true")
    p.add_argument("--csv", action="store_true", help="emit the per-layer CSV summary")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    try:
        return args.func(args)
    except VerificationError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"file error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (DomainError, ShapeError, TopologyError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
