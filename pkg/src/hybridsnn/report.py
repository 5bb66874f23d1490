"""Latency, energy and throughput accounting from per-layer cycle counts.

Report JSON schema (``PerfReport.to_dict``)::

    {
      "clock_hz": float, "accounting": "sequential" | "pipelined",
      "power_label": str, "include_static": bool, "static_power_w": float,
      "total_dynamic_power_w": float,
      "layers": [{"name", "cycles", "seconds", "spikes", "power_w",
                  "dynamic_energy_j"}, ...],
      "total_cycles", "total_spikes", "makespan_sequential_s",
      "makespan_pipelined_s", "makespan_s", "throughput_fps",
      "total_dynamic_energy_j", "static_energy_j", "total_energy_j"
    }

The CSV summary has one row per layer with the same per-layer fields.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

from .exceptions import DomainError, FormatError, ShapeError

ACCOUNTING_MODES = ("sequential", "pipelined")


@dataclass(frozen=True)
class PowerTable:
    """Per-layer dynamic power and static power, in watts.

    ``total_dynamic_power`` is the design-level figure; it defaults to the
    sum of the layer rows but may be given explicitly when the source
    reports a total that includes logic outside the listed layers.
    """

    layer_powers: tuple
    static_power: float = 0.0
    label: str = "custom"
    layer_names: tuple = ()
    total_dynamic_power: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "layer_powers", tuple(float(p) for p in self.layer_powers))
        object.__setattr__(self, "layer_names", tuple(self.layer_names))
        if any(p < 0 for p in self.layer_powers) or self.static_power < 0:
            raise DomainError("powers must be non-negative")
        if self.layer_names and len(self.layer_names) != len(self.layer_powers):
            raise ShapeError("layer_names and layer_powers differ in length")
        if self.total_dynamic_power is None:
            object.__setattr__(self, "total_dynamic_power", sum(self.layer_powers))
        elif self.total_dynamic_power < 0:
            raise DomainError("total power must be non-negative")

    def __len__(self):
        return len(self.layer_powers)

    def scaled(self, c: float) -> "PowerTable":
        return PowerTable(
            tuple(p * c for p in self.layer_powers), self.static_power, self.label,
            self.layer_names, self.total_dynamic_power * c,
        )

    def for_network(self, kinds: Sequence[str]) -> "PowerTable":
        """Map table rows onto a network's spiking layers.

        Convolution layers take the non-FC rows in order; every fully
        connected layer uses the row named ``FC`` when the table has one.
        Tables without an ``FC`` row are taken positionally.
        """
        names = [n.upper() for n in self.layer_names]
        if "FC" not in names:
            if len(kinds) > len(self):
                raise ShapeError(f"power table {self.label!r} has {len(self)} rows, network has {len(kinds)} layers")
            return PowerTable(self.layer_powers[: len(kinds)], self.static_power, self.label,
                              self.layer_names[: len(kinds)] if self.layer_names else (),
                              self.total_dynamic_power)
        fc_power = self.layer_powers[names.index("FC")]
        conv_rows = [(n, p) for n, p in zip(self.layer_names, self.layer_powers) if n.upper() != "FC"]
        powers, labels = [], []
        ci = 0
        for kind in kinds:
            if kind == "fc":
                powers.append(fc_power)
                labels.append("FC")
            else:
                if ci >= len(conv_rows):
                    raise ShapeError(f"power table {self.label!r} has only {len(conv_rows)} convolution rows")
                labels.append(conv_rows[ci][0])
                powers.append(conv_rows[ci][1])
                ci += 1
        return PowerTable(tuple(powers), self.static_power, self.label, tuple(labels), self.total_dynamic_power)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "layer_names": list(self.layer_names),
            "layer_powers": list(self.layer_powers),
            "static_power": self.static_power,
            "total_dynamic_power": self.total_dynamic_power,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "PowerTable":
        try:
            return cls(
                tuple(d["layer_powers"]), float(d.get("static_power", 0.0)), d.get("label", "custom"),
                tuple(d.get("layer_names", ())), d.get("total_dynamic_power"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"invalid power table: {exc}") from exc


_TABLE_LAYERS = ("CONV_1_1", "CONV_1_2", "CONV_2_1", "CONV_2_2", "CONV_3_1", "CONV_3_2", "CONV_3_3", "FC")

INT4_POWER = PowerTable(
    (0.048, 0.205, 0.054, 0.17, 0.1, 0.293, 0.284, 0.125),
    static_power=3.13, label="int4", layer_names=_TABLE_LAYERS, total_dynamic_power=1.231,
)
FP32_POWER = PowerTable(
    (0.051, 0.251, 0.152, 0.561, 0.405, 0.96, 0.634, 0.508),
    static_power=3.22, label="fp32", layer_names=_TABLE_LAYERS, total_dynamic_power=3.471,
)
BUILTIN_POWER = {"int4": INT4_POWER, "fp32": FP32_POWER}


def get_power_table(spec) -> PowerTable:
    """``"int4"``, ``"fp32"``, a path to a JSON table, a mapping or a table."""
    if isinstance(spec, PowerTable):
        return spec
    if isinstance(spec, Mapping):
        return PowerTable.from_dict(spec)
    if spec in BUILTIN_POWER:
        return BUILTIN_POWER[spec]
    try:
        with open(spec) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"power table {spec}: {exc}") from exc
    return PowerTable.from_dict(data)


@dataclass
class LayerPerf:
    name: str
    cycles: int
    seconds: float
    spikes: int
    power_w: float
    dynamic_energy_j: float


@dataclass
class PerfReport:
    layers: list
    clock_hz: float
    accounting: str = "sequential"
    power_label: str = "custom"
    include_static: bool = False
    static_power_w: float = 0.0
    total_dynamic_power_w: float = 0.0
    total_cycles: int = 0
    total_spikes: int = 0
    makespan_sequential_s: float = 0.0
    makespan_pipelined_s: float = 0.0
    makespan_s: float = 0.0
    throughput_fps: float = 0.0
    total_dynamic_energy_j: float = 0.0
    static_energy_j: float = 0.0
    total_energy_j: float = 0.0
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: Mapping) -> "PerfReport":
        d = dict(d)
        try:
            d["layers"] = [LayerPerf(**lp) for lp in d["layers"]]
            return cls(**d)
        except (KeyError, TypeError) as exc:
            raise FormatError(f"invalid report: {exc}") from exc

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_json(cls, text: str) -> "PerfReport":
        return cls.from_dict(json.loads(text))

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = ["name", "cycles", "seconds", "spikes", "power_w", "dynamic_energy_j"]
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(cols)
        for lp in self.layers:
            writer.writerow([getattr(lp, c) for c in cols])
        return buf.getvalue()


def energy_report(cycles_per_layer, power: PowerTable, clock_hz: float = 100e6,
                  pipeline: str = "sequential", spikes_per_layer=None, names=None,
                  include_static: bool = False) -> PerfReport:
    """Per-layer energy ``P_l * cycles_l / clock_hz`` and derived totals.

    The makespan is the sum of layer times in ``sequential`` mode and the
    longest layer time in ``pipelined`` mode; both are always recorded.
    Static energy (``static_power * makespan``) is added only when
    ``include_static`` is set.
    """
    if pipeline not in ACCOUNTING_MODES:
        raise DomainError(f"accounting must be one of {ACCOUNTING_MODES}, got {pipeline!r}")
    if clock_hz <= 0:
        raise DomainError("clock_hz must be positive")
    cycles = [int(c) for c in cycles_per_layer]
    if any(c < 0 for c in cycles):
        raise DomainError("cycle counts must be non-negative")
    if len(power) < len(cycles):
        raise ShapeError(f"power table covers {len(power)} layers, missing coefficient for layer {len(power)}")
    spikes = [0] * len(cycles) if spikes_per_layer is None else [int(s) for s in spikes_per_layer]
    if len(spikes) != len(cycles):
        raise ShapeError("spike and cycle lists differ in length")
    if names is None:
        names = power.layer_names[: len(cycles)] if power.layer_names else [f"layer{i}" for i in range(len(cycles))]

    layers = []
    for i, c in enumerate(cycles):
        secs = c / clock_hz
        layers.append(LayerPerf(str(names[i]), c, secs, spikes[i], power.layer_powers[i], power.layer_powers[i] * secs))
    seq = sum(lp.seconds for lp in layers)
    pipe = max((lp.seconds for lp in layers), default=0.0)
    makespan = seq if pipeline == "sequential" else pipe
    dyn = sum(lp.dynamic_energy_j for lp in layers)
    static = power.static_power * makespan if include_static else 0.0
    return PerfReport(
        layers=layers,
        clock_hz=float(clock_hz),
        accounting=pipeline,
        power_label=power.label,
        include_static=include_static,
        static_power_w=power.static_power,
        total_dynamic_power_w=power.total_dynamic_power,
        total_cycles=sum(cycles),
        total_spikes=sum(spikes),
        makespan_sequential_s=seq,
        makespan_pipelined_s=pipe,
        makespan_s=makespan,
        throughput_fps=1.0 / makespan if makespan > 0 else math.inf,
        total_dynamic_energy_j=dyn,
        static_energy_j=static,
        total_energy_j=dyn + static,
    )


def _ratio(num: float, den: float) -> float:
    if den == 0:
        return 1.0 if num == 0 else math.inf
    return num / den


def compare_runs(a: PerfReport, b: PerfReport) -> dict:
    """Ratios ``b / a`` of latency, energy, throughput and spikes, in total
    and per layer."""
    if len(a.layers) != len(b.layers):
        raise ShapeError(f"reports have {len(a.layers)} and {len(b.layers)} layers")
    return {
        "latency": _ratio(b.makespan_s, a.makespan_s),
        "energy": _ratio(b.total_energy_j, a.total_energy_j),
        "throughput": _ratio(b.throughput_fps, a.throughput_fps),
        "spikes": _ratio(b.total_spikes, a.total_spikes),
        "layers": [
            {
                "name": la.name,
                "cycles": _ratio(lb.cycles, la.cycles),
                "energy": _ratio(lb.dynamic_energy_j, la.dynamic_energy_j),
                "spikes": _ratio(lb.spikes, la.spikes),
            }
            for la, lb in zip(a.layers, b.layers)
        ],
    }


def _spikes(run) -> float:
    if isinstance(run, PerfReport):
        return run.total_spikes
    return float(run)


def quant_sparsity_report(fp_run, int_run):
    """Percent fewer spikes in the integer run: ``100 * (1 - int / fp)``.

    Accepts reports or plain spike totals, or mappings of dataset name to
    either, in which case a mapping of percentages is returned.
    """
    if isinstance(fp_run, Mapping):
        if set(fp_run) != set(int_run):
            raise ShapeError("fp and int runs cover different datasets")
        return {k: quant_sparsity_report(fp_run[k], int_run[k]) for k in fp_run}
    fp = _spikes(fp_run)
    if fp == 0:
        raise DomainError("fp run has zero spikes")
    return 100.0 * (1.0 - _spikes(int_run) / fp)
