"""Tensor files, model manifests and run configuration.

Tensor file (little-endian)::

    b"SNNT" | version:u8 | rank:u32 | dims:u32 * rank | float32 * prod(dims)

Values are row-major. Rank is at most 8.

Model manifest (JSON)::

    {
      "topology": "64C3-112C3-MP2-...-P",
      "input_shape": [3, 32, 32], "classes": 10, "population": 1000,
      "timesteps": 2, "lif": {"beta": 0.15, "theta": 0.5},
      "layers": [
        {"name": "conv1", "weights": "conv1_w.snnt", "bias": "conv1_b.snnt",
         "weight_quant": {"bit_width": 4, "scale_factor": 0.01, "zero_point": 0},
         "bias_quant": null},
        ...
      ]
    }

``layers`` lists the spiking layers in order; tensor paths are relative
to the manifest. Quantized tensors hold integer codes stored as floats.
"""
from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from .exceptions import DomainError, FormatError, ShapeError, TopologyError
from .layers import ConvLayerSpec, FcLayerSpec, NetworkSpec
from .neuron import LifParams
from .quant import QuantParams, QuantTensor
from .topology import parse_topology

SNNT_MAGIC = b"SNNT"
SNNT_VERSION = 1
MAX_RANK = 8


def tensor_to_bytes(t) -> bytes:
    t = np.asarray(t, dtype=np.float64)
    if t.ndim > MAX_RANK:
        raise ShapeError(f"rank {t.ndim} exceeds {MAX_RANK}")
    head = SNNT_MAGIC + struct.pack("<BI", SNNT_VERSION, t.ndim) + struct.pack(f"<{t.ndim}I", *t.shape)
    return head + np.ascontiguousarray(t, dtype="<f4").tobytes()


def tensor_from_bytes(data: bytes) -> np.ndarray:
    if len(data) < 9:
        raise FormatError(f"truncated header at byte offset {len(data)}, need 9 bytes")
    if data[:4] != SNNT_MAGIC:
        raise FormatError(f"bad magic {data[:4]!r}, expected {SNNT_MAGIC!r}")
    version, rank = struct.unpack_from("<BI", data, 4)
    if version != SNNT_VERSION:
        raise FormatError(f"unsupported SNNT version {version}")
    if rank > MAX_RANK:
        raise FormatError(f"rank {rank} exceeds {MAX_RANK}")
    dims_end = 9 + 4 * rank
    if len(data) < dims_end:
        raise FormatError(f"truncated dims at byte offset {len(data)}, need {dims_end} bytes")
    dims = struct.unpack_from(f"<{rank}I", data, 9)
    need = dims_end + 4 * int(np.prod(dims, dtype=np.int64))
    if len(data) < need:
        raise FormatError(f"truncated payload at byte offset {len(data)}, expected {need} bytes")
    if len(data) > need:
        raise FormatError(f"{len(data) - need} trailing bytes after payload at byte offset {need}")
    values = np.frombuffer(data, dtype="<f4", offset=dims_end)
    return values.astype(np.float64).reshape(dims)


def save_tensor(path, t) -> None:
    Path(path).write_bytes(tensor_to_bytes(t))


def load_tensor(path) -> np.ndarray:
    return tensor_from_bytes(Path(path).read_bytes())


# --- model manifest --------------------------------------------------------

def _read_blob(base: Path, entry: dict, key: str, shape, quant: dict | None, where: str):
    if entry.get(key) is None:
        if key == "weights":
            raise FormatError(f"{where}: missing weights")
        return None
    arr = load_tensor(base / entry[key])
    if tuple(arr.shape) != tuple(shape):
        raise FormatError(f"{where}: {key} shape {tuple(arr.shape)} does not match expected {tuple(shape)}")
    if quant is None:
        return arr
    try:
        return QuantTensor(arr, QuantParams.from_dict(quant))
    except (DomainError, KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{where}: {key}: {exc}") from exc


def load_model(path) -> tuple[NetworkSpec, LifParams]:
    """Read a manifest and every tensor it names, validating all shapes
    before returning."""
    path = Path(path)
    try:
        meta = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    try:
        net = parse_topology(
            meta["topology"],
            input_shape=tuple(meta.get("input_shape", (3, 32, 32))),
            population=int(meta.get("population", 1)),
            classes=int(meta.get("classes", 10)),
            timesteps=int(meta.get("timesteps", 2)),
        )
        lif = LifParams(**meta.get("lif", {}))
        entries = meta["layers"]
    except (KeyError, TypeError) as exc:
        raise FormatError(f"{path}: missing or invalid field {exc}") from exc
    except (TopologyError, DomainError) as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if len(entries) != net.n_spiking:
        raise FormatError(f"{path}: {len(entries)} layer entries for {net.n_spiking} spiking layers")

    base = path.parent
    filled = iter(entries)
    layers = []
    for layer in net.layers:
        if isinstance(layer, (ConvLayerSpec, FcLayerSpec)):
            entry = next(filled)
            where = f"layer {entry.get('name', layer.name)}"
            if isinstance(layer, ConvLayerSpec):
                wshape = (layer.out_channels, layer.in_channels, layer.kernel, layer.kernel)
            else:
                wshape = (layer.out_neurons, layer.in_neurons)
            w = _read_blob(base, entry, "weights", wshape, entry.get("weight_quant"), where)
            b = _read_blob(base, entry, "bias", (layer.n_out,), entry.get("bias_quant"), where)
            layer = replace(layer, weights=w, bias=b, name=entry.get("name", layer.name))
        layers.append(layer)
    return net.with_layers(layers), lif


def save_model(path, net: NetworkSpec, lif: LifParams = LifParams()) -> None:
    """Write a manifest at ``path`` and one tensor file per blob beside it."""
    path = Path(path)
    base = path.parent
    entries = []
    for i, layer in enumerate(net.spiking_layers):
        name = layer.name or f"layer{i}"
        entry = {"name": name}
        for key, blob in (("weights", layer.weights), ("bias", layer.bias)):
            qkey = "weight_quant" if key == "weights" else "bias_quant"
            if blob is None:
                entry[key] = None
                entry[qkey] = None
                continue
            fname = f"{name}_{key}.snnt"
            if isinstance(blob, QuantTensor):
                save_tensor(base / fname, blob.values)
                entry[qkey] = blob.params.to_dict()
            else:
                save_tensor(base / fname, blob)
                entry[qkey] = None
            entry[key] = fname
        entries.append(entry)
    meta = {
        "topology": net.topology,
        "input_shape": list(net.input_shape),
        "classes": net.classes,
        "population": net.population,
        "timesteps": net.timesteps,
        "lif": {"beta": lif.beta, "theta": lif.theta},
        "layers": entries,
    }
    path.write_text(json.dumps(meta, indent=2))


# --- run configuration -----------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    """Hardware and run options for one simulation.

    ``nc_per_layer`` of ``None`` lets the simulator derive an allocation
    from a measured trace and ``nc_budget`` (default: two NCs per sparse
    layer).
    """

    dense_rows: int = 1
    nc_per_layer: tuple | None = None
    nc_budget: int | None = None
    scale: int = 1
    chunk_bits: int = 64
    clock_hz: float = 100e6
    power: str = "int4"
    accounting: str = "sequential"
    coding: str = "direct"
    seed: int | None = None
    overlap: bool = True
    include_static: bool = False
    pipeline_fill: int = 27
    tile_switch_overhead: int = 0

    def __post_init__(self):
        if self.nc_per_layer is not None:
            object.__setattr__(self, "nc_per_layer", tuple(int(n) for n in self.nc_per_layer))
        if self.coding not in ("direct", "rate"):
            raise DomainError(f"coding must be 'direct' or 'rate', got {self.coding!r}")
        if self.coding == "rate" and self.seed is None:
            raise DomainError("rate coding requires a seed")
        if self.accounting not in ("sequential", "pipelined"):
            raise DomainError(f"accounting must be 'sequential' or 'pipelined', got {self.accounting!r}")
        if self.clock_hz <= 0:
            raise DomainError("clock_hz must be positive")
        if self.scale not in (1, 2, 4):
            raise DomainError(f"scale must be 1, 2 or 4, got {self.scale}")

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["nc_per_layer"] is not None:
            d["nc_per_layer"] = list(d["nc_per_layer"])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise FormatError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**d)
        except (TypeError, ValueError) as exc:
            raise FormatError(f"invalid config: {exc}") from exc

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: {exc}") from exc
