"""Timestep-major spike storage, region-gated access accounting and the
binary spike-train format.

Planes of one layer are laid out channel by channel, with the ``T``
timesteps of a channel in consecutive locations. One location holds one
whole bit plane.

Binary layout (little-endian)::

    b"SPKT" | version:u8 | T:u32 | C:u32 | H:u32 | W:u32 | planes...

Planes follow :func:`plane_address` order. Each plane is ``H`` rows of
``ceil(W / 8)`` bytes; bit ``k`` of byte ``j`` is column ``8 * j + k``
and unused high bits of the last byte are zero.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .exceptions import DomainError, FormatError, ShapeError

SPKT_MAGIC = b"SPKT"
SPKT_VERSION = 1
_HEADER = struct.Struct("<4sBIIII")

WORD_BITS = 64


def plane_address(channel: int, timestep: int, T: int, C: int | None = None) -> int:
    """Location of the plane for ``(channel, timestep)``: ``channel * T + timestep``."""
    if T < 1:
        raise DomainError(f"T must be >= 1, got {T}")
    if not 0 <= timestep < T:
        raise DomainError(f"timestep {timestep} out of range for T={T}")
    if channel < 0 or (C is not None and channel >= C):
        raise DomainError(f"channel {channel} out of range")
    return channel * T + timestep


def plane_index(address: int, T: int) -> tuple[int, int]:
    """Inverse of :func:`plane_address`."""
    return divmod(address, T)


def pack_plane(plane: np.ndarray) -> np.ndarray:
    """Pack a 2-D bit plane into 64-bit words, row-major, LSB first.

    Bits past ``H * W`` in the last word are zero.
    """
    flat = np.asarray(plane, dtype=bool).ravel()
    n_words = max(1, -(-flat.size // WORD_BITS))
    padded = np.zeros(n_words * WORD_BITS, dtype=bool)
    padded[: flat.size] = flat
    as_bytes = np.packbits(padded.reshape(n_words, WORD_BITS), axis=1, bitorder="little")
    return as_bytes.view("<u8").ravel().astype(np.uint64)


def unpack_plane(words: np.ndarray, H: int, W: int) -> np.ndarray:
    words = np.asarray(words, dtype="<u8")
    bits = np.unpackbits(words.view(np.uint8), bitorder="little")
    return bits[: H * W].reshape(H, W).astype(bool)


class SpikeTrain:
    """Immutable binary activations over ``(timestep, channel, row, col)``.

    ``bits`` is held as a read-only boolean array of shape ``(T, C, H, W)``;
    :meth:`words` gives the packed 64-bit view of any plane.
    """

    __slots__ = ("_bits", "_words")

    def __init__(self, bits):
        arr = np.asarray(bits)
        if arr.ndim != 4:
            raise ShapeError(f"spike train must be 4-D (T, C, H, W), got {arr.ndim}-D")
        if arr.dtype != bool:
            if arr.size and not np.all((arr == 0) | (arr == 1)):
                raise DomainError("spike train values must be 0 or 1")
        arr = np.array(arr, dtype=bool, copy=True)
        if arr.shape[0] < 1:
            raise ShapeError("spike train needs at least one timestep")
        arr.setflags(write=False)
        self._bits = arr
        self._words = None

    @classmethod
    def zeros(cls, T: int, C: int, H: int, W: int) -> "SpikeTrain":
        return cls(np.zeros((T, C, H, W), dtype=bool))

    @property
    def bits(self) -> np.ndarray:
        return self._bits

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return self._bits.shape

    T = property(lambda self: self._bits.shape[0])
    C = property(lambda self: self._bits.shape[1])
    H = property(lambda self: self._bits.shape[2])
    W = property(lambda self: self._bits.shape[3])

    @property
    def n_locations(self) -> int:
        return self.C * self.T

    def plane(self, channel: int, timestep: int) -> np.ndarray:
        return self._bits[timestep, channel]

    def planes(self) -> Iterator[tuple[int, np.ndarray]]:
        """Yield ``(address, plane)`` in storage order."""
        for c in range(self.C):
            for t in range(self.T):
                yield c * self.T + t, self._bits[t, c]

    def words(self) -> np.ndarray:
        """Packed planes, shape ``(C * T, words_per_plane)``, storage order."""
        if self._words is None:
            rows = [pack_plane(p) for _, p in self.planes()]
            words = np.stack(rows) if rows else np.zeros((0, 1), dtype=np.uint64)
            words.setflags(write=False)
            self._words = words
        return self._words

    def plane_popcounts(self) -> np.ndarray:
        """Spike count per plane in storage order."""
        return self._bits.sum(axis=(2, 3)).T.ravel()

    @property
    def total_spikes(self) -> int:
        return int(self._bits.sum())

    def flatten_timestep(self, t: int) -> np.ndarray:
        """Channel, row, col flattened vector for timestep ``t``."""
        return self._bits[t].ravel()

    def __eq__(self, other):
        if not isinstance(other, SpikeTrain):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self._bits, other._bits))

    def __hash__(self):
        return hash((self.shape, self._bits.tobytes()))

    def __repr__(self):
        T, C, H, W = self.shape
        return f"SpikeTrain(T={T}, C={C}, H={H}, W={W}, spikes={self.total_spikes})"

    def to_bytes(self) -> bytes:
        T, C, H, W = self.shape
        out = [_HEADER.pack(SPKT_MAGIC, SPKT_VERSION, T, C, H, W)]
        for _, p in self.planes():
            out.append(np.packbits(p, axis=1, bitorder="little").tobytes())
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "SpikeTrain":
        if len(data) < _HEADER.size:
            raise FormatError(f"truncated header: {len(data)} bytes, need {_HEADER.size}")
        magic, version, T, C, H, W = _HEADER.unpack_from(data, 0)
        if magic != SPKT_MAGIC:
            raise FormatError(f"bad magic {magic!r}, expected {SPKT_MAGIC!r}")
        if version != SPKT_VERSION:
            raise FormatError(f"unsupported SPKT version {version}")
        row_bytes = -(-W // 8)
        plane_bytes = H * row_bytes
        need = _HEADER.size + C * T * plane_bytes
        if len(data) < need:
            raise FormatError(f"truncated payload at byte offset {len(data)}, expected {need} bytes")
        if len(data) > need:
            raise FormatError(f"{len(data) - need} trailing bytes after payload")
        bits = np.zeros((T, C, H, W), dtype=bool)
        raw = np.frombuffer(data, dtype=np.uint8, offset=_HEADER.size)
        raw = raw.reshape(C * T, H, row_bytes) if plane_bytes else raw.reshape(C * T, H, 0)
        for addr in range(C * T):
            c, t = divmod(addr, T)
            rows = np.unpackbits(raw[addr], axis=1, bitorder="little")
            if np.any(rows[:, W:]):
                raise FormatError(f"nonzero padding bits in plane {addr}")
            bits[t, c] = rows[:, :W].astype(bool)
        return cls(bits)

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path) -> "SpikeTrain":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())


@dataclass
class MemRegionStats:
    """Access counters for a two-region, clock-gated memory.

    ``kind`` is a label only (e.g. ``"BRAM"``); it selects energy
    coefficients and has no behavioural effect.
    """

    reads: int = 0
    writes: int = 0
    active_region_cycles: list[int] = field(default_factory=lambda: [0, 0])
    kind: str = "BRAM"

    @property
    def accesses(self) -> int:
        return self.reads + self.writes

    def to_dict(self) -> dict:
        return {
            "reads": self.reads,
            "writes": self.writes,
            "active_region_cycles": list(self.active_region_cycles),
            "kind": self.kind,
        }


def gated_access(address: int, capacity: int, stats: MemRegionStats, write: bool = False) -> int:
    """Record one access and return the active region (the address MSB).

    The MSB is taken within ``ceil(log2(capacity))`` address bits; only
    that region's active-cycle counter advances.
    """
    if capacity < 2 or capacity % 2:
        raise DomainError(f"capacity must be even and >= 2, got {capacity}")
    if not 0 <= address < capacity:
        raise DomainError(f"address {address} out of range for capacity {capacity}")
    addr_bits = (capacity - 1).bit_length()
    region = (address >> (addr_bits - 1)) & 1
    stats.active_region_cycles[region] += 1
    if write:
        stats.writes += 1
    else:
        stats.reads += 1
    return region
