"""Integer weight representation, affine dequantization and shift-and-add
constant multiplication."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import DomainError, ShapeError

SUPPORTED_BIT_WIDTHS = (4, 8, 16, 32)
MAX_CSD_TERMS = 8


def int_range(bit_width: int) -> tuple[int, int]:
    """Signed two's-complement range ``(lo, hi)`` for ``bit_width`` bits."""
    return -(1 << (bit_width - 1)), (1 << (bit_width - 1)) - 1


@dataclass(frozen=True)
class QuantParams:
    bit_width: int = 4
    scale_factor: float = 1.0
    zero_point: int = 0

    def __post_init__(self):
        if self.bit_width not in SUPPORTED_BIT_WIDTHS:
            raise DomainError(f"bit_width must be one of {SUPPORTED_BIT_WIDTHS}, got {self.bit_width}")
        if not (np.isfinite(self.scale_factor) and self.scale_factor > 0):
            raise DomainError(f"scale_factor must be positive, got {self.scale_factor}")
        lo, hi = int_range(self.bit_width)
        if int(self.zero_point) != self.zero_point or not lo <= self.zero_point <= hi:
            raise DomainError(f"zero_point {self.zero_point} not representable in {self.bit_width} bits")

    def to_dict(self) -> dict:
        return {
            "bit_width": self.bit_width,
            "scale_factor": self.scale_factor,
            "zero_point": self.zero_point,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QuantParams":
        return cls(int(d["bit_width"]), float(d["scale_factor"]), int(d.get("zero_point", 0)))


@dataclass(frozen=True)
class QuantTensor:
    """Integer tensor together with the parameters that map it to reals."""

    values: np.ndarray
    params: QuantParams

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.size and not np.all(np.equal(np.mod(values, 1), 0)):
            raise DomainError("QuantTensor values must be integers")
        values = values.astype(np.int64)
        lo, hi = int_range(self.params.bit_width)
        if values.size and (values.min() < lo or values.max() > hi):
            raise DomainError(
                f"values outside [{lo}, {hi}] for bit_width {self.params.bit_width}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    def dequantize(self) -> np.ndarray:
        return dequantize(self.values, self.params)


def dequantize(q, params: QuantParams):
    """Affine map ``(q - zero_point) * scale_factor``.

    Works on scalars and arrays; every ``q`` must be representable.
    """
    lo, hi = int_range(params.bit_width)
    arr = np.asarray(q)
    if arr.size and (arr.min() < lo or arr.max() > hi):
        raise DomainError(f"quantized value outside [{lo}, {hi}]")
    out = (arr.astype(np.int64) - params.zero_point).astype(np.float64) * params.scale_factor
    if arr.ndim == 0:
        return float(out)
    return out


def quantize_tensor(t, bit_width: int = 4) -> QuantTensor:
    """Symmetric per-tensor quantization with a max-abs scale.

    An all-zero tensor gets ``scale_factor = 1.0``. Rounding is
    half-to-even (numpy's ``rint``).
    """
    t = np.asarray(t, dtype=np.float64)
    if not np.all(np.isfinite(t)):
        raise DomainError("quantize_tensor requires a finite tensor")
    lo, hi = int_range(bit_width)
    peak = float(np.max(np.abs(t))) if t.size else 0.0
    scale = peak / hi if peak > 0 else 1.0
    values = np.clip(np.rint(t / scale), lo, hi).astype(np.int64)
    return QuantTensor(values, QuantParams(bit_width, scale, 0))


def csd_digits(m: int) -> list[tuple[int, int]]:
    """Canonical signed-digit decomposition of integer ``m``.

    Returns ``[(sign, shift), ...]`` in ascending shift order such that
    ``sum(sign << shift) == m`` with no two adjacent nonzero digits.
    """
    digits = []
    k = 0
    while m != 0:
        if m & 1:
            d = 2 - (m & 3)  # +1 when m % 4 == 1, -1 when m % 4 == 3
            digits.append((d, k))
            m -= d
        m >>= 1
        k += 1
    return digits


def shift_add_multiply(x: int, c: float, frac_bits: int = 0, max_terms: int = MAX_CSD_TERMS):
    """Multiply integer ``x`` by constant ``c`` using only shifts and adds.

    ``c`` is fixed to ``frac_bits`` fractional bits first, so the result
    is the scaled integer ``x * round(c * 2**frac_bits)``. ``x`` may be an
    integer array, in which case every element goes through the same
    shift-add network. Returns ``(product, n_terms)`` where ``n_terms``
    counts the shifted operands summed (the adder-cost proxy).
    """
    if frac_bits < 0:
        raise DomainError("frac_bits must be non-negative")
    m = int(round(c * (1 << frac_bits)))
    digits = csd_digits(m)
    if len(digits) > max_terms:
        raise DomainError(
            f"constant {c!r} needs {len(digits)} signed digits at {frac_bits} fractional bits "
            f"(budget {max_terms})"
        )
    if np.ndim(x) == 0:
        x = int(x)
    else:
        x = np.asarray(x)
        if not np.issubdtype(x.dtype, np.integer):
            raise DomainError("shift_add_multiply needs integer operands")
        x = x.astype(np.int64)
    acc = 0
    for sign, shift in digits:
        acc = acc + (x << shift) if sign > 0 else acc - (x << shift)
    return acc, len(digits)


class SymmetricQuantizer(TransformerMixin, BaseEstimator):
    """Fit a symmetric per-tensor scale, then map reals to integer codes.

    ``transform`` returns integer codes, ``inverse_transform`` maps codes
    back to reals with the fitted scale.
    """

    def __init__(self, bit_width=4):
        self.bit_width = bit_width

    def fit(self, X, y=None):
        qt = quantize_tensor(X, self.bit_width)
        self.params_ = qt.params
        return self

    def transform(self, X):
        check_is_fitted(self, "params_")
        X = np.asarray(X, dtype=np.float64)
        if not np.all(np.isfinite(X)):
            raise DomainError("input must be finite")
        lo, hi = int_range(self.params_.bit_width)
        return np.clip(np.rint(X / self.params_.scale_factor), lo, hi).astype(np.int64)

    def inverse_transform(self, X):
        check_is_fitted(self, "params_")
        X = np.asarray(X)
        if X.ndim == 0:
            raise ShapeError("expected an array of codes")
        return dequantize(X, self.params_)
