"""Scalar element codecs for block floating-point formats.

Covers the narrow element encodings used by microscaling block formats:
FP4 (E2M1), FP6 (E2M3, E3M2), FP8 (E4M3, E5M2) and the sign/integer/fraction
element types of the block-integer formats (INT8, INT4), plus the two shared
scale encodings (E8M0 power-of-two bytes and E4M3 scale bytes).

Conversion policy:
  - decode is exact (every code maps to one float64 value, or to a
    non-finite marker for reserved NaN/Inf patterns);
  - encode is round-to-nearest, ties-to-even on the decodable grid, with
    saturating (non-NaN) overflow at the largest finite magnitude;
  - negative zero survives a round trip bit-exactly.

Scalar entry points (`encode_element` / `decode_element`) operate on
`ScalarCode` values.  The `encode_array` / `decode_array` pair is the
vectorized core used by the block codecs; both produce identical results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "ALL_ZERO",
    "SCALE_NAN",
    "ElementFormat",
    "ScalarCode",
    "E2M1",
    "E2M3",
    "E3M2",
    "E4M3",
    "E5M2",
    "INT8",
    "INT4",
    "ELEMENT_FORMATS",
    "decode_element",
    "encode_element",
    "decode_array",
    "encode_array",
    "decode_scale_e8m0",
    "encode_scale_e4m3",
    "E4M3_MAX",
    "E8M0_BIAS",
]

E8M0_BIAS = 127
E4M3_MAX = 448.0


class _Sentinel:
    __slots__ = ("_name",)

    def __init__(self, name: str) -> None:
        self._name = name

    def __repr__(self) -> str:
        return self._name


#: Reserved scale byte 0x00: the whole block is flushed to zero.
ALL_ZERO = _Sentinel("ALL_ZERO")

#: Scale byte 0xFF: E8M0 NaN marker.
SCALE_NAN = _Sentinel("SCALE_NAN")


@dataclass(frozen=True)
class ElementFormat:
    """Descriptor of one scalar element encoding.

    For floating-point modes the code layout is [sign | exponent | mantissa]
    with an implicit leading one for normals and IEEE-style subnormals at
    exponent zero.  Integer mode stores [sign | integer bit | fraction] with
    no exponent field; its value is ``(-1)^s * (i + f / 2^frac_bits)``.
    """

    name: str
    exp_bits: int
    man_bits: int
    bias: int
    has_subnormals: bool = True
    integer_mode: bool = False
    frac_bits: int = 0
    # E4M3 reserves only sign.1111.111 for NaN; E5M2 keeps IEEE Inf/NaN.
    nan_at_max_mantissa: bool = False
    ieee_special_exponent: bool = False

    @property
    def width(self) -> int:
        """Total code width in bits."""
        if self.integer_mode:
            return 2 + self.frac_bits
        return 1 + self.exp_bits + self.man_bits

    @property
    def e_max(self) -> int:
        """Largest private exponent a stored element can take."""
        if self.integer_mode:
            return 0
        top = (1 << self.exp_bits) - 1 - self.bias
        return top - 1 if self.ieee_special_exponent else top

    @property
    def max_norm(self) -> float:
        """Largest finite decodable magnitude."""
        if self.integer_mode:
            return 2.0 - 2.0 ** (-self.frac_bits)
        mmax = (1 << self.man_bits) - 1
        if self.nan_at_max_mantissa:
            mmax -= 1
        return math.ldexp(1.0 + mmax / (1 << self.man_bits), self.e_max)

    @property
    def ext_mant_bits(self) -> int:
        """Fraction width available when the exponent field is repurposed
        as extra mantissa for a block-max element."""
        if self.integer_mode:
            return self.frac_bits + 1
        return self.exp_bits + self.man_bits


@dataclass(frozen=True)
class ScalarCode:
    """A raw bit pattern of a known width."""

    bits: int
    width: int

    def __post_init__(self) -> None:
        if not 0 <= self.bits < (1 << self.width):
            raise ValueError(f"code 0x{self.bits:x} does not fit in {self.width} bits")


E2M1 = ElementFormat("e2m1", exp_bits=2, man_bits=1, bias=1)
E2M3 = ElementFormat("e2m3", exp_bits=2, man_bits=3, bias=1)
E3M2 = ElementFormat("e3m2", exp_bits=3, man_bits=2, bias=3)
E4M3 = ElementFormat("e4m3", exp_bits=4, man_bits=3, bias=7, nan_at_max_mantissa=True)
E5M2 = ElementFormat("e5m2", exp_bits=5, man_bits=2, bias=15, ieee_special_exponent=True)
INT8 = ElementFormat("int8", exp_bits=0, man_bits=0, bias=0, integer_mode=True, frac_bits=6)
INT4 = ElementFormat("int4", exp_bits=0, man_bits=0, bias=0, integer_mode=True, frac_bits=2)

ELEMENT_FORMATS = {f.name: f for f in (E2M1, E2M3, E3M2, E4M3, E5M2, INT8, INT4)}


# ── grid construction ────────────────────────────────────────────


@lru_cache(maxsize=None)
def _positive_grid(fmt: ElementFormat) -> np.ndarray:
    """Finite decodable magnitudes in ascending order.

    Index i is exactly the magnitude part of the code (sign bit stripped);
    reserved NaN/Inf patterns are excluded, so the last entry is max_norm.
    """
    if fmt.integer_mode:
        n = 1 << (fmt.frac_bits + 1)
        return np.arange(n, dtype=np.float64) / (1 << fmt.frac_bits)
    vals = []
    msize = 1 << fmt.man_bits
    # exponent field 0: zero and subnormals
    for m in range(msize):
        vals.append(math.ldexp(m / msize, 1 - fmt.bias))
    top = (1 << fmt.exp_bits) - 1
    if fmt.ieee_special_exponent:
        top -= 1
    for e in range(1, top + 1):
        mtop = msize
        if fmt.nan_at_max_mantissa and e == top:
            mtop = msize - 1
        for m in range(mtop):
            vals.append(math.ldexp(1.0 + m / msize, e - fmt.bias))
    return np.asarray(vals, dtype=np.float64)


@lru_cache(maxsize=None)
def _grid_midpoints(fmt: ElementFormat) -> np.ndarray:
    g = _positive_grid(fmt)
    # adjacent grid points are dyadic, so midpoints are exact in float64
    return (g[:-1] + g[1:]) / 2.0


@lru_cache(maxsize=None)
def _decode_table(fmt: ElementFormat) -> np.ndarray:
    """float64 lookup table over all 2^width codes (NaN/Inf included)."""
    grid = _positive_grid(fmt)
    half = 1 << (fmt.width - 1)
    table = np.empty(2 * half, dtype=np.float64)
    for mag in range(half):
        if mag < len(grid):
            v = grid[mag]
        elif fmt.ieee_special_exponent and mag == len(grid):
            v = math.inf
        else:
            v = math.nan
        table[mag] = v
        table[half + mag] = -v  # -0.0 for mag == 0
    return table


# ── vectorized codec ─────────────────────────────────────────────


def decode_array(codes: np.ndarray, fmt: ElementFormat) -> np.ndarray:
    """Decode an array of raw codes to float64 values."""
    return _decode_table(fmt)[np.asarray(codes, dtype=np.intp)]


def _magnitude_indices(a: np.ndarray, fmt: ElementFormat, ties: str) -> np.ndarray:
    """Nearest-grid indices for non-negative values.

    ties='even' rounds midpoints to the even code (normal RNE);
    ties='away' rounds midpoints to the larger magnitude (only used to rank
    elements inside a block, never to produce stored codes).
    """
    mid = _grid_midpoints(fmt)
    right = np.searchsorted(mid, a, side="right")
    if ties == "away":
        return right
    left = np.searchsorted(mid, a, side="left")
    return np.where(left % 2 == 0, left, right)


def encode_array(values: np.ndarray, fmt: ElementFormat, *, _ties: str = "even") -> np.ndarray:
    """Encode float64 values with RNE and saturating overflow.

    Raises ValueError on non-finite input; these element formats have no
    encodable NaN or infinity.
    """
    v = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise ValueError("non-finite input")
    sign = np.signbit(v)
    idx = _magnitude_indices(np.abs(v), fmt, _ties)
    codes = idx.astype(np.uint8)
    codes |= sign.astype(np.uint8) << (fmt.width - 1)
    return codes


def decode_element(code: ScalarCode | int, fmt: ElementFormat) -> float:
    """Decode one code; reserved patterns yield math.nan / +-math.inf."""
    bits = code.bits if isinstance(code, ScalarCode) else int(code)
    if isinstance(code, ScalarCode) and code.width != fmt.width:
        raise ValueError(f"code width {code.width} != format width {fmt.width}")
    if not 0 <= bits < (1 << fmt.width):
        raise ValueError(f"code 0x{bits:x} out of range for {fmt.name}")
    return float(_decode_table(fmt)[bits])


def encode_element(value: float, fmt: ElementFormat) -> ScalarCode:
    """Encode one finite value (RNE, saturating) to a ScalarCode."""
    code = encode_array(np.asarray([value]), fmt)[0]
    return ScalarCode(int(code), fmt.width)


# ── shared scale codecs ──────────────────────────────────────────


def decode_scale_e8m0(code: ScalarCode | int):
    """Decode an E8M0 scale byte.

    Returns the unbiased exponent as an int, ALL_ZERO for the reserved
    0x00 byte (whole block flushed to zero), or SCALE_NAN for 0xFF.
    """
    bits = code.bits if isinstance(code, ScalarCode) else int(code)
    if not 0 <= bits <= 0xFF:
        raise ValueError(f"scale byte 0x{bits:x} out of range")
    if bits == 0x00:
        return ALL_ZERO
    if bits == 0xFF:
        return SCALE_NAN
    return bits - E8M0_BIAS


def encode_scale_e4m3(value: float) -> ScalarCode:
    """Encode a positive finite scale onto the E4M3 grid (RNE, saturates
    at 448).  Used by the 16-element-block codec with real-valued scales."""
    if not (math.isfinite(value) and value > 0.0):
        raise ValueError("scale must be positive and finite")
    return encode_element(value, E4M3)


# ── extended-mantissa helpers (block-max storage) ────────────────


def ext_decode_magnitude(mant: np.ndarray | int, fmt: ElementFormat) -> np.ndarray | float:
    """Value of an extended mantissa field: 2^e_max * (1 + mant / 2^X)."""
    x = fmt.ext_mant_bits
    scaled = 1.0 + np.asarray(mant, dtype=np.float64) / (1 << x)
    out = np.ldexp(scaled, fmt.e_max)
    return float(out) if np.isscalar(mant) or np.ndim(mant) == 0 else out


def ext_encode_magnitude(a: np.ndarray, fmt: ElementFormat) -> np.ndarray:
    """RNE an absolute value (already divided by the block scale) onto the
    extended-mantissa grid of the block-max element, clamped to the grid."""
    x = fmt.ext_mant_bits
    t = np.ldexp(np.asarray(a, dtype=np.float64), -fmt.e_max) - 1.0
    m = np.rint(np.ldexp(t, x))
    return np.clip(m, 0, (1 << x) - 1).astype(np.int64)
