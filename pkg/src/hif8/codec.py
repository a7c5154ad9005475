"""Bit-exact codec for the HiF8 tapered 8-bit floating-point format.

A HiF8 byte packs, from the most significant bit down:

    sign | dot prefix | exponent sign + magnitude | mantissa

The dot prefix is a self-delimiting code giving the exponent field
width D (0 through 4 bits).  Wide exponents borrow mantissa bits, so
precision tapers from 3 fraction bits near 1.0 down to 1 bit at the
extremes:

    prefix 11   D=4  |E| in [8, 15]   1 mantissa bit
    prefix 10   D=3  |E| in [4, 7]    2 mantissa bits
    prefix 01   D=2  |E| in [2, 3]    3 mantissa bits
    prefix 001  D=1  |E| = 1          3 mantissa bits
    prefix 0001 D=0   E  = 0          3 mantissa bits
    prefix 0000 DML  sub-range        3-bit field, see below

The exponent is sign-magnitude with a hidden leading magnitude bit, so
D stored bits cover magnitudes [2^(D-1), 2^D - 1].  Normal values decode
as (-1)^S * 2^E * 1.M.  The all-zero prefix (DML) reuses its 3-bit field
M as an extra-low exponent: value (-1)^S * 2^(M-23) for M in [1, 7],
while M = 0 encodes Zero (S=0) or NaN (S=1).  The top positive code of
the D=4 range (E=+15, M=1) is reserved for Infinity in each sign, which
leaves 2^15 as the largest finite magnitude.

Every one of the 256 bit patterns decodes to exactly one of Zero, NaN,
+/-Infinity, or a finite value, and no finite value has two encodings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

__all__ = [
    "NumberClass",
    "CodeClass",
    "DecodedNumber",
    "NotRepresentable",
    "decode",
    "encode_exact",
    "encode_value",
    "classify",
    "enumerate_all",
    "value_table",
    "fraction_width_for_exponent",
    "ZERO_CODE",
    "NAN_CODE",
    "POS_INF_CODE",
    "NEG_INF_CODE",
    "MAX_FINITE_CODE",
    "EXP_MIN",
    "EXP_MAX",
    "MAX_FINITE",
    "MIN_NORMAL",
    "MIN_POSITIVE",
]

# ---------------------------------------------------------------------------
# Format constants
# ---------------------------------------------------------------------------

ZERO_CODE = 0x00
NAN_CODE = 0x80
POS_INF_CODE = 0x6F
NEG_INF_CODE = 0xEF
MAX_FINITE_CODE = 0x6E  # +2^15; the negative twin is 0xEE

EXP_MIN = -22  # smallest value exponent (bottom of the DML ladder)
EXP_MAX = 15  # largest value exponent

MAX_FINITE = 2.0**15
MIN_NORMAL = 2.0**-15  # smallest magnitude outside the DML ladder
MIN_POSITIVE = 2.0**-22

# Mantissa width by exponent field width D (DML rows carry no fraction
# bits once their field is spent on the exponent offset).
_MANTISSA_WIDTH = {0: 3, 1: 3, 2: 3, 3: 2, 4: 1}


class NumberClass(Enum):
    """Value category of a decoded byte."""

    ZERO = "zero"
    FINITE = "finite"
    INFINITY = "infinity"
    NAN = "nan"


class CodeClass(Enum):
    """Encoding category of a byte; splits finite into normal/denormal."""

    ZERO = "zero"
    NORMAL = "normal"
    DENORMAL = "denormal"
    INFINITY = "infinity"
    NAN = "nan"


class NotRepresentable(ValueError):
    """Raised when a value has no exact HiF8 encoding."""


@dataclass(frozen=True)
class DecodedNumber:
    """Exact interpretation of one HiF8 byte.

    Attributes:
        kind: value category (Zero / Finite / Infinity / NaN).
        sign: +1 or -1.  For Zero and NaN this mirrors the stored sign
            bit but carries no numeric meaning.
        exponent: value exponent E in [-22, 15], or None for
            Zero/Infinity/NaN.  Denormal codes are reported with their
            effective exponent (M - 23) and a zero-width fraction.
        fraction: stored fraction bits as an integer, or None.
        fraction_width: number of fraction bits (0 for denormals), or
            None.
        value: the exact float value (0.0, +/-inf, nan, or finite).
    """

    kind: NumberClass
    sign: int
    exponent: int | None
    fraction: int | None
    fraction_width: int | None
    value: float


def fraction_width_for_exponent(e: int) -> int:
    """Fraction bits available at value exponent ``e``.

    Args:
        e: value exponent in [-22, 15].

    Returns:
        3 for |e| <= 3, 2 for |e| in [4, 7], 1 for |e| in [8, 15], and
        0 on the denormal ladder e in [-22, -16].
    """
    if not EXP_MIN <= e <= EXP_MAX:
        raise ValueError(f"exponent {e} outside [{EXP_MIN}, {EXP_MAX}]")
    if e < -15:
        return 0
    a = abs(e)
    if a <= 3:
        return 3
    if a <= 7:
        return 2
    return 1


# ---------------------------------------------------------------------------
# Field packing
# ---------------------------------------------------------------------------


def _exp_field_width(e: int) -> int:
    # Hidden-leading-one magnitudes: D bits reach [2^(D-1), 2^D - 1].
    a = abs(e)
    return 0 if a == 0 else a.bit_length()


def _code_from_fields(sign_bit: int, e: int, m: int) -> int:
    """Pack a finite (exponent, fraction) pair into the low 8 bits."""
    if e < -15:
        # Denormal ladder: 3-bit field holds e + 23 in [1, 7].
        return sign_bit << 7 | (e + 23)
    d = _exp_field_width(e)
    se = 1 if e < 0 else 0
    mag = abs(e)
    if d == 0:
        return sign_bit << 7 | 0x08 | m
    if d == 1:
        return sign_bit << 7 | 0x10 | se << 3 | m
    if d == 2:
        return sign_bit << 7 | 0x20 | se << 4 | (mag & 0x1) << 3 | m
    if d == 3:
        return sign_bit << 7 | 0x40 | se << 4 | (mag & 0x3) << 2 | m
    return sign_bit << 7 | 0x60 | se << 4 | (mag & 0x7) << 1 | m


def _fields_from_code(code: int) -> tuple[int, int | None, int | None, int | None]:
    """Unpack (sign_bit, exponent, fraction, width); exponent None marks
    the DML special row (Zero/NaN)."""
    sign_bit = code >> 7
    low = code & 0x7F
    top2 = low >> 5
    if top2 == 0b11:
        se = (low >> 4) & 1
        mag = 0x8 | ((low >> 1) & 0x7)
        return sign_bit, -mag if se else mag, low & 0x1, 1
    if top2 == 0b10:
        se = (low >> 4) & 1
        mag = 0x4 | ((low >> 2) & 0x3)
        return sign_bit, -mag if se else mag, low & 0x3, 2
    if top2 == 0b01:
        se = (low >> 4) & 1
        mag = 0x2 | ((low >> 3) & 0x1)
        return sign_bit, -mag if se else mag, low & 0x7, 3
    if low & 0x10:
        se = (low >> 3) & 1
        return sign_bit, -1 if se else 1, low & 0x7, 3
    if low & 0x08:
        return sign_bit, 0, low & 0x7, 3
    m = low & 0x7
    if m == 0:
        return sign_bit, None, None, None  # Zero or NaN
    return sign_bit, m - 23, 0, 0  # denormal ladder


def _decode_one(code: int) -> DecodedNumber:
    sign_bit, e, m, w = _fields_from_code(code)
    sign = -1 if sign_bit else 1
    if e is None:
        if sign_bit:
            return DecodedNumber(NumberClass.NAN, sign, None, None, None, math.nan)
        return DecodedNumber(NumberClass.ZERO, sign, None, None, None, 0.0)
    if e == EXP_MAX and m == 1:
        return DecodedNumber(
            NumberClass.INFINITY, sign, None, None, None, sign * math.inf
        )
    value = sign * math.ldexp(1 + m / (1 << w), e) if w else sign * math.ldexp(1.0, e)
    return DecodedNumber(NumberClass.FINITE, sign, e, m, w, value)


# Total decode is cheap enough to precompute for all 256 patterns.
_DECODE_TABLE = tuple(_decode_one(c) for c in range(256))

_CLASS_TABLE = tuple(
    CodeClass.ZERO
    if d.kind is NumberClass.ZERO
    else CodeClass.NAN
    if d.kind is NumberClass.NAN
    else CodeClass.INFINITY
    if d.kind is NumberClass.INFINITY
    else CodeClass.DENORMAL
    if d.exponent is not None and d.exponent < -15
    else CodeClass.NORMAL
    for d in _DECODE_TABLE
)

_VALUE_TO_CODE = {
    d.value: c
    for c, d in enumerate(_DECODE_TABLE)
    if d.kind in (NumberClass.FINITE, NumberClass.ZERO, NumberClass.INFINITY)
}


# ---------------------------------------------------------------------------
# Public API
# ---------------------------------------------------------------------------


def decode(code: int) -> DecodedNumber:
    """Decode one HiF8 byte.

    Args:
        code: bit pattern in [0, 255].

    Returns:
        The exact DecodedNumber; total over all 256 patterns.
    """
    if not 0 <= code <= 255:
        raise ValueError(f"code {code} outside [0, 255]")
    return _DECODE_TABLE[code]


def classify(code: int) -> CodeClass:
    """Category of one byte: Zero, Normal, Denormal, Infinity, or NaN."""
    if not 0 <= code <= 255:
        raise ValueError(f"code {code} outside [0, 255]")
    return _CLASS_TABLE[code]


def encode_exact(number: DecodedNumber) -> int:
    """Re-encode a DecodedNumber; inverse of :func:`decode`.

    Raises:
        NotRepresentable: if the fields name no valid code point, e.g.
            a finite (E=15, M=1) pair, which is the Infinity slot.
    """
    if number.kind is NumberClass.ZERO:
        return ZERO_CODE
    if number.kind is NumberClass.NAN:
        return NAN_CODE
    if number.kind is NumberClass.INFINITY:
        return POS_INF_CODE if number.sign > 0 else NEG_INF_CODE
    e, m, w = number.exponent, number.fraction, number.fraction_width
    if e is None or m is None or w is None:
        raise NotRepresentable("finite number with missing fields")
    if not EXP_MIN <= e <= EXP_MAX:
        raise NotRepresentable(f"exponent {e} outside [{EXP_MIN}, {EXP_MAX}]")
    if w != fraction_width_for_exponent(e):
        raise NotRepresentable(f"fraction width {w} invalid at exponent {e}")
    if not 0 <= m < (1 << w):
        raise NotRepresentable(f"fraction {m} outside [0, {1 << w})")
    if e == EXP_MAX and m == 1:
        raise NotRepresentable("E=15, M=1 is the Infinity pattern")
    return _code_from_fields(0 if number.sign > 0 else 1, e, m)


def encode_value(x: float) -> int:
    """Exact-value encode: the code whose decoded value equals ``x``.

    Args:
        x: a float; must be NaN, +/-inf, or exactly representable.

    Returns:
        The matching code (negative zero maps to the single Zero code).

    Raises:
        NotRepresentable: if ``x`` is finite but not in the value set.
    """
    if math.isnan(x):
        return NAN_CODE
    try:
        return _VALUE_TO_CODE[x]
    except KeyError:
        raise NotRepresentable(f"{x!r} has no exact HiF8 encoding") from None


def enumerate_all() -> list[tuple[int, DecodedNumber]]:
    """All 256 (code, DecodedNumber) pairs in ascending code order."""
    return list(enumerate(_DECODE_TABLE))


def value_table():
    """float64 array of the 256 decoded values, indexed by code."""
    import numpy as np

    return np.array([d.value for d in _DECODE_TABLE], dtype=np.float64)
