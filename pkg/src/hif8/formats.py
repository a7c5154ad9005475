"""Fixed-field 8-bit float formats (E4M3, E5M2) and per-format precision
profiles, for side-by-side comparison with HiF8.

E4M3: 1 sign, 4 exponent (bias 7), 3 mantissa.  No infinities; the two
S.1111.111 patterns are NaN, which stretches the max finite to 448.
Denormals cover M * 2^-9.

E5M2: 1 sign, 5 exponent (bias 15), 2 mantissa.  Standard special
cases: exponent 31 is Infinity (M=0) or NaN, denormals cover M * 2^-16.

Both formats keep a constant mantissa width for normals; only HiF8
tapers.  The precision profile of a format lists, per binade, how many
fraction bits survive after normalization, so the three formats can be
compared on one axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from hif8 import codec
from hif8.codec import DecodedNumber, NumberClass

__all__ = [
    "FormatDescriptor",
    "decode_fp8",
    "precision_profile",
    "descriptor",
    "format_value_table",
    "round_to_nearest_value",
    "FORMAT_NAMES",
]

FORMAT_NAMES = ("hif8", "e4m3", "e5m2")


@dataclass(frozen=True)
class FormatDescriptor:
    """Static shape of one 8-bit format.

    Attributes:
        name: "hif8", "e4m3", or "e5m2".
        exp_min: lowest populated binade (after normalizing denormals).
        exp_min_normal: lowest binade reachable without denormals.
        exp_max: highest populated binade.
        max_finite: largest finite magnitude.
        min_positive: smallest positive magnitude.
        has_infinity: whether the format encodes +/-Infinity.
        profile: ((binade, fraction_bits), ...) ascending by binade.
    """

    name: str
    exp_min: int
    exp_min_normal: int
    exp_max: int
    max_finite: float
    min_positive: float
    has_infinity: bool
    profile: tuple[tuple[int, int], ...]


def _normalize(sign: int, numerator: int, scale: int) -> DecodedNumber:
    """Express numerator * 2^scale as 1.F * 2^E with minimal F width."""
    width = numerator.bit_length() - 1
    e = scale + width
    fraction = numerator - (1 << width)
    value = sign * math.ldexp(numerator, scale)
    return DecodedNumber(NumberClass.FINITE, sign, e, fraction, width, value)


def _decode_e4m3(code: int) -> DecodedNumber:
    sign = -1 if code & 0x80 else 1
    exp_field = (code >> 3) & 0xF
    m = code & 0x7
    if exp_field == 0:
        if m == 0:
            return DecodedNumber(NumberClass.ZERO, sign, None, None, None, sign * 0.0)
        return _normalize(sign, m, -9)
    if exp_field == 0xF and m == 0x7:
        return DecodedNumber(NumberClass.NAN, sign, None, None, None, math.nan)
    e = exp_field - 7
    return DecodedNumber(NumberClass.FINITE, sign, e, m, 3, sign * math.ldexp(1 + m / 8, e))


def _decode_e5m2(code: int) -> DecodedNumber:
    sign = -1 if code & 0x80 else 1
    exp_field = (code >> 2) & 0x1F
    m = code & 0x3
    if exp_field == 0:
        if m == 0:
            return DecodedNumber(NumberClass.ZERO, sign, None, None, None, sign * 0.0)
        return _normalize(sign, m, -16)
    if exp_field == 0x1F:
        if m == 0:
            return DecodedNumber(
                NumberClass.INFINITY, sign, None, None, None, sign * math.inf
            )
        return DecodedNumber(NumberClass.NAN, sign, None, None, None, math.nan)
    e = exp_field - 15
    return DecodedNumber(NumberClass.FINITE, sign, e, m, 2, sign * math.ldexp(1 + m / 4, e))


_FP8_DECODERS = {"e4m3": _decode_e4m3, "e5m2": _decode_e5m2}


def decode_fp8(code: int, variant: str) -> DecodedNumber:
    """Decode one byte of a fixed-field FP8 variant.

    Args:
        code: bit pattern in [0, 255].
        variant: "e4m3" or "e5m2".

    Returns:
        DecodedNumber with denormals normalized to 1.F * 2^E form.
    """
    if variant not in _FP8_DECODERS:
        raise ValueError(f"unknown FP8 variant {variant!r}")
    if not 0 <= code <= 255:
        raise ValueError(f"code {code} outside [0, 255]")
    return _FP8_DECODERS[variant](code)


def _decoded_table(name: str) -> list[DecodedNumber]:
    if name == "hif8":
        return [d for _, d in codec.enumerate_all()]
    return [decode_fp8(c, name) for c in range(256)]


def precision_profile(name: str) -> list[tuple[int, int]]:
    """Fraction bits per binade, ascending, for one format.

    Each populated binade contributes one (binade, bits) row, where
    bits is the normalized fraction width of the values living there.
    """
    widths: dict[int, int] = {}
    for d in _decoded_table(name):
        if d.kind is NumberClass.FINITE and d.sign > 0:
            widths[d.exponent] = max(widths.get(d.exponent, 0), d.fraction_width)
    return sorted(widths.items())


# Smallest normal binade, 1 - bias for the IEEE-style pair.
_EXP_MIN_NORMAL = {"hif8": -15, "e4m3": -6, "e5m2": -14}


def _build_descriptor(name: str) -> FormatDescriptor:
    table = _decoded_table(name)
    finite = [d.value for d in table if d.kind is NumberClass.FINITE]
    profile = tuple(precision_profile(name))
    return FormatDescriptor(
        name=name,
        exp_min=profile[0][0],
        exp_min_normal=_EXP_MIN_NORMAL[name],
        exp_max=profile[-1][0],
        max_finite=max(finite),
        min_positive=min(v for v in finite if v > 0),
        has_infinity=any(d.kind is NumberClass.INFINITY for d in table),
        profile=profile,
    )


_DESCRIPTORS = {name: _build_descriptor(name) for name in FORMAT_NAMES}

HIF8 = _DESCRIPTORS["hif8"]
E4M3 = _DESCRIPTORS["e4m3"]
E5M2 = _DESCRIPTORS["e5m2"]


def descriptor(name: str) -> FormatDescriptor:
    """Descriptor for "hif8", "e4m3", or "e5m2"."""
    try:
        return _DESCRIPTORS[name]
    except KeyError:
        raise ValueError(f"unknown format {name!r}") from None


def format_value_table(name: str) -> np.ndarray:
    """float64 array of all 256 decoded values, indexed by code."""
    if name == "hif8":
        return codec.value_table()
    return np.array([decode_fp8(c, name).value for c in range(256)], dtype=np.float64)


def _finite_grid(name: str) -> np.ndarray:
    table = _decoded_table(name)
    vals = sorted({d.value for d in table if d.kind is not NumberClass.NAN}
                  - {math.inf, -math.inf})
    return np.array(vals, dtype=np.float64)


_GRIDS = {name: _finite_grid(name) for name in FORMAT_NAMES}


def round_to_nearest_value(x, name: str) -> np.ndarray:
    """Saturating round-to-nearest (ties away from zero) onto a format's
    finite value grid.

    Used for cross-format error comparisons: every finite input maps to
    the closest finite value of the target format, infinities saturate
    to the max finite magnitude, NaN passes through.

    Args:
        x: array-like of floats.
        name: "hif8", "e4m3", or "e5m2".

    Returns:
        float64 array of rounded values, same shape as ``x``.
    """
    if name not in _GRIDS:
        raise ValueError(f"unknown format {name!r}")
    grid = _GRIDS[name]
    v = np.asarray(x, dtype=np.float64)
    out = np.empty_like(v)
    flat = v.ravel()
    res = out.ravel()

    nan_mask = np.isnan(flat)
    work = np.where(nan_mask, 0.0, flat)
    work = np.clip(work, grid[0], grid[-1])

    idx = np.searchsorted(grid, work)
    idx = np.clip(idx, 1, len(grid) - 1)
    lo = grid[idx - 1]
    hi = grid[idx]
    d_lo = work - lo
    d_hi = hi - work
    take_hi = (d_hi < d_lo) | ((d_hi == d_lo) & (work >= 0))
    res[:] = np.where(take_hi, hi, lo)
    res[nan_mask] = np.nan
    return out
