"""Rounding engines that carry FP32/FP16/BF16 values into HiF8 codes.

All modes share one frame: split the source magnitude into the HiF8
grid point below it (K kept fraction bits at the target binade) and the
discarded remainder F in [0, 1) ulps, then decide whether to step up.

    ta    nearest, ties away from zero          up iff F >= 1/2
    te    nearest, ties to even                 tie goes to even K
    sr    stochastic, uniform threshold T       up iff F >= T
    sr14  self-seeded stochastic for FP32       T = low 14 source bits
    sr2   self-seeded stochastic for FP16/BF16  T = (lsb, 1) quarters
    hr    hybrid                                ta near 1.0, else sr14/sr2

The self-seeded modes draw their threshold from bits of the source value
itself, so they need no RNG and are bit-reproducible.  ``sr14`` compares
the top 14 discarded bits against the bottom 14 source fraction bits as
unsigned integers; ``sr2`` compares the top 2 discarded bits against the
two-bit threshold (source_lsb, 1), i.e. 1/4 or 3/4.  ``hr`` uses ties-away
where the source exponent is small (|E| < 4) and the matching self-seeded
mode elsewhere.  Exact values (F = 0) are never perturbed by any mode.

Out-of-range results are resolved by policy: magnitudes reaching the
Infinity slot (1.5 * 2^15) or beyond either become +/-Infinity or
saturate to +/-2^15; NaN either propagates or collapses to Zero.
Magnitudes below 2^-23 fall to Zero, the gap up to 2^-22 rounds by the
same F rule with ulp 2^-22.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from hif8 import codec

__all__ = [
    "RoundingMode",
    "SourceFormat",
    "OverflowPolicy",
    "NanPolicy",
    "RoundingSpec",
    "RoundingWork",
    "round_array",
    "round_value",
    "round_ta",
    "round_te",
    "round_sr_standard",
    "round_sr_simplified",
    "round_hybrid",
    "round_half_away",
    "round_half_even",
    "overflow_code",
    "nan_code",
    "decompose",
    "threshold_rng",
    "bf16_bits_from_f32",
    "f32_from_bf16_bits",
]


class RoundingMode(Enum):
    TA = "ta"
    TE = "te"
    SR = "sr"
    SR14 = "sr14"
    SR2 = "sr2"
    HR = "hr"


class SourceFormat(Enum):
    FP32 = "fp32"
    FP16 = "fp16"
    BF16 = "bf16"


class OverflowPolicy(Enum):
    TO_INFINITY = "to_infinity"
    SATURATE = "saturate"


class NanPolicy(Enum):
    PROPAGATE = "propagate"
    TO_ZERO = "to_zero"


@dataclass(frozen=True)
class RoundingSpec:
    """Full description of one conversion discipline.

    Attributes:
        mode: rounding rule.
        source: format whose bits feed the self-seeded thresholds.
        overflow: what to do when rounding reaches the Infinity slot.
        nan: what to do with NaN inputs.
        seed: RNG seed; required when mode is SR and no explicit
            generator is passed to the rounding call.
    """

    mode: RoundingMode = RoundingMode.TA
    source: SourceFormat = SourceFormat.FP32
    overflow: OverflowPolicy = OverflowPolicy.TO_INFINITY
    nan: NanPolicy = NanPolicy.PROPAGATE
    seed: int | None = None

    def __post_init__(self):
        if self.mode is RoundingMode.SR14 and self.source is not SourceFormat.FP32:
            raise ValueError("sr14 thresholds come from FP32 source bits")
        if self.mode is RoundingMode.SR2 and self.source is SourceFormat.FP32:
            raise ValueError("sr2 thresholds come from FP16/BF16 source bits")


def threshold_rng(seed: int) -> np.random.Generator:
    """Counter-based generator for standard-SR thresholds.

    Thresholds are a pure function of (seed, draw index), so a fixed
    seed reproduces the same stream regardless of how the caller chunks
    the work.
    """
    return np.random.Generator(np.random.Philox(seed))


# ---------------------------------------------------------------------------
# Lookup tables
# ---------------------------------------------------------------------------

# Fraction width per binade, indexed by E + 22.
_WIDTH = np.array(
    [codec.fraction_width_for_exponent(e) for e in range(codec.EXP_MIN, codec.EXP_MAX + 1)],
    dtype=np.int64,
)

# Positive code for (E + 22, fraction).  The Infinity slot (15, 1) stays
# zero; rounding reaches it only through the overflow path.
_ENCODE = np.zeros((38, 8), dtype=np.int64)
for _c, _d in codec.enumerate_all():
    if _d.kind is codec.NumberClass.FINITE and _d.sign > 0:
        _ENCODE[_d.exponent + 22, _d.fraction] = _c
del _c, _d


# ---------------------------------------------------------------------------
# Source-format helpers
# ---------------------------------------------------------------------------


def bf16_bits_from_f32(x: np.ndarray) -> np.ndarray:
    """Round float32 values to BF16 bit patterns (nearest-even)."""
    u = np.ascontiguousarray(x, dtype=np.float32).view(np.uint32)
    is_nan = ((u >> 23) & 0xFF == 0xFF) & (u & 0x7FFFFF != 0)
    rounded = (u + np.uint32(0x7FFF) + ((u >> 16) & np.uint32(1))) >> 16
    quiet = (u >> 16) | np.uint32(0x0040)  # keep NaN a NaN
    return np.where(is_nan, quiet, rounded).astype(np.uint16)


def f32_from_bf16_bits(bits: np.ndarray) -> np.ndarray:
    """Exact widening of BF16 bit patterns to float32."""
    return (np.asarray(bits, dtype=np.uint16).astype(np.uint32) << 16).view(np.float32)


def _canonicalize(flat: np.ndarray, source: SourceFormat):
    """Project onto the source format; return (values, t14, src_lsb).

    t14 is the low-14-bit threshold field for FP32 sources, src_lsb the
    fraction LSB for FP16/BF16 sources; the inapplicable one is None.
    """
    if source is SourceFormat.FP16:
        with np.errstate(over="ignore"):
            h = flat.astype(np.float16)
        return h.astype(np.float32), None, (h.view(np.uint16) & 1).astype(np.int64)
    if source is SourceFormat.BF16:
        b = bf16_bits_from_f32(flat)
        return f32_from_bf16_bits(b), None, (b & 1).astype(np.int64)
    t14 = (flat.view(np.uint32) & np.uint32(0x3FFF)).astype(np.int64)
    return flat, t14, None


# ---------------------------------------------------------------------------
# Integer significand rounding (shared by the kernel, tests, and docs)
# ---------------------------------------------------------------------------


def round_half_away(kept: int, discarded: int, width: int) -> int:
    """Round kept.discarded to an integer, ties away from zero.

    ``discarded`` holds ``width`` bits below the point.  May return
    kept + 1 == 2^(kept width); the caller handles the carry.
    """
    half = 1 << (width - 1)
    return kept + (1 if discarded >= half else 0)


def round_half_even(kept: int, discarded: int, width: int) -> int:
    """Round kept.discarded to an integer, ties to even."""
    half = 1 << (width - 1)
    up = discarded > half or (discarded == half and kept & 1)
    return kept + (1 if up else 0)


# ---------------------------------------------------------------------------
# Policy resolution
# ---------------------------------------------------------------------------


def overflow_code(sign: int, spec: RoundingSpec) -> int:
    """Code for a rounding result on or beyond the Infinity slot."""
    if spec.overflow is OverflowPolicy.TO_INFINITY:
        base = codec.POS_INF_CODE
    else:
        base = codec.MAX_FINITE_CODE
    return base | (0x80 if sign < 0 else 0x00)


def nan_code(spec: RoundingSpec) -> int:
    """Code for a NaN input under the spec's NaN policy."""
    if spec.nan is NanPolicy.PROPAGATE:
        return codec.NAN_CODE
    return codec.ZERO_CODE


# ---------------------------------------------------------------------------
# Vectorized kernel
# ---------------------------------------------------------------------------


def round_array(
    x,
    spec: RoundingSpec = RoundingSpec(),
    *,
    scale_exp: int = 0,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Round an array of values to HiF8 codes.

    Args:
        x: array-like; converted to float32, then projected onto
            ``spec.source`` before rounding.
        spec: rounding discipline.
        scale_exp: the value actually rounded is x * 2^scale_exp.  The
            hybrid mode's |E| < 4 test and the self-seeded thresholds
            read the *unscaled* source, so a power-of-two scale shifts
            the grid without changing any rounding decision pattern.
        rng: generator for standard SR; defaults to a counter-based
            stream keyed by ``spec.seed``.  One uniform is consumed per
            element, in flat row-major order, whether or not the
            element needs it.

    Returns:
        uint8 array of codes, same shape as ``x``.
    """
    arr = np.ascontiguousarray(x, dtype=np.float32)
    flat = arr.reshape(-1)
    n = flat.size

    if spec.mode is RoundingMode.SR:
        if rng is None:
            if spec.seed is None:
                raise ValueError("standard stochastic rounding requires a seed or rng")
            rng = threshold_rng(spec.seed)
        t_uniform = rng.random(n)
    else:
        t_uniform = None

    flat, t14, src_lsb = _canonicalize(flat, spec.source)

    # Unscaled source exponent, used only by the hybrid mode dispatch.
    u0 = flat.view(np.uint32)
    e0 = ((u0 >> 23) & np.uint32(0xFF)).astype(np.int64) - 127

    if scale_exp:
        with np.errstate(over="ignore", under="ignore"):
            flat = np.ldexp(flat, np.int32(scale_exp))

    u = flat.view(np.uint32)
    sign_neg = (u >> 31).astype(bool)
    mag = u & np.uint32(0x7FFFFFFF)
    biased = (mag >> 23).astype(np.int64)
    frac = (mag & np.uint32(0x7FFFFF)).astype(np.int64)
    e = biased - 127

    is_nan = (biased == 255) & (frac != 0)
    is_inf = (biased == 255) & (frac == 0)
    is_zero = mag == 0
    special = is_nan | is_inf | is_zero
    bottom = ~special & ((biased == 0) | (e < -22))
    too_big = ~special & (e > 15)
    inrange = ~(special | bottom | too_big)

    # In-range split: kept fraction bits and discarded remainder.
    idx = np.clip(e + 22, 0, 37)
    k = _WIDTH[idx]
    disc_w = 23 - k
    kept = frac >> disc_w
    disc = frac & ((np.int64(1) << disc_w) - 1)
    half = np.int64(1) << (disc_w - 1)

    # Bottom region: F in (0, 1) ulps of 2^-22, computed exactly.
    # Zeroed outside its region so the int casts below stay in range.
    absv = np.abs(flat.astype(np.float64))
    f_bot = np.where(bottom, np.ldexp(absv, 22), 0.0)

    mode = spec.mode
    if mode in (RoundingMode.HR, RoundingMode.TA):
        up_ta = disc >= half
        upb_ta = f_bot >= 0.5
    if mode in (RoundingMode.HR, RoundingMode.SR14, RoundingMode.SR2):
        if spec.source is SourceFormat.FP32:
            f14 = disc >> (disc_w - 14)
            up_ss = (disc > 0) & (f14 >= t14)
            upb_ss = (f_bot > 0) & (np.floor(np.ldexp(f_bot, 14)).astype(np.int64) >= t14)
        else:
            t2 = 1 + 2 * src_lsb  # quarters: 0.25 or 0.75
            f2 = disc >> (disc_w - 2)
            up_ss = (disc > 0) & (f2 >= t2)
            upb_ss = (f_bot > 0) & (np.floor(f_bot * 4).astype(np.int64) >= t2)

    if mode is RoundingMode.TA:
        up, up_bot = up_ta, upb_ta
    elif mode is RoundingMode.TE:
        # Tie parity counts the hidden bit: at zero-width binades the
        # down candidate is 1 * ulp (odd), so the tie steps up.
        parity = (kept + (np.int64(1) << k)) & 1
        up = (disc > half) | ((disc == half) & (parity == 1))
        up_bot = f_bot > 0.5
    elif mode is RoundingMode.SR:
        f_val = np.ldexp(disc.astype(np.float64), -disc_w)
        up = (disc > 0) & (f_val >= t_uniform)
        up_bot = (f_bot > 0) & (f_bot >= t_uniform)
    elif mode in (RoundingMode.SR14, RoundingMode.SR2):
        up, up_bot = up_ss, upb_ss
    else:  # HR
        near_one = np.abs(e0) < 4
        up = np.where(near_one, up_ta, up_ss)
        up_bot = np.where(near_one, upb_ta, upb_ss)

    j = kept + up
    carry = j >> k
    e2 = e + carry
    j = np.where(carry > 0, 0, j)
    hits_inf_slot = inrange & ((e2 > 15) | ((e2 == 15) & (j == 1)))

    norm_codes = _ENCODE[np.clip(e2 + 22, 0, 37), np.clip(j, 0, 7)]
    bot_codes = np.where(up_bot, 0x01, 0x00)

    sign_bit = np.where(sign_neg, 0x80, 0x00).astype(np.int64)
    ov_code = overflow_code(1, spec) & 0x7F
    nan_out = nan_code(spec)

    out = np.zeros(n, dtype=np.int64)
    overflowed = too_big | is_inf | hits_inf_slot
    ok = inrange & ~hits_inf_slot
    out[ok] = norm_codes[ok] | sign_bit[ok]
    nz_bot = bottom & (bot_codes > 0)
    out[nz_bot] = bot_codes[nz_bot] | sign_bit[nz_bot]
    out[overflowed] = ov_code | sign_bit[overflowed]
    out[is_nan] = nan_out

    return out.astype(np.uint8).reshape(arr.shape)


# ---------------------------------------------------------------------------
# Scalar conveniences
# ---------------------------------------------------------------------------


def round_value(x, spec: RoundingSpec = RoundingSpec(), *, rng=None) -> int:
    """Round one value to a HiF8 code."""
    return int(round_array(np.array([x], dtype=np.float32), spec, rng=rng)[0])


def round_ta(x, **kw) -> int:
    return round_value(x, RoundingSpec(mode=RoundingMode.TA, **kw))


def round_te(x, **kw) -> int:
    return round_value(x, RoundingSpec(mode=RoundingMode.TE, **kw))


def round_sr_standard(x, seed: int | None = None, *, rng=None, **kw) -> int:
    return round_value(x, RoundingSpec(mode=RoundingMode.SR, seed=seed, **kw), rng=rng)


def round_sr_simplified(x, source: SourceFormat = SourceFormat.FP32, **kw) -> int:
    """Self-seeded SR: sr14 for FP32 sources, sr2 for FP16/BF16."""
    mode = RoundingMode.SR14 if source is SourceFormat.FP32 else RoundingMode.SR2
    return round_value(x, RoundingSpec(mode=mode, source=source, **kw))


def round_hybrid(x, source: SourceFormat = SourceFormat.FP32, **kw) -> int:
    return round_value(x, RoundingSpec(mode=RoundingMode.HR, source=source, **kw))


# ---------------------------------------------------------------------------
# Introspection
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RoundingWork:
    """The two candidates and thresholds behind one rounding decision.

    Attributes:
        kept_value: grid value toward zero (signed).
        away_value: next grid value away from zero (signed).  At the top
            binade this is the 1.5 * 2^15 overflow threshold.
        fraction: F in [0, 1), the source's position between the two.
        ulp: grid spacing at the target binade.
        t14: 14-bit self-seeded threshold (FP32 sources) or None.
        t2: 0.25 / 0.75 self-seeded threshold (FP16/BF16) or None.
    """

    kept_value: float
    away_value: float
    fraction: float
    ulp: float
    t14: int | None
    t2: float | None


def decompose(x, source: SourceFormat = SourceFormat.FP32) -> RoundingWork:
    """Expose the kept/discarded split for one finite nonzero value.

    Args:
        x: finite nonzero value with |x| < 1.5 * 2^15 after projection
            onto ``source``.
        source: source format supplying threshold bits.

    Returns:
        RoundingWork with exact candidates, F, and thresholds.
    """
    flat = np.array([x], dtype=np.float32)
    flat, t14, src_lsb = _canonicalize(flat, source)
    v = float(flat[0])
    if not np.isfinite(v) or v == 0.0:
        raise ValueError("decompose needs a finite nonzero value")
    m = abs(v)
    sign = 1.0 if v > 0 else -1.0
    if m < 2.0**-22:
        kept, ulp = 0.0, 2.0**-22
    else:
        e = math.frexp(m)[1] - 1
        if e > 15 or (e == 15 and m >= 1.5 * 2.0**15):
            raise ValueError("value rounds beyond the finite range")
        ulp = math.ldexp(1.0, e - codec.fraction_width_for_exponent(e))
        kept = math.floor(m / ulp) * ulp
    fraction = (m - kept) / ulp
    return RoundingWork(
        kept_value=sign * kept,
        away_value=sign * (kept + ulp),
        fraction=fraction,
        ulp=ulp,
        t14=int(t14[0]) if t14 is not None else None,
        t2=0.25 + 0.5 * int(src_lsb[0]) if src_lsb is not None else None,
    )
