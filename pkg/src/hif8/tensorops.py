"""Fake-quantized tensor operations over float32 carriers.

Real storage stays float32; quantization maps each element to a HiF8
code (optionally pre-scaled by a power of two) and dequantization maps
codes back to their exact values.  fake_quant composes the two, which
makes quantization error observable while keeping ordinary float32
arithmetic downstream.

The GEMM here accumulates in float32 with a fixed ascending-k order, one
rounding per multiply and per add, so results are bit-identical to a
scalar triple loop and reproducible across runs and BLAS builds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hif8 import codec
from hif8.rounding import RoundingSpec, round_array

__all__ = [
    "DimensionMismatch",
    "QuantizedTensor",
    "ErrorStats",
    "quantize",
    "dequantize",
    "fake_quant",
    "deterministic_matmul",
    "gemm_fake_quant",
    "error_stats",
]

_DECODE = codec.value_table()

SCALE_EXP_MIN = -127
SCALE_EXP_MAX = 127


class DimensionMismatch(ValueError):
    """Operand shapes do not compose."""


@dataclass
class QuantizedTensor:
    """HiF8 codes plus the discipline and scale that produced them.

    Attributes:
        codes: uint8 array of HiF8 codes.
        spec: the rounding discipline used.
        scale_exp: power-of-two pre-scale; the stored codes represent
            value * 2^scale_exp, so dequantization divides it back out.
    """

    codes: np.ndarray
    spec: RoundingSpec = RoundingSpec()
    scale_exp: int = 0

    def __post_init__(self):
        self.codes = np.asarray(self.codes)
        if self.codes.dtype != np.uint8:
            raise TypeError(f"codes must be uint8, got {self.codes.dtype}")
        _check_scale(self.scale_exp)

    @property
    def shape(self):
        return self.codes.shape


def _check_scale(scale_exp: int):
    if not SCALE_EXP_MIN <= scale_exp <= SCALE_EXP_MAX:
        raise ValueError(
            f"scale_exp {scale_exp} outside [{SCALE_EXP_MIN}, {SCALE_EXP_MAX}]"
        )


def quantize(
    t,
    spec: RoundingSpec = RoundingSpec(),
    scale_exp: int = 0,
    *,
    rng=None,
) -> QuantizedTensor:
    """Quantize t * 2^scale_exp elementwise to HiF8 codes.

    The power-of-two scale is exact in float32, so it shifts the
    representable window without adding rounding error of its own.
    """
    _check_scale(scale_exp)
    codes = round_array(t, spec, scale_exp=scale_exp, rng=rng)
    return QuantizedTensor(codes, spec, scale_exp)


def dequantize(q: QuantizedTensor) -> np.ndarray:
    """Exact float32 values of a quantized tensor (scale divided out)."""
    vals = np.ldexp(_DECODE[q.codes], -q.scale_exp)
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        return vals.astype(np.float32)


def fake_quant(
    t,
    spec: RoundingSpec = RoundingSpec(),
    scale_exp: int = 0,
    *,
    rng=None,
) -> np.ndarray:
    """Round-trip t through HiF8: dequantize(quantize(t)).

    Idempotent for a fixed spec and scale: every output element is
    exactly representable, and exact values are never perturbed.
    """
    return dequantize(quantize(t, spec, scale_exp, rng=rng))


def deterministic_matmul(a, b) -> np.ndarray:
    """float32 matmul with fixed ascending-k accumulation order.

    Bit-identical to the scalar triple loop; independent of threading
    and BLAS, at the cost of speed on large problems.
    """
    a = np.asarray(a, dtype=np.float32)
    b = np.asarray(b, dtype=np.float32)
    if a.ndim != 2 or b.ndim != 2:
        raise DimensionMismatch("matmul operands must be 2-D")
    if a.shape[1] != b.shape[0]:
        raise DimensionMismatch(f"inner dims differ: {a.shape} x {b.shape}")
    out = np.zeros((a.shape[0], b.shape[1]), dtype=np.float32)
    for i in range(a.shape[1]):
        out += a[:, i : i + 1] * b[i : i + 1, :]
    return out


def gemm_fake_quant(
    a,
    w,
    spec_a: RoundingSpec = RoundingSpec(),
    spec_w: RoundingSpec = RoundingSpec(),
    scale_a: int = 0,
    scale_w: int = 0,
) -> np.ndarray:
    """Fake-quantize both operands, then multiply deterministically.

    Returns fake_quant(a) @ fake_quant(w) in float32.  Because the
    scales are powers of two, dividing them out commutes with every
    float32 rounding step, so scaling the operands up and descaling the
    product gives bit-identical results.
    """
    aq = fake_quant(a, spec_a, scale_a)
    wq = fake_quant(w, spec_w, scale_w)
    return deterministic_matmul(aq, wq)


@dataclass(frozen=True)
class ErrorStats:
    """Float64 error summary of a test tensor against a reference.

    Attributes:
        mse: mean squared error.
        max_abs_err: largest absolute deviation.
        snr_db: 10 * log10(mean(ref^2) / mse); +inf when mse is 0.
        zero_fraction: fraction of test elements equal to zero.
        overflow_count: number of non-finite test elements.
    """

    mse: float
    max_abs_err: float
    snr_db: float
    zero_fraction: float
    overflow_count: int


def error_stats(reference, test) -> ErrorStats:
    """Compare a (de)quantized tensor against its reference in float64."""
    ref = np.asarray(reference, dtype=np.float64)
    got = np.asarray(test, dtype=np.float64)
    if ref.shape != got.shape:
        raise DimensionMismatch(f"shapes differ: {ref.shape} vs {got.shape}")
    err = got - ref
    mse = float(np.mean(err * err))
    signal = float(np.mean(ref * ref))
    if mse == 0.0:
        snr = float("inf")
    else:
        with np.errstate(divide="ignore"):
            snr = float(10.0 * np.log10(signal / mse)) if signal > 0 else float("-inf")
    return ErrorStats(
        mse=mse,
        max_abs_err=float(np.max(np.abs(err))) if err.size else 0.0,
        snr_db=snr,
        zero_fraction=float(np.mean(got == 0.0)),
        overflow_count=int(np.count_nonzero(~np.isfinite(got))),
    )
