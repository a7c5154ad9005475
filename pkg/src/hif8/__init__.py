"""Bit-exact reference implementation of the HiF8 8-bit floating point format.

The format packs a sign, a prefix-coded exponent-width field, a
sign-magnitude exponent with a hidden leading bit, and a tapered
mantissa into one byte: 3 fraction bits near 1.0, tapering to 0 bits at
the extremes, plus a denormal region that stretches the exponent range
down to 2^-22.  Subpackages cover the codec itself, conversion from
FP32/FP16/BF16 under five rounding disciplines, fake-quantized GEMM
with deterministic FP32 accumulation, post-training scale calibration,
loss-scale and per-tensor scale controllers, and the file formats the
command line tools speak.
"""

from hif8 import calibration, codec, formats, io, rounding, scaling, tensorops
from hif8.codec import (
    DecodedNumber,
    NotRepresentable,
    classify,
    decode,
    encode_exact,
    encode_value,
)
from hif8.rounding import (
    NanPolicy,
    OverflowPolicy,
    RoundingMode,
    RoundingSpec,
    SourceFormat,
    round_array,
    round_value,
)
from hif8.tensorops import (
    ErrorStats,
    QuantizedTensor,
    dequantize,
    deterministic_matmul,
    error_stats,
    fake_quant,
    gemm_fake_quant,
    quantize,
)

__all__ = [
    "DecodedNumber",
    "ErrorStats",
    "NanPolicy",
    "NotRepresentable",
    "OverflowPolicy",
    "QuantizedTensor",
    "RoundingMode",
    "RoundingSpec",
    "SourceFormat",
    "calibration",
    "classify",
    "codec",
    "decode",
    "dequantize",
    "deterministic_matmul",
    "encode_exact",
    "encode_value",
    "error_stats",
    "fake_quant",
    "formats",
    "gemm_fake_quant",
    "io",
    "quantize",
    "round_array",
    "round_value",
    "rounding",
    "scaling",
    "tensorops",
]

__version__ = "0.1.0"
