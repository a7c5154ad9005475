"""Command-line surface: code tables, conversion, stats, calibration, scaling replay.

Subcommands
    table              CSV dump of all 256 code points of an 8-bit format.
    precision-profile  CSV of (exponent, fraction bits) per covered binade.
    convert            Quantize a float tensor file to codes, or round-trip
                       it back to FP32 with --fake-quant.
    quantize-stats     Error statistics of a fake-quantization round trip.
    compare            Side-by-side error statistics across the three formats.
    calibrate          Two-pass power-of-two scale search over a layer stack.
    simulate-als       Replay an overflow trace through a loss-scale controller.

Conventions: data on stdout (or --out), diagnostics on stderr, CSV with a
header row and LF line endings.  Exit codes: 0 success, 1 validation error
(bad flags or malformed file content), 2 operating-system I/O failure.
All output is reproducible byte-for-byte given the same inputs and flags;
standard stochastic rounding therefore demands an explicit --seed.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from hif8 import codec
from hif8 import io as hio
from hif8.calibration import calibrate
from hif8.formats import (
    FORMAT_NAMES,
    decode_fp8,
    descriptor,
    precision_profile,
    round_to_nearest_value,
)
from hif8.rounding import (
    NanPolicy,
    OverflowPolicy,
    RoundingMode,
    RoundingSpec,
    SourceFormat,
)
from hif8.scaling import replay
from hif8.tensorops import QuantizedTensor, dequantize, error_stats, fake_quant, quantize


class CliError(ValueError):
    """Flag or input validation failure; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; route through the
    # validation path instead so exit codes stay 0/1/2 as documented.
    def error(self, message):
        raise CliError(message)


def _format_number(v: float) -> str:
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if v == int(v):
        return str(int(v))
    return repr(v)


_CLASS_NAMES = {
    codec.CodeClass.ZERO: "Zero",
    codec.CodeClass.NORMAL: "Normal",
    codec.CodeClass.DENORMAL: "Denormal",
    codec.CodeClass.INFINITY: "Infinity",
    codec.CodeClass.NAN: "NaN",
}


def _table_row(code: int, fmt: str) -> str:
    if fmt == "hif8":
        d = codec.decode(code)
        cls = _CLASS_NAMES[codec.classify(code)]
    else:
        d = decode_fp8(code, fmt)
        if d.kind is codec.NumberClass.ZERO:
            cls = "Zero"
        elif d.kind is codec.NumberClass.NAN:
            cls = "NaN"
        elif d.kind is codec.NumberClass.INFINITY:
            cls = "Infinity"
        else:
            cls = "Normal" if d.exponent >= descriptor(fmt).exp_min_normal else "Denormal"
    hexcode = f"0x{code:02X}"
    if cls == "NaN":
        return f"{hexcode},NaN,,,,"
    sign = "+" if d.sign > 0 else "-"
    if cls == "Zero":
        return f"{hexcode},Zero,{sign},,,0"
    if cls == "Infinity":
        return f"{hexcode},Infinity,{sign},,,{_format_number(d.value)}"
    return f"{hexcode},{cls},{sign},{d.exponent},{d.fraction},{_format_number(d.value)}"


def _emit(out: str | None, text: str) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _as_float32(tensor) -> tuple[np.ndarray, SourceFormat]:
    """Exact float32 view of a file tensor plus its natural source format."""
    if isinstance(tensor, hio.Bf16Tensor):
        return tensor.to_float32(), SourceFormat.BF16
    if isinstance(tensor, QuantizedTensor):
        raise CliError("input file holds HiF8 codes; a float tensor is required")
    if tensor.dtype == np.float16:
        return tensor.astype(np.float32), SourceFormat.FP16
    return tensor, SourceFormat.FP32


def _build_spec(args, inferred: SourceFormat) -> RoundingSpec:
    mode = RoundingMode(args.round) if args.round else RoundingMode.TA
    if args.src is not None:
        src = SourceFormat(args.src)
        if inferred is not SourceFormat.FP32 and src is not inferred:
            raise CliError(f"--src {args.src} conflicts with {inferred.value} file contents")
    else:
        src = inferred
    if mode is RoundingMode.SR and args.seed is None:
        raise CliError("--round sr requires --seed for reproducible output")
    if args.seed is not None and mode is not RoundingMode.SR:
        raise CliError("--seed is only valid with --round sr")
    overflow = OverflowPolicy.SATURATE if args.saturate else OverflowPolicy.TO_INFINITY
    nan = NanPolicy.TO_ZERO if args.nan_to_zero else NanPolicy.PROPAGATE
    return RoundingSpec(mode=mode, source=src, overflow=overflow, nan=nan, seed=args.seed)


_STATS_HEADER = "mse,maxAbsErr,snrDb,zeroFraction,overflowCount"


def _stats_row(st) -> str:
    floats = (st.mse, st.max_abs_err, st.snr_db, st.zero_fraction)
    return ",".join(repr(v) if not math.isinf(v) else _format_number(v) for v in floats) + f",{st.overflow_count}"


def _cmd_table(args) -> int:
    rows = [_table_row(c, args.format) for c in range(256)]
    _emit(args.out, "code,class,sign,exponent,mantissa,value\n" + "\n".join(rows) + "\n")
    return 0


def _cmd_precision_profile(args) -> int:
    rows = [f"{e},{bits}" for e, bits in precision_profile(args.format)]
    _emit(args.out, "exponent,fractionBits\n" + "\n".join(rows) + "\n")
    return 0


def _cmd_convert(args) -> int:
    tensor = hio.read_tensor(args.input)
    if isinstance(tensor, QuantizedTensor):
        flagged = (
            args.round or args.src or args.saturate or args.nan_to_zero
            or args.seed is not None or args.scale_exp or args.fake_quant
        )
        if flagged:
            raise CliError("input already holds codes; rounding flags do not apply")
        hio.write_tensor(args.out, dequantize(tensor))
        return 0
    values, inferred = _as_float32(tensor)
    spec = _build_spec(args, inferred)
    if args.scale_exp and not args.fake_quant:
        raise CliError("--scale-exp requires --fake-quant (code files carry no scale)")
    q = quantize(values, spec, scale_exp=args.scale_exp)
    hio.write_tensor(args.out, dequantize(q) if args.fake_quant else q)
    return 0


def _cmd_quantize_stats(args) -> int:
    values, inferred = _as_float32(hio.read_tensor(args.input))
    spec = _build_spec(args, inferred)
    st = error_stats(values, fake_quant(values, spec, scale_exp=args.scale_exp))
    _emit(args.out, _STATS_HEADER + "\n" + _stats_row(st) + "\n")
    return 0


def _cmd_compare(args) -> int:
    values, _ = _as_float32(hio.read_tensor(args.input))
    spec = RoundingSpec(overflow=OverflowPolicy.SATURATE)
    rows = []
    for name in FORMAT_NAMES:
        if name == "hif8":
            test = fake_quant(values, spec)
        else:
            test = round_to_nearest_value(values, name)
        rows.append(f"{name}," + _stats_row(error_stats(values, test)))
    _emit(args.out, "format," + _STATS_HEADER + "\n" + "\n".join(rows) + "\n")
    return 0


def _cmd_calibrate(args) -> int:
    model = hio.read_manifest(args.manifest)
    data = hio.read_tensor(args.data)
    if not (isinstance(data, np.ndarray) and data.dtype == np.float32):
        raise CliError("calibration data must be an FP32 tensor file")
    report = calibrate(
        model,
        data,
        quantize_input=not args.no_quantize_input,
        keep_grids=args.grids,
        dataset_id=args.dataset_id if args.dataset_id is not None else Path(args.data).name,
    )
    _emit(args.out, hio.report_to_json(report))
    return 0


def _cmd_simulate_als(args) -> int:
    rows = replay(hio.read_trace(args.trace), controller=args.controller)
    _emit(args.out, hio.timeline_csv(rows))
    return 0


def _add_rounding_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--round", choices=[m.value for m in RoundingMode],
                   help="rounding mode (default ta)")
    p.add_argument("--src", choices=[s.value for s in SourceFormat],
                   help="source format; default inferred from the input file")
    p.add_argument("--saturate", action="store_true",
                   help="clamp overflow to the max finite value instead of Infinity")
    p.add_argument("--nan-to-zero", action="store_true",
                   help="map NaN inputs to zero instead of the NaN code")
    p.add_argument("--seed", type=int, help="threshold stream seed (sr only)")
    p.add_argument("--scale-exp", type=int, default=0,
                   help="round x * 2^N instead of x")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hif8", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("table", help="dump all 256 code points as CSV")
    p.add_argument("--format", choices=FORMAT_NAMES, default="hif8")
    p.add_argument("--out")

    p = sub.add_parser("precision-profile", help="fraction bits per binade as CSV")
    p.add_argument("--format", choices=FORMAT_NAMES, default="hif8")
    p.add_argument("--out")

    p = sub.add_parser("convert", help="quantize a tensor file (or --fake-quant round trip)")
    p.add_argument("input")
    p.add_argument("--out", required=True)
    _add_rounding_flags(p)
    p.add_argument("--fake-quant", action="store_true",
                   help="write the FP32 round trip instead of raw codes")

    p = sub.add_parser("quantize-stats", help="fake-quantization error statistics as CSV")
    p.add_argument("input")
    p.add_argument("--out")
    _add_rounding_flags(p)

    p = sub.add_parser("compare", help="error statistics across hif8/e4m3/e5m2")
    p.add_argument("input")
    p.add_argument("--out")

    p = sub.add_parser("calibrate", help="per-layer power-of-two scale search")
    p.add_argument("manifest")
    p.add_argument("data")
    p.add_argument("--out")
    p.add_argument("--grids", action="store_true", help="embed full 10x10 error grids")
    p.add_argument("--no-quantize-input", action="store_true",
                   help="feed the first layer unquantized data")
    p.add_argument("--dataset-id", help="report label; defaults to the data file name")

    p = sub.add_parser("simulate-als", help="replay an overflow trace into a timeline CSV")
    p.add_argument("trace")
    p.add_argument("--controller", choices=("als", "bls"), default="als")
    p.add_argument("--out")

    return parser


_DISPATCH = {
    "table": _cmd_table,
    "precision-profile": _cmd_precision_profile,
    "convert": _cmd_convert,
    "quantize-stats": _cmd_quantize_stats,
    "compare": _cmd_compare,
    "calibrate": _cmd_calibrate,
    "simulate-als": _cmd_simulate_als,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return _DISPATCH[args.command](args)
    except (CliError, ValueError, TypeError) as exc:
        print(f"hif8: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"hif8: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
