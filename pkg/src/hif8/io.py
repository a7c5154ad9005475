"""Bit-exact file formats: tensors, model manifests, calibration
reports, and overflow traces.

Tensor container (little-endian throughout):

    bytes 0-3   magic "HF8T"
    byte  4     version, currently 1
    byte  5     dtype: 0 fp32, 1 hif8 codes, 2 fp16, 3 bf16 bits
    byte  6     rank (>= 1)
    then        rank x u32 dims
    then        payload, row-major, exactly prod(dims) elements

HiF8 files persist raw codes only; rounding spec and scale exponent are
runtime concerns, so a file read back gets the default spec and scale 0.

The JSON formats are canonical: fixed key order, two-space indent, one
trailing newline, floats in shortest round-trip form, non-finite error
values as null.  Unknown fields are rejected with their position.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from hif8.calibration import (
    SCALE_SEARCH_MAX,
    SCALE_SEARCH_MIN,
    CalibrationReport,
    Layer,
    LayerCalibration,
    LayerGraph,
    VECTOR_OPS,
)
from hif8.rounding import bf16_bits_from_f32, f32_from_bf16_bits
from hif8.scaling import TimelineRow
from hif8.tensorops import QuantizedTensor

__all__ = [
    "TensorFileError",
    "BadMagic",
    "BadVersion",
    "TruncatedPayload",
    "DimOverflow",
    "SchemaError",
    "Bf16Tensor",
    "DTYPE_FP32",
    "DTYPE_HIF8",
    "DTYPE_FP16",
    "DTYPE_BF16",
    "tensor_bytes",
    "tensor_from_bytes",
    "write_tensor",
    "read_tensor",
    "write_manifest",
    "read_manifest",
    "save_model",
    "report_to_json",
    "report_from_json",
    "write_report",
    "read_report",
    "write_trace",
    "read_trace",
    "timeline_csv",
    "write_timeline",
]

MAGIC = b"HF8T"
VERSION = 1

DTYPE_FP32 = 0
DTYPE_HIF8 = 1
DTYPE_FP16 = 2
DTYPE_BF16 = 3

_ITEM_SIZE = {DTYPE_FP32: 4, DTYPE_HIF8: 1, DTYPE_FP16: 2, DTYPE_BF16: 2}
_MAX_DIM = 0xFFFFFFFF


class TensorFileError(ValueError):
    """Malformed tensor container."""


class BadMagic(TensorFileError):
    pass


class BadVersion(TensorFileError):
    pass


class TruncatedPayload(TensorFileError):
    pass


class DimOverflow(TensorFileError):
    pass


class SchemaError(ValueError):
    """Malformed manifest, report, or trace content."""


@dataclass
class Bf16Tensor:
    """BF16 payload carried as raw uint16 bit patterns."""

    bits: np.ndarray

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=np.uint16)

    @classmethod
    def from_float32(cls, x) -> "Bf16Tensor":
        return cls(bf16_bits_from_f32(np.asarray(x, dtype=np.float32)))

    def to_float32(self) -> np.ndarray:
        return f32_from_bf16_bits(self.bits)


def _encode_header(dtype: int, shape: tuple[int, ...]) -> bytes:
    if len(shape) == 0:
        raise TensorFileError("rank must be >= 1 (reshape scalars to (1,))")
    if len(shape) > 255:
        raise DimOverflow(f"rank {len(shape)} exceeds 255")
    for d in shape:
        if d > _MAX_DIM:
            raise DimOverflow(f"dim {d} exceeds u32")
    return (
        MAGIC
        + struct.pack("<BBB", VERSION, dtype, len(shape))
        + struct.pack(f"<{len(shape)}I", *shape)
    )


def tensor_bytes(tensor) -> bytes:
    """Serialize a tensor to container bytes.

    Accepts float32/float16 ndarrays, QuantizedTensor (scale 0 only,
    since the container stores raw codes), and Bf16Tensor.
    """
    if isinstance(tensor, QuantizedTensor):
        if tensor.scale_exp != 0:
            raise TensorFileError(
                "tensor files store raw codes; fold or drop scale_exp first"
            )
        payload = np.ascontiguousarray(tensor.codes)
        return _encode_header(DTYPE_HIF8, payload.shape) + payload.tobytes()
    if isinstance(tensor, Bf16Tensor):
        payload = np.ascontiguousarray(tensor.bits, dtype="<u2")
        return _encode_header(DTYPE_BF16, payload.shape) + payload.tobytes()
    arr = np.asarray(tensor)
    if arr.dtype == np.float32:
        return _encode_header(DTYPE_FP32, arr.shape) + np.ascontiguousarray(
            arr, dtype="<f4"
        ).tobytes()
    if arr.dtype == np.float16:
        return _encode_header(DTYPE_FP16, arr.shape) + np.ascontiguousarray(
            arr, dtype="<f2"
        ).tobytes()
    raise TypeError(
        f"cannot serialize dtype {arr.dtype}; expected float32, float16, "
        "QuantizedTensor, or Bf16Tensor"
    )


def tensor_from_bytes(data: bytes):
    """Parse container bytes; inverse of :func:`tensor_bytes`."""
    if len(data) < 7:
        raise TruncatedPayload(f"{len(data)} bytes is shorter than any header")
    if data[:4] != MAGIC:
        raise BadMagic(f"magic {data[:4]!r} != {MAGIC!r}")
    version, dtype, rank = struct.unpack_from("<BBB", data, 4)
    if version != VERSION:
        raise BadVersion(f"version {version}, expected {VERSION}")
    if dtype not in _ITEM_SIZE:
        raise TensorFileError(f"unknown dtype code {dtype}")
    if rank == 0:
        raise TensorFileError("rank must be >= 1")
    dims_end = 7 + 4 * rank
    if len(data) < dims_end:
        raise TruncatedPayload("header ends inside the dims table")
    shape = struct.unpack_from(f"<{rank}I", data, 7)
    count = math.prod(shape)
    expected = count * _ITEM_SIZE[dtype]
    payload = data[dims_end:]
    if len(payload) < expected:
        raise TruncatedPayload(f"payload {len(payload)} bytes, expected {expected}")
    if len(payload) > expected:
        raise TensorFileError(f"{len(payload) - expected} trailing bytes")
    if dtype == DTYPE_FP32:
        return np.frombuffer(payload, dtype="<f4").reshape(shape).copy()
    if dtype == DTYPE_FP16:
        return np.frombuffer(payload, dtype="<f2").reshape(shape).copy()
    if dtype == DTYPE_BF16:
        return Bf16Tensor(np.frombuffer(payload, dtype="<u2").reshape(shape).copy())
    codes = np.frombuffer(payload, dtype=np.uint8).reshape(shape).copy()
    return QuantizedTensor(codes)


def write_tensor(path, tensor) -> None:
    Path(path).write_bytes(tensor_bytes(tensor))


def read_tensor(path):
    return tensor_from_bytes(Path(path).read_bytes())


# ---------------------------------------------------------------------------
# Model manifests
# ---------------------------------------------------------------------------

_LAYER_FIELDS = {"weightPath", "vectorOp", "biasPath"}


def _require_keys(obj: dict, allowed: set, where: str):
    for key in obj:
        if key not in allowed:
            raise SchemaError(f"{where}: unknown field {key!r}")


def read_manifest(path) -> LayerGraph:
    """Load a layer-chain manifest; weight paths resolve relative to it.

    Schema: {"layers": [{"weightPath": str, "vectorOp"?: str,
    "biasPath"?: str}, ...]}.  Weights and biases are FP32 tensor files.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise SchemaError(f"$: not valid JSON ({e})") from None
    if not isinstance(doc, dict):
        raise SchemaError("$: manifest must be an object")
    _require_keys(doc, {"layers"}, "$")
    entries = doc.get("layers")
    if not isinstance(entries, list):
        raise SchemaError("$.layers: must be a list")
    layers = []
    for i, entry in enumerate(entries):
        where = f"layers[{i}]"
        if not isinstance(entry, dict):
            raise SchemaError(f"{where}: must be an object")
        _require_keys(entry, _LAYER_FIELDS, where)
        if "weightPath" not in entry:
            raise SchemaError(f"{where}: missing weightPath")
        op = entry.get("vectorOp", "none")
        if op not in VECTOR_OPS:
            raise SchemaError(f"{where}.vectorOp: unknown op {op!r}")
        if ("biasPath" in entry) != (op == "bias"):
            raise SchemaError(f"{where}: biasPath goes with vectorOp 'bias' only")
        weight = read_tensor(path.parent / entry["weightPath"])
        if not isinstance(weight, np.ndarray) or weight.dtype != np.float32:
            raise SchemaError(f"{where}.weightPath: not an FP32 tensor file")
        bias = None
        if op == "bias":
            bias = read_tensor(path.parent / entry["biasPath"])
            if not isinstance(bias, np.ndarray) or bias.dtype != np.float32:
                raise SchemaError(f"{where}.biasPath: not an FP32 tensor file")
        layers.append(Layer(weight=weight, op=op, bias=bias))
    return LayerGraph(layers)


def write_manifest(path, entries: list[dict]) -> None:
    """Write a manifest from already-validated layer entries."""
    doc = {"layers": entries}
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def save_model(directory, model: LayerGraph, name: str = "model") -> Path:
    """Write a model's weights plus its manifest; returns manifest path."""
    directory = Path(directory)
    entries = []
    for i, layer in enumerate(model.layers):
        weight_name = f"{name}.w{i}.hf8t"
        write_tensor(directory / weight_name, layer.weight)
        entry = {"weightPath": weight_name, "vectorOp": layer.op}
        if layer.op == "bias":
            bias_name = f"{name}.b{i}.hf8t"
            write_tensor(directory / bias_name, layer.bias)
            entry["biasPath"] = bias_name
        entries.append(entry)
    manifest = directory / f"{name}.json"
    write_manifest(manifest, entries)
    return manifest


# ---------------------------------------------------------------------------
# Calibration reports
# ---------------------------------------------------------------------------


def _json_num(x: float):
    return float(x) if math.isfinite(x) else None


def report_to_json(report: CalibrationReport) -> str:
    layers = []
    for cal in report.layers:
        entry = {"ea": cal.ea, "ew": cal.ew, "err": _json_num(cal.err)}
        if cal.grid is not None:
            entry["grid"] = [[_json_num(v) for v in row] for row in cal.grid]
        layers.append(entry)
    doc = {
        "datasetId": report.dataset_id,
        "roundingMode": report.rounding_mode,
        "quantizeInput": report.quantize_input,
        "layers": layers,
    }
    return json.dumps(doc, indent=2) + "\n"


def _read_num(v, where: str) -> float:
    if v is None:
        return float("nan")
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(f"{where}: not a number")
    return float(v)


def _read_scale(v, where: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise SchemaError(f"{where}: not an integer")
    if not SCALE_SEARCH_MIN <= v <= SCALE_SEARCH_MAX:
        raise SchemaError(
            f"{where}: {v} outside [{SCALE_SEARCH_MIN}, {SCALE_SEARCH_MAX}]"
        )
    return v


def report_from_json(text: str) -> CalibrationReport:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"$: not valid JSON ({e})") from None
    if not isinstance(doc, dict):
        raise SchemaError("$: report must be an object")
    required = {"datasetId", "roundingMode", "quantizeInput", "layers"}
    _require_keys(doc, required, "$")
    for key in required:
        if key not in doc:
            raise SchemaError(f"$: missing field {key!r}")
    if doc["roundingMode"] != "ta":
        raise SchemaError(f"$.roundingMode: unsupported {doc['roundingMode']!r}")
    if not isinstance(doc["quantizeInput"], bool):
        raise SchemaError("$.quantizeInput: not a boolean")
    if not isinstance(doc["datasetId"], str):
        raise SchemaError("$.datasetId: not a string")
    if not isinstance(doc["layers"], list) or not doc["layers"]:
        raise SchemaError("$.layers: must be a non-empty list")
    layers = []
    for i, entry in enumerate(doc["layers"]):
        where = f"layers[{i}]"
        if not isinstance(entry, dict):
            raise SchemaError(f"{where}: must be an object")
        _require_keys(entry, {"ea", "ew", "err", "grid"}, where)
        for key in ("ea", "ew", "err"):
            if key not in entry:
                raise SchemaError(f"{where}: missing field {key!r}")
        grid = None
        if "grid" in entry:
            raw = entry["grid"]
            n = SCALE_SEARCH_MAX - SCALE_SEARCH_MIN + 1
            if not isinstance(raw, list) or len(raw) != n:
                raise SchemaError(f"{where}.grid: must be a {n}x{n} array")
            rows = []
            for r, row in enumerate(raw):
                if not isinstance(row, list) or len(row) != n:
                    raise SchemaError(f"{where}.grid[{r}]: must have {n} entries")
                rows.append([_read_num(v, f"{where}.grid[{r}]") for v in row])
            grid = np.array(rows, dtype=np.float64)
        layers.append(
            LayerCalibration(
                ea=_read_scale(entry["ea"], f"{where}.ea"),
                ew=_read_scale(entry["ew"], f"{where}.ew"),
                err=_read_num(entry["err"], f"{where}.err"),
                grid=grid,
            )
        )
    return CalibrationReport(
        layers=layers,
        rounding_mode=doc["roundingMode"],
        quantize_input=doc["quantizeInput"],
        dataset_id=doc["datasetId"],
    )


def write_report(path, report: CalibrationReport) -> None:
    Path(path).write_text(report_to_json(report))


def read_report(path) -> CalibrationReport:
    return report_from_json(Path(path).read_text())


# ---------------------------------------------------------------------------
# Overflow traces and controller timelines
# ---------------------------------------------------------------------------


def write_trace(path, events: list[tuple[int, bool]]) -> None:
    lines = [f"{int(it)},{1 if ov else 0}" for it, ov in events]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def read_trace(path) -> list[tuple[int, bool]]:
    """Parse 'iteration,overflow' lines; overflow is strictly 0 or 1."""
    events = []
    for n, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if line == "":
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise SchemaError(f"line {n}: expected 'iteration,overflow'")
        it, ov = parts
        try:
            iteration = int(it)
        except ValueError:
            raise SchemaError(f"line {n}: bad iteration {it!r}") from None
        if ov not in ("0", "1"):
            raise SchemaError(f"line {n}: overflow must be 0 or 1, got {ov!r}")
        events.append((iteration, ov == "1"))
    return events


def timeline_csv(rows: list[TimelineRow]) -> str:
    out = ["iteration,overflow,scaleExp,window"]
    for row in rows:
        out.append(f"{row.iteration},{1 if row.overflow else 0},{row.scale_exp},{row.window}")
    return "\n".join(out) + "\n"


def write_timeline(path, rows: list[TimelineRow]) -> None:
    Path(path).write_text(timeline_csv(rows))
