"""Post-training calibration of per-layer power-of-two scales.

A model is a chain of GEMM layers, each followed by an optional vector
op (relu, tanh-gelu, or bias add).  Calibration runs the chain twice
over a batch of representative inputs:

  pass 1  float32 reference: O_l = A_l @ W_l, next A from the vector op.
  pass 2  quantized: for each layer, grid-search activation and weight
          scale exponents (Ea, Ew) over [-4, 5] x [-4, 5], quantizing
          A * 2^Ea and W * 2^Ew to HiF8 with ties-away rounding and
          scoring the descaled product against the pass-1 reference by
          float64 MSE.  The winning output (not the reference) feeds
          the next layer, so later layers compensate for earlier error.

Vector ops always run in float32 on the descaled product; only GEMM
operands are quantized.  Ties in the grid go to the lexicographically
smallest (Ea, Ew).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hif8.rounding import RoundingSpec
from hif8.tensorops import DimensionMismatch, deterministic_matmul, fake_quant

__all__ = [
    "EmptyModel",
    "ReportMismatch",
    "Layer",
    "LayerGraph",
    "LayerCalibration",
    "CalibrationReport",
    "VECTOR_OPS",
    "SCALE_SEARCH_MIN",
    "SCALE_SEARCH_MAX",
    "calibrate",
    "apply_calibration",
    "direct_cast_report",
    "forward_reference",
]

VECTOR_OPS = ("none", "relu", "gelu", "bias")

SCALE_SEARCH_MIN = -4
SCALE_SEARCH_MAX = 5

_TA = RoundingSpec()


class EmptyModel(ValueError):
    """A model needs at least one layer."""


class ReportMismatch(ValueError):
    """A calibration report does not fit the model it is applied to."""


@dataclass
class Layer:
    """One GEMM layer: weight (in_features, out_features) plus vector op."""

    weight: np.ndarray
    op: str = "none"
    bias: np.ndarray | None = None

    def __post_init__(self):
        self.weight = np.asarray(self.weight, dtype=np.float32)
        if self.weight.ndim != 2:
            raise DimensionMismatch("layer weight must be 2-D")
        if self.op not in VECTOR_OPS:
            raise ValueError(f"unknown vector op {self.op!r}")
        if self.op == "bias":
            if self.bias is None:
                raise ValueError("op 'bias' needs a bias vector")
            self.bias = np.asarray(self.bias, dtype=np.float32)
            if self.bias.shape != (self.weight.shape[1],):
                raise DimensionMismatch(
                    f"bias shape {self.bias.shape} does not match "
                    f"{self.weight.shape[1]} output features"
                )
        elif self.bias is not None:
            raise ValueError(f"op {self.op!r} takes no bias")


@dataclass
class LayerGraph:
    """A validated chain of layers."""

    layers: list[Layer]

    def __post_init__(self):
        if not self.layers:
            raise EmptyModel("model has no layers")
        for i, (a, b) in enumerate(zip(self.layers, self.layers[1:])):
            if a.weight.shape[1] != b.weight.shape[0]:
                raise DimensionMismatch(
                    f"layer {i} outputs {a.weight.shape[1]} features but "
                    f"layer {i + 1} expects {b.weight.shape[0]}"
                )

    @property
    def in_features(self) -> int:
        return self.layers[0].weight.shape[0]


def _apply_vector_op(x: np.ndarray, layer: Layer) -> np.ndarray:
    if layer.op == "relu":
        return np.maximum(x, np.float32(0.0))
    if layer.op == "gelu":
        # tanh approximation, evaluated in float32
        inner = 0.7978845608028654 * (x + 0.044715 * x * x * x)
        return (0.5 * x * (1.0 + np.tanh(inner))).astype(np.float32)
    if layer.op == "bias":
        return x + layer.bias
    return x


def _check_input(model: LayerGraph, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float32)
    if x.ndim != 2 or x.shape[1] != model.in_features:
        raise DimensionMismatch(
            f"input shape {x.shape} does not feed {model.in_features} features"
        )
    return x


def forward_reference(model: LayerGraph, x) -> list[np.ndarray]:
    """Float32 reference forward pass.

    Returns the pre-vector-op GEMM output of every layer; these are the
    targets the calibration grid search scores against.
    """
    a = _check_input(model, x)
    outputs = []
    for layer in model.layers:
        o = deterministic_matmul(a, layer.weight)
        outputs.append(o)
        a = _apply_vector_op(o, layer)
    return outputs


@dataclass(eq=False)
class LayerCalibration:
    """Chosen scales for one layer.

    Attributes:
        ea: activation scale exponent.
        ew: weight scale exponent.
        err: float64 MSE of the winning grid point.
        grid: full 10x10 float64 error surface indexed by
            [ea - SCALE_SEARCH_MIN, ew - SCALE_SEARCH_MIN], or None
            when grids were dropped.
    """

    ea: int
    ew: int
    err: float
    grid: np.ndarray | None = None


@dataclass(eq=False)
class CalibrationReport:
    layers: list[LayerCalibration]
    rounding_mode: str = "ta"
    quantize_input: bool = True
    dataset_id: str = ""


def _mse(a: np.ndarray, b: np.ndarray) -> float:
    d = a.astype(np.float64) - b.astype(np.float64)
    return float(np.mean(d * d))


def calibrate(
    model: LayerGraph,
    data,
    *,
    quantize_input: bool = True,
    keep_grids: bool = True,
    dataset_id: str = "",
) -> CalibrationReport:
    """Search per-layer (Ea, Ew) scale pairs minimizing output MSE.

    Args:
        model: validated layer chain.
        data: (batch, in_features) calibration inputs.
        quantize_input: when True, the first layer sees the HiF8
            round-trip of the data (matching deployment where inputs
            arrive quantized); when False it sees raw float32.
        keep_grids: store the full error surface per layer.
        dataset_id: free-form tag recorded in the report.

    Returns:
        CalibrationReport with one LayerCalibration per layer.
    """
    x = _check_input(model, data)
    reference = forward_reference(model, x)

    exps = range(SCALE_SEARCH_MIN, SCALE_SEARCH_MAX + 1)
    a_q = fake_quant(x, _TA) if quantize_input else x
    results = []
    for layer, o_ref in zip(model.layers, reference):
        w_cache = {ew: fake_quant(layer.weight, _TA, ew) for ew in exps}
        a_cache = {ea: fake_quant(a_q, _TA, ea) for ea in exps}
        grid = np.empty((len(w_cache), len(w_cache)), dtype=np.float64)
        best = None
        for i, ea in enumerate(exps):
            for j, ew in enumerate(exps):
                err = _mse(deterministic_matmul(a_cache[ea], w_cache[ew]), o_ref)
                grid[i, j] = err
                if best is None or err < best[0]:
                    best = (err, ea, ew)
        err, ea, ew = best
        results.append(
            LayerCalibration(ea=ea, ew=ew, err=err, grid=grid if keep_grids else None)
        )
        o_q = deterministic_matmul(a_cache[ea], w_cache[ew])
        a_q = _apply_vector_op(o_q, layer)

    return CalibrationReport(
        layers=results, quantize_input=quantize_input, dataset_id=dataset_id
    )


def _check_report(model: LayerGraph, report: CalibrationReport):
    if len(report.layers) != len(model.layers):
        raise ReportMismatch(
            f"report has {len(report.layers)} layers, model has {len(model.layers)}"
        )
    for i, cal in enumerate(report.layers):
        for name, e in (("ea", cal.ea), ("ew", cal.ew)):
            if not SCALE_SEARCH_MIN <= e <= SCALE_SEARCH_MAX:
                raise ReportMismatch(f"layer {i}: {name}={e} outside search range")


def apply_calibration(model: LayerGraph, report: CalibrationReport, x) -> np.ndarray:
    """Quantized forward pass using a report's per-layer scales.

    Returns the final activation (vector op of the last layer applied).
    """
    _check_report(model, report)
    a = _check_input(model, x)
    if report.quantize_input:
        a = fake_quant(a, _TA)
    for layer, cal in zip(model.layers, report.layers):
        o = deterministic_matmul(
            fake_quant(a, _TA, cal.ea), fake_quant(layer.weight, _TA, cal.ew)
        )
        a = _apply_vector_op(o, layer)
    return a


def direct_cast_report(model: LayerGraph, *, quantize_input: bool = True) -> CalibrationReport:
    """The no-search baseline: every layer at (Ea, Ew) = (0, 0)."""
    layers = [LayerCalibration(ea=0, ew=0, err=float("nan")) for _ in model.layers]
    return CalibrationReport(layers=layers, quantize_input=quantize_input)
