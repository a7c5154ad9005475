"""Post-training scale search: pick per-layer powers of two by grid MSE."""

import numpy as np

from hif8.calibration import Layer, LayerGraph, calibrate, apply_calibration

rng = np.random.default_rng(3)

# A small MLP whose weights are deliberately scaled down by 2^-4, so the
# do-nothing scale (0, 0) is a poor choice and the search has something
# to find.
dims = (16, 32, 32, 8)
layers = [
    Layer((rng.normal(size=(dims[i], dims[i + 1])) * 2.0**-4).astype(np.float32),
          op="relu" if i < 2 else "none")
    for i in range(3)
]
model = LayerGraph(layers)
data = rng.normal(size=(64, 16)).astype(np.float32)

report = calibrate(model, data, dataset_id="demo")

for i, layer in enumerate(report.layers):
    direct = layer.grid[4, 4]  # the (0, 0) entry: cast with no scaling
    gain = direct / layer.err if layer.err > 0 else float("inf")
    print(f"layer {i}: best (Ea={layer.ea:+d}, Ew={layer.ew:+d})  "
          f"mse {layer.err:.3g}  vs direct cast {direct:.3g}  ({gain:.1f}x)")

# The search grid for the first layer, row = activation scale, col =
# weight scale.  The minimum sits away from the center.
grid = report.layers[0].grid
ea, ew = np.unravel_index(np.argmin(grid), grid.shape)
print(f"\nlayer 0 grid minimum at Ea={ea - 4:+d}, Ew={ew - 4:+d}")
with np.printoptions(precision=1, suppress=False, linewidth=120):
    print(np.log10(grid))

# Running the calibrated model end to end.
out = apply_calibration(model, report, data)
print("\ncalibrated output shape:", out.shape, "dtype:", out.dtype)
