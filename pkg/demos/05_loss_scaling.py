"""Loss-scale controllers and per-tensor scaling, driven by overflow events."""

import numpy as np

from hif8.scaling import (
    als_init,
    als_step,
    bls_init,
    bls_step,
    detect_overflow,
    pts_init,
    pts_update,
    replay,
    scaled_cast_roundtrip,
)
from hif8.tensorops import error_stats

# Backoff-only controller: halve on overflow, double after a clean window.
state = bls_init(scale_exp=16, window=4)  # short window so the demo moves
for it, overflow in enumerate([False, False, True, False, False, False, False], 1):
    state = bls_step(state, overflow)
    print(f"iter {it}: overflow={int(overflow)}  scale=2^{state.scale_exp}")

# The adaptive variant also walks a ladder of window lengths: repeated
# growth lengthens the window, repeated overflow shortens it.
print("\nadaptive controller on a scripted trace:")
events = [(i, False) for i in range(1, 61)] + [(61, True), (62, True), (63, True)]
for row in replay(events)[-6:]:
    print(f"  iter {row.iteration}: scale=2^{row.scale_exp}  window={row.window}")

# Manual stepping works too and is handy inside training loops.
s = als_init()
for _ in range(40):
    s = als_step(s, overflow=False)
print("after 40 clean steps:", f"scale=2^{s.scale_exp}", f"window={s.window}",
      f"increases={s.increase_count}")

# Per-tensor scaling targets the top of the format range from observed amax.
rng = np.random.default_rng(9)
grads = np.exp2(rng.uniform(-30, -20, size=50_000)).astype(np.float32)
pts = pts_init()
pts = pts_update(pts, {"activation_grad": float(np.abs(grads).max())}, iteration=10)
print(f"\namax={grads.max():.3g} -> scale exponent {pts.scale_exp('activation_grad')}")

plain = error_stats(grads, scaled_cast_roundtrip(grads, pts_init(), "activation_grad"))
scaled = error_stats(grads, scaled_cast_roundtrip(grads, pts, "activation_grad"))
print(f"zero fraction: {plain.zero_fraction:.1%} unscaled -> "
      f"{scaled.zero_fraction:.1%} with the chosen scale")

print("overflow at that scale:",
      detect_overflow(grads, pts.scale_exp("activation_grad")))
