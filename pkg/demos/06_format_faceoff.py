"""HiF8 against the two fixed-field 8-bit formats on the same data."""

import numpy as np

from hif8.formats import FORMAT_NAMES, descriptor, precision_profile, round_to_nearest_value
from hif8.rounding import OverflowPolicy, RoundingSpec
from hif8.tensorops import error_stats, fake_quant

for name in FORMAT_NAMES:
    d = descriptor(name)
    print(f"{name:5}  binades [{d.exp_min:+d}, {d.exp_max:+d}]  "
          f"max {d.max_finite:g}  min+ {d.min_positive:.3g}  "
          f"infinity={'yes' if d.has_infinity else 'no'}")

# Fraction bits per binade.  The tapered layout trades peak precision
# near 1.0 for range at the ends; the fixed layouts are flat.
print("\nE:      " + " ".join(f"{e:3d}" for e in range(-9, 9)))
for name in FORMAT_NAMES:
    prof = dict(precision_profile(name))
    print(f"{name:5}   " + " ".join(f"{prof.get(e, '-')!s:>3}" for e in range(-9, 9)))

# Error on unit-scale data (where the tapered mantissa is at full width).
rng = np.random.default_rng(21)
x = rng.normal(size=200_000).astype(np.float32)

sat = RoundingSpec(overflow=OverflowPolicy.SATURATE)
print("\nunit-scale gaussian:")
for name in FORMAT_NAMES:
    approx = fake_quant(x, sat) if name == "hif8" else round_to_nearest_value(x, name)
    st = error_stats(x, approx)
    print(f"  {name:5}  snr {st.snr_db:5.1f} dB   zeros {st.zero_fraction:.2%}")

# Error on wide-dynamic-range data (log-uniform over 2^-18..2^12), where
# range matters more than peak precision.
mag = np.exp2(rng.uniform(-18, 12, size=200_000))
wide = (mag * rng.choice([-1.0, 1.0], size=mag.size)).astype(np.float32)
print("\nwide-range log-uniform:")
for name in FORMAT_NAMES:
    approx = fake_quant(wide, sat) if name == "hif8" else round_to_nearest_value(wide, name)
    st = error_stats(wide, approx)
    rel = np.abs((approx - wide) / wide)
    print(f"  {name:5}  median rel err {np.median(rel):.3%}   zeros {st.zero_fraction:.2%}")
