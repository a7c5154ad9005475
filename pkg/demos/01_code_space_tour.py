"""Tour of the 256-point code space: census, anchors, and the ulp staircase."""

import numpy as np

from hif8 import codec

# Every byte decodes to something; count what lives where.
census = {}
for code in range(256):
    cls = codec.classify(code).value
    census[cls] = census.get(cls, 0) + 1
print("census:", census)

table = codec.value_table()
finite = table[np.isfinite(table)]
print("distinct finite values:", len(np.unique(finite)))
print("largest finite:", finite.max(), "smallest positive:", finite[finite > 0].min())

# A few anchor points worth memorizing.
for code in (0x00, 0x01, 0x07, 0x08, 0x0C, 0x35, 0x6E, 0x6F, 0x80):
    d = codec.decode(code)
    print(f"0x{code:02X} -> {d.value!r}  (kind={d.kind.value}, "
          f"E={d.exponent}, M={d.fraction}, width={d.fraction_width})")

# Precision tapers with the exponent: 3 fraction bits near 1.0, fewer
# further out.  The spacing between neighbors (the ulp) shows it directly.
pos = np.sort(finite[finite > 0])
print("\nexponent  width  ulp")
for e in (-22, -16, -8, 0, 4, 8, 15):
    width = codec.fraction_width_for_exponent(e)
    lo = 2.0**e
    inside = pos[(pos >= lo) & (pos < 2 * lo)]
    ulp = float(inside[1] - inside[0]) if len(inside) > 1 else 2.0**e
    print(f"{e:8d}  {width:5d}  {ulp!r}")

# Round-trip sanity: encoding what decode produced lands on the same byte.
assert all(codec.encode_exact(codec.decode(c)) == c for c in range(256))
print("\nencode(decode(code)) == code for all 256 codes")
