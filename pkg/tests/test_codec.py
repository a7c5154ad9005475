"""Codec tests: an independent bit-string decoder is the oracle.

The oracle parses each byte as text (prefix scan, exact Fraction
arithmetic) so it shares no code with the packed-integer implementation.
"""

import math
from fractions import Fraction

import numpy as np
import pytest

from hif8 import codec
from hif8.codec import CodeClass, DecodedNumber, NumberClass


def oracle_decode(code):
    """Decode via string bit-scanning and Fraction arithmetic.

    Returns one of:
        ("zero",), ("nan",), ("inf", sign),
        ("finite", Fraction value, exponent, fraction, width)
    """
    bits = f"{code:08b}"
    sign = -1 if bits[0] == "1" else 1
    rest = bits[1:]
    for prefix, d in (("11", 4), ("10", 3), ("01", 2), ("001", 1), ("0001", 0)):
        if rest.startswith(prefix):
            body = rest[len(prefix):]
            break
    else:
        m = int(rest[4:], 2)
        if m == 0:
            return ("zero",) if sign > 0 else ("nan",)
        e = m - 23
        return ("finite", Fraction(sign) * Fraction(2) ** e, e, 0, 0)
    if d == 0:
        e = 0
    else:
        mag = int("1" + body[1:d], 2)  # hidden leading magnitude bit
        e = -mag if body[0] == "1" else mag
        body = body[d:]
    width = len(body)
    m = int(body, 2) if body else 0
    if d == 4 and e == 15 and m == 1:
        return ("inf", sign)
    value = Fraction(sign) * (1 + Fraction(m, 2**width)) * Fraction(2) ** e
    return ("finite", value, e, m, width)


class TestDecodeAgainstOracle:
    def test_all_256_patterns(self):
        """Packed-field decode matches the bit-string oracle everywhere."""
        for code in range(256):
            got = codec.decode(code)
            want = oracle_decode(code)
            if want[0] == "zero":
                assert got.kind is NumberClass.ZERO and got.value == 0.0
            elif want[0] == "nan":
                assert got.kind is NumberClass.NAN and math.isnan(got.value)
            elif want[0] == "inf":
                assert got.kind is NumberClass.INFINITY
                assert got.value == want[1] * math.inf
            else:
                _, value, e, m, width = want
                assert got.kind is NumberClass.FINITE
                assert Fraction(got.value) == value, f"code 0x{code:02X}"
                assert (got.exponent, got.fraction, got.fraction_width) == (e, m, width)
                assert got.sign == (1 if value > 0 else -1)

    def test_decode_is_total_but_bounded(self):
        with pytest.raises(ValueError):
            codec.decode(-1)
        with pytest.raises(ValueError):
            codec.decode(256)


class TestKnownCodePoints:
    """Hand-checked anchor values for the corners of the format."""

    ANCHORS = {
        0x00: 0.0,
        0x01: 2.0**-22,
        0x07: 2.0**-16,
        0x08: 1.0,
        0x0C: 1.5,
        0x8C: -1.5,
        0x35: 0.40625,
        0x7E: 2.0**-15,
        0x6E: 2.0**15,
        0xEE: -(2.0**15),
    }

    def test_finite_anchors(self):
        for code, value in self.ANCHORS.items():
            assert codec.decode(code).value == value, hex(code)

    def test_specials(self):
        assert math.isnan(codec.decode(0x80).value)
        assert codec.decode(0x6F).value == math.inf
        assert codec.decode(0xEF).value == -math.inf

    def test_named_constants(self):
        assert codec.MAX_FINITE == 2.0**15
        assert codec.MIN_NORMAL == 2.0**-15
        assert codec.MIN_POSITIVE == 2.0**-22
        assert codec.decode(codec.MAX_FINITE_CODE).value == codec.MAX_FINITE


class TestCensus:
    def test_class_counts(self):
        """1 Zero, 1 NaN, 2 Infinities, 14 denormals, 238 normals."""
        counts = {}
        for code in range(256):
            kind = codec.classify(code)
            counts[kind] = counts.get(kind, 0) + 1
        assert counts == {
            CodeClass.ZERO: 1,
            CodeClass.NAN: 1,
            CodeClass.INFINITY: 2,
            CodeClass.DENORMAL: 14,
            CodeClass.NORMAL: 238,
        }

    def test_no_redundant_encodings(self):
        """252 finite nonzero values plus zero: all distinct."""
        finite = [
            d.value
            for _, d in codec.enumerate_all()
            if d.kind in (NumberClass.FINITE, NumberClass.ZERO)
        ]
        assert len(finite) == 253
        assert len(set(finite)) == 253
        positive = [v for v in finite if v > 0]
        assert len(positive) == 126

    def test_value_table_matches_decode(self):
        table = codec.value_table()
        assert table.dtype == np.float64
        for code, d in codec.enumerate_all():
            if d.kind is NumberClass.NAN:
                assert math.isnan(table[code])
            else:
                assert table[code] == d.value


class TestRoundTrip:
    def test_encode_exact_inverts_decode(self):
        for code in range(256):
            assert codec.encode_exact(codec.decode(code)) == code

    def test_encode_value_inverts_decode(self):
        for code, d in codec.enumerate_all():
            if d.kind is NumberClass.NAN:
                assert codec.encode_value(d.value) == codec.NAN_CODE
            else:
                assert codec.encode_value(d.value) == code

    def test_negative_zero_folds_to_zero(self):
        assert codec.encode_value(-0.0) == codec.ZERO_CODE

    def test_unrepresentable_values_raise(self):
        for x in (0.3, 2.0**16, 1.0 + 2.0**-4, 2.0**-23, -3.1):
            with pytest.raises(codec.NotRepresentable):
                codec.encode_value(x)

    def test_infinity_slot_is_not_finite(self):
        ghost = DecodedNumber(NumberClass.FINITE, 1, 15, 1, 1, 1.5 * 2.0**15)
        with pytest.raises(codec.NotRepresentable):
            codec.encode_exact(ghost)

    def test_bad_field_combinations_raise(self):
        bad = [
            DecodedNumber(NumberClass.FINITE, 1, 16, 0, 1, 2.0**16),
            DecodedNumber(NumberClass.FINITE, 1, 0, 8, 3, 2.0),
            DecodedNumber(NumberClass.FINITE, 1, 0, 0, 2, 1.0),
        ]
        for ghost in bad:
            with pytest.raises(codec.NotRepresentable):
                codec.encode_exact(ghost)


class TestOrdering:
    def test_field_order_is_value_order(self):
        """Sorting positive finite codes by (E, M) sorts by magnitude."""
        pos = [
            d
            for _, d in codec.enumerate_all()
            if d.kind is NumberClass.FINITE and d.sign > 0
        ]
        pos.sort(key=lambda d: (d.exponent, d.fraction))
        values = [d.value for d in pos]
        assert values == sorted(values)
        assert all(a < b for a, b in zip(values, values[1:]))

    def test_ulp_spacing_within_binade(self):
        """Within one binade the grid step is exactly 2^(E - width)."""
        pos = [
            d
            for _, d in codec.enumerate_all()
            if d.kind is NumberClass.FINITE and d.sign > 0
        ]
        by_exp = {}
        for d in pos:
            by_exp.setdefault(d.exponent, []).append(d)
        for e, group in by_exp.items():
            group.sort(key=lambda d: d.fraction)
            w = group[0].fraction_width
            step = math.ldexp(1.0, e - w) if w else None
            for a, b in zip(group, group[1:]):
                assert b.value - a.value == step


class TestFractionWidthProfile:
    def test_profile_matches_population(self):
        """Each binade holds 2^w codes (minus the Infinity slot at E=15)."""
        population = {}
        for _, d in codec.enumerate_all():
            if d.kind is NumberClass.FINITE and d.sign > 0:
                population[d.exponent] = population.get(d.exponent, 0) + 1
        for e in range(codec.EXP_MIN, codec.EXP_MAX + 1):
            w = codec.fraction_width_for_exponent(e)
            expected = (1 << w) - (1 if e == 15 else 0)
            assert population[e] == expected, f"binade {e}"

    def test_profile_bounds(self):
        with pytest.raises(ValueError):
            codec.fraction_width_for_exponent(-23)
        with pytest.raises(ValueError):
            codec.fraction_width_for_exponent(16)
