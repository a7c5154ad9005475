"""Fixed-field FP8 decoders, precision profiles, and the value-grid
rounder used for cross-format comparisons."""

import math

import numpy as np
import pytest

from hif8 import formats
from hif8.codec import NumberClass


class TestE4M3:
    GOLDEN = {
        0x01: 2.0**-9,
        0x08: 2.0**-6,
        0x30: 0.5,
        0x38: 1.0,
        0x3F: 1.875,
        0x7E: 448.0,
        0xFE: -448.0,
    }

    def test_golden_values(self):
        for code, value in self.GOLDEN.items():
            assert formats.decode_fp8(code, "e4m3").value == value, hex(code)

    def test_specials(self):
        assert formats.decode_fp8(0x00, "e4m3").kind is NumberClass.ZERO
        assert formats.decode_fp8(0x80, "e4m3").kind is NumberClass.ZERO
        assert formats.decode_fp8(0x7F, "e4m3").kind is NumberClass.NAN
        assert formats.decode_fp8(0xFF, "e4m3").kind is NumberClass.NAN

    def test_census(self):
        kinds = [formats.decode_fp8(c, "e4m3").kind for c in range(256)]
        assert kinds.count(NumberClass.NAN) == 2
        assert kinds.count(NumberClass.ZERO) == 2
        assert kinds.count(NumberClass.INFINITY) == 0
        assert kinds.count(NumberClass.FINITE) == 252

    def test_denormals_normalized(self):
        # 5 * 2^-9 = 1.01b * 2^-7
        d = formats.decode_fp8(0x05, "e4m3")
        assert (d.exponent, d.fraction, d.fraction_width) == (-7, 1, 2)
        assert d.value == 5 * 2.0**-9


class TestE5M2:
    GOLDEN = {
        0x01: 2.0**-16,
        0x04: 2.0**-14,
        0x3C: 1.0,
        0x3D: 1.25,
        0x7B: 57344.0,
        0xFB: -57344.0,
    }

    def test_golden_values(self):
        for code, value in self.GOLDEN.items():
            assert formats.decode_fp8(code, "e5m2").value == value, hex(code)

    def test_specials(self):
        assert formats.decode_fp8(0x7C, "e5m2").value == math.inf
        assert formats.decode_fp8(0xFC, "e5m2").value == -math.inf
        for code in (0x7D, 0x7E, 0x7F, 0xFD, 0xFE, 0xFF):
            assert formats.decode_fp8(code, "e5m2").kind is NumberClass.NAN

    def test_census(self):
        kinds = [formats.decode_fp8(c, "e5m2").kind for c in range(256)]
        assert kinds.count(NumberClass.NAN) == 6
        assert kinds.count(NumberClass.ZERO) == 2
        assert kinds.count(NumberClass.INFINITY) == 2
        assert kinds.count(NumberClass.FINITE) == 246

    def test_rejects_unknown_variant(self):
        with pytest.raises(ValueError):
            formats.decode_fp8(0x00, "e3m4")


class TestPrecisionProfiles:
    def test_hif8_profile(self):
        expected = (
            [(e, 0) for e in range(-22, -15)]
            + [(e, 1) for e in range(-15, -7)]
            + [(e, 2) for e in range(-7, -3)]
            + [(e, 3) for e in range(-3, 4)]
            + [(e, 2) for e in range(4, 8)]
            + [(e, 1) for e in range(8, 16)]
        )
        assert formats.precision_profile("hif8") == expected
        assert len(expected) == 38

    def test_e4m3_profile(self):
        expected = [(-9, 0), (-8, 1), (-7, 2)] + [(e, 3) for e in range(-6, 9)]
        assert formats.precision_profile("e4m3") == expected

    def test_e5m2_profile(self):
        expected = [(-16, 0), (-15, 1)] + [(e, 2) for e in range(-14, 16)]
        assert formats.precision_profile("e5m2") == expected

    def test_profiles_contiguous(self):
        for name in formats.FORMAT_NAMES:
            exps = [e for e, _ in formats.precision_profile(name)]
            assert exps == list(range(exps[0], exps[-1] + 1))


class TestDescriptors:
    def test_ranges(self):
        assert (formats.HIF8.exp_min, formats.HIF8.exp_max) == (-22, 15)
        assert (formats.E4M3.exp_min, formats.E4M3.exp_max) == (-9, 8)
        assert (formats.E5M2.exp_min, formats.E5M2.exp_max) == (-16, 15)
        assert formats.HIF8.exp_min_normal == -15
        assert formats.E4M3.exp_min_normal == -6
        assert formats.E5M2.exp_min_normal == -14

    def test_extremes(self):
        assert formats.HIF8.max_finite == 2.0**15
        assert formats.E4M3.max_finite == 448.0
        assert formats.E5M2.max_finite == 57344.0
        assert formats.HIF8.min_positive == 2.0**-22
        assert formats.E4M3.min_positive == 2.0**-9
        assert formats.E5M2.min_positive == 2.0**-16

    def test_infinity_support(self):
        assert formats.HIF8.has_infinity
        assert not formats.E4M3.has_infinity
        assert formats.E5M2.has_infinity

    def test_descriptor_lookup(self):
        assert formats.descriptor("e4m3") is formats.E4M3
        with pytest.raises(ValueError):
            formats.descriptor("fp8")


class TestNearestValue:
    def test_grid_points_are_fixed(self):
        for name in formats.FORMAT_NAMES:
            table = formats.format_value_table(name)
            finite = table[np.isfinite(table)]
            out = formats.round_to_nearest_value(finite, name)
            np.testing.assert_array_equal(out, finite)

    def test_ties_round_away_from_zero(self):
        assert formats.round_to_nearest_value([1.0625], "hif8")[0] == 1.125
        assert formats.round_to_nearest_value([-1.0625], "hif8")[0] == -1.125
        assert formats.round_to_nearest_value([1.0625], "e4m3")[0] == 1.125
        assert formats.round_to_nearest_value([1.125], "e5m2")[0] == 1.25
        # Bottom of the range: halfway between 0 and the min positive.
        assert formats.round_to_nearest_value([2.0**-23], "hif8")[0] == 2.0**-22
        assert formats.round_to_nearest_value([2.0**-24], "hif8")[0] == 0.0

    def test_saturation_and_nan(self):
        out = formats.round_to_nearest_value([1e9, -1e9, math.inf, -math.inf], "e4m3")
        np.testing.assert_array_equal(out, [448.0, -448.0, 448.0, -448.0])
        assert math.isnan(formats.round_to_nearest_value([math.nan], "e5m2")[0])

    def test_against_brute_force(self):
        """searchsorted path agrees with an argmin-over-grid oracle."""
        rng = np.random.default_rng(7)
        x = rng.standard_normal(2000) * np.exp(rng.uniform(-8, 8, 2000))
        for name in formats.FORMAT_NAMES:
            table = formats.format_value_table(name)
            grid = np.unique(table[np.isfinite(table)])
            got = formats.round_to_nearest_value(x, name)
            for xi, gi in zip(x, got):
                err = np.abs(grid - xi)
                best = err.min()
                candidates = grid[err == best]
                want = candidates[np.argmax(np.abs(candidates))]
                assert gi == want, (xi, gi, want)
