"""Loss-scale controllers and per-tensor scaling."""

import math

import numpy as np
import pytest

from hif8 import scaling
from hif8.scaling import (
    DEFAULT_ALS_WINDOWS,
    LossScaleState,
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


def run(step, state, events):
    out = []
    for ov in events:
        state = step(state, ov)
        out.append((state.scale_exp, state.window))
    return state, out


class TestBackoff:
    def test_overflow_halves_and_resets(self):
        state = bls_init(scale_exp=16, window=5)
        state = bls_step(state, False)
        state = bls_step(state, False)
        assert state.good_steps == 2
        state = bls_step(state, True)
        assert (state.scale_exp, state.good_steps) == (15, 0)

    def test_full_window_doubles(self):
        state = bls_init(scale_exp=16, window=3)
        _, trace = run(bls_step, state, [False] * 7)
        assert [s for s, _ in trace] == [16, 16, 17, 17, 17, 18, 18]

    def test_clamps(self):
        state = bls_init(scale_exp=-32, window=1, min_exp=-32, max_exp=-31)
        state = bls_step(state, True)
        assert state.scale_exp == -32
        state = bls_step(state, False)
        state = bls_step(state, False)
        assert state.scale_exp == -31
        state = bls_step(state, False)
        assert state.scale_exp == -31  # pinned at max

    def test_defaults(self):
        state = bls_init()
        assert (state.scale_exp, state.window) == (16, 1000)


class TestAdaptive:
    def test_defaults(self):
        state = als_init()
        assert (state.scale_exp, state.window) == (32, 20)
        assert state.windows == DEFAULT_ALS_WINDOWS

    def test_hand_computed_timeline(self):
        """Overflow, a full good window, then three straight overflows
        walk the window down one rung; two more good windows walk it
        back up."""
        events = [True] + [False] * 20 + [True, True, True, False, False]
        _, trace = run(als_step, als_init(), events)
        want = (
            [(31, 20)] * 20
            + [(32, 20), (31, 20), (30, 20), (29, 1), (30, 1), (31, 20)]
        )
        assert trace == want

    def test_increase_breaks_decrease_streak(self):
        state = als_init(windows=(1, 5), window_index=1)
        state = als_step(state, True)
        state = als_step(state, True)
        assert state.consecutive_decreases == 2
        for _ in range(5):
            state = als_step(state, False)
        assert state.consecutive_decreases == 0
        # Two more overflows: streak restarts, window stays put.
        state = als_step(state, True)
        state = als_step(state, True)
        assert state.window_index == 1

    def test_decreases_keep_cumulative_increases(self):
        state = als_init(scale_exp=10, windows=(2, 4), window_index=0)
        for _ in range(4):  # two full windows -> two increases
            state = als_step(state, False)
        assert state.increase_count == 2
        state = als_step(state, True)  # decrease does not reset it
        assert state.increase_count == 2
        state = als_step(state, False)
        state = als_step(state, False)  # third increase
        assert state.increase_count == 0
        assert state.window_index == 1

    def test_window_ladder_saturates(self):
        top = als_init(windows=(1, 2), window_index=1)
        for _ in range(3 * 2 * 3):
            top = als_step(top, False)
        assert top.window_index == 1
        bottom = als_init(windows=(1, 2), window_index=0)
        for _ in range(9):
            bottom = als_step(bottom, True)
        assert bottom.window_index == 0

    def test_backoff_equals_adaptive_with_singleton_ladder(self):
        rng = np.random.default_rng(61)
        events = rng.random(500) < 0.1
        for w in (1, 7, 50):
            b = bls_init(scale_exp=20, window=w)
            a = als_init(scale_exp=20, windows=(w,), window_index=0)
            _, bt = run(bls_step, b, events)
            _, at = run(als_step, a, events)
            assert bt == at

    def test_init_validation(self):
        with pytest.raises(ValueError):
            als_init(windows=())
        with pytest.raises(ValueError):
            als_init(windows=(1, 2), window_index=5)


class TestReplay:
    def test_rows_carry_post_step_state(self):
        rows = replay([(1, False), (2, True)], bls_init(scale_exp=5, window=1))
        # controller defaults to als but an explicit state wins
        assert rows[0].iteration == 1 and rows[0].overflow is False
        assert rows[1].scale_exp == 5  # 5 -> 6 (window 1) -> 5 (overflow)
        assert rows[0].scale_exp == 6

    def test_controller_selection(self):
        rows = replay([(1, False)], controller="bls")
        assert rows[0].scale_exp == 16
        rows = replay([(1, False)], controller="als")
        assert rows[0].scale_exp == 32
        with pytest.raises(ValueError):
            replay([], controller="pid")


class TestPerTensorScaling:
    def test_formula_goldens(self):
        state = pts_init()
        state = pts_update(state, {"activation": 2.0**14}, iteration=0)
        assert state.scale_exp("activation") == 0
        state = pts_update(state, {"weight": 2.0**-6}, iteration=10)
        assert state.scale_exp("weight") == 20
        state = pts_update(state, {"activation_grad": 12.0}, iteration=20)
        assert state.scale_exp("activation_grad") == 10  # ceil(log2 12) = 4

    def test_off_period_is_identity(self):
        state = pts_init()
        same = pts_update(state, {"activation": 100.0}, iteration=7)
        assert same is state

    def test_degenerate_amax_keeps_scale(self):
        state = pts_init()
        state = pts_update(state, {"weight": 4.0}, iteration=0)
        for bad in (0.0, -1.0, math.inf, math.nan):
            after = pts_update(state, {"weight": bad}, iteration=10)
            assert after.scale_exp("weight") == state.scale_exp("weight")

    def test_clamps_and_roles(self):
        state = pts_init(min_exp=-5, max_exp=5)
        state = pts_update(state, {"activation": 2.0**40}, iteration=0)
        assert state.scale_exp("activation") == -5
        state = pts_update(state, {"activation": 2.0**-40}, iteration=10)
        assert state.scale_exp("activation") == 5
        with pytest.raises(KeyError):
            pts_update(state, {"gradient_of_vibes": 1.0}, iteration=0)

    def test_last_amax_recorded(self):
        state = pts_init()
        state = pts_update(state, {"activation": 3.5}, iteration=0)
        assert state.amax("activation") == 3.5
        assert state.amax("weight") == 0.0

    def test_scaled_roundtrip_recovers_small_magnitudes(self):
        rng = np.random.default_rng(62)
        t = np.exp2(rng.uniform(-30, -20, 2000)).astype(np.float32)
        state = pts_init()
        unscaled = scaled_cast_roundtrip(t, state, "activation")
        assert np.mean(unscaled == 0) > 0.5
        state = pts_update(state, {"activation": float(t.max())}, iteration=0)
        scaled = scaled_cast_roundtrip(t, state, "activation")
        assert np.mean(scaled == 0) == 0.0


class TestDetectOverflow:
    def test_detects_range_and_nan(self):
        assert detect_overflow(np.array([1e30], np.float32))
        assert detect_overflow(np.array([np.nan], np.float32))
        assert detect_overflow(np.array([-np.inf], np.float32))
        assert not detect_overflow(np.array([1.0, -2.0**15], np.float32))

    def test_scale_pushes_over(self):
        t = np.array([2.0**10], np.float32)
        assert not detect_overflow(t)
        assert detect_overflow(t, scale_exp=10)
