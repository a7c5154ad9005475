"""Loss-scale and per-tensor scale controllers.

Two loss-scaling flavours share one core rule: an overflow halves the
scale (exponent - 1) and restarts the good-step count; a full window of
clean steps doubles it (exponent + 1).

  Backoff (BLS): fixed window, classically 2^16 start and 1000 steps.
  Adaptive (ALS): the window itself moves along a fixed ladder.  Three
    cumulative scale increases bump the window one rung up (growth has
    stabilized, probe less often); three consecutive decreases bump it
    one rung down (recover faster).  An increase interrupts a decrease
    streak, but decreases leave the cumulative increase count alone.

Per-tensor scaling (PTS) tracks one scale exponent per tensor role and,
every update period, re-centers each role so its running amax maps near
2^14, the upper quarter of the representable range:

    scale_exp = clamp(14 - ceil(log2(amax)))

All state is immutable; step functions return new states, so a timeline
can be replayed byte-for-byte from a trace of overflow events.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Mapping

import numpy as np

from hif8 import codec
from hif8.rounding import RoundingSpec, round_array
from hif8.tensorops import fake_quant

__all__ = [
    "DEFAULT_ALS_WINDOWS",
    "WINDOW_STEP_TRIGGER",
    "ROLES",
    "LossScaleState",
    "TimelineRow",
    "bls_init",
    "als_init",
    "bls_step",
    "als_step",
    "replay",
    "TensorScaleState",
    "pts_init",
    "pts_update",
    "scaled_cast_roundtrip",
    "detect_overflow",
]

DEFAULT_ALS_WINDOWS = (1, 20, 50, 100, 200, 500, 1000)

# Scale adjustments in one direction needed to move the window a rung.
WINDOW_STEP_TRIGGER = 3

ROLES = ("activation", "weight", "activation_grad")


@dataclass(frozen=True)
class LossScaleState:
    """Immutable controller state.

    Attributes:
        scale_exp: current loss scale is 2^scale_exp.
        windows: ladder of window lengths (ascending).
        window_index: current rung.
        good_steps: overflow-free steps since the last adjustment.
        increase_count: cumulative increases since the last window bump.
        consecutive_decreases: current decrease streak.
        min_exp / max_exp: clamp bounds for scale_exp.
    """

    scale_exp: int
    windows: tuple[int, ...]
    window_index: int
    good_steps: int = 0
    increase_count: int = 0
    consecutive_decreases: int = 0
    min_exp: int = -32
    max_exp: int = 63

    @property
    def window(self) -> int:
        return self.windows[self.window_index]


@dataclass(frozen=True)
class TimelineRow:
    """Post-step controller state for one trace event."""

    iteration: int
    overflow: bool
    scale_exp: int
    window: int


def bls_init(
    scale_exp: int = 16, window: int = 1000, *, min_exp: int = -32, max_exp: int = 63
) -> LossScaleState:
    """Backoff controller: one fixed window."""
    return LossScaleState(
        scale_exp=scale_exp,
        windows=(window,),
        window_index=0,
        min_exp=min_exp,
        max_exp=max_exp,
    )


def als_init(
    scale_exp: int = 32,
    windows: tuple[int, ...] = DEFAULT_ALS_WINDOWS,
    window_index: int = 1,
    *,
    min_exp: int = -32,
    max_exp: int = 63,
) -> LossScaleState:
    """Adaptive controller: starts at 2^32 with a 20-step window."""
    if not windows:
        raise ValueError("window ladder is empty")
    if not 0 <= window_index < len(windows):
        raise ValueError("window_index outside ladder")
    return LossScaleState(
        scale_exp=scale_exp,
        windows=tuple(windows),
        window_index=window_index,
        min_exp=min_exp,
        max_exp=max_exp,
    )


def bls_step(state: LossScaleState, overflow: bool) -> LossScaleState:
    """One backoff step: no window adaptation, no streak bookkeeping."""
    if overflow:
        return replace(
            state, scale_exp=max(state.scale_exp - 1, state.min_exp), good_steps=0
        )
    good = state.good_steps + 1
    if good < state.window:
        return replace(state, good_steps=good)
    return replace(
        state, scale_exp=min(state.scale_exp + 1, state.max_exp), good_steps=0
    )


def als_step(state: LossScaleState, overflow: bool) -> LossScaleState:
    """One adaptive step: backoff core plus window-ladder movement.

    Streak counters track attempted adjustments even when the scale is
    pinned at a clamp bound.
    """
    if overflow:
        streak = state.consecutive_decreases + 1
        idx = state.window_index
        if streak >= WINDOW_STEP_TRIGGER:
            idx = max(idx - 1, 0)
            streak = 0
        return replace(
            state,
            scale_exp=max(state.scale_exp - 1, state.min_exp),
            good_steps=0,
            consecutive_decreases=streak,
            window_index=idx,
        )
    good = state.good_steps + 1
    if good < state.window:
        return replace(state, good_steps=good)
    rises = state.increase_count + 1
    idx = state.window_index
    if rises >= WINDOW_STEP_TRIGGER:
        idx = min(idx + 1, len(state.windows) - 1)
        rises = 0
    return replace(
        state,
        scale_exp=min(state.scale_exp + 1, state.max_exp),
        good_steps=0,
        increase_count=rises,
        consecutive_decreases=0,
        window_index=idx,
    )


def replay(
    events: Iterable[tuple[int, bool]],
    state: LossScaleState | None = None,
    *,
    controller: str = "als",
) -> list[TimelineRow]:
    """Run a controller over (iteration, overflow) events.

    Returns one TimelineRow per event with the post-step state, which
    serializes to the timeline CSV.
    """
    if controller == "als":
        step = als_step
        state = state if state is not None else als_init()
    elif controller == "bls":
        step = bls_step
        state = state if state is not None else bls_init()
    else:
        raise ValueError(f"unknown controller {controller!r}")
    rows = []
    for iteration, overflow in events:
        state = step(state, bool(overflow))
        rows.append(TimelineRow(int(iteration), bool(overflow), state.scale_exp, state.window))
    return rows


# ---------------------------------------------------------------------------
# Per-tensor scaling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TensorScaleState:
    """One scale exponent per tensor role, refreshed periodically.

    Attributes:
        scale_exps: role -> current scale exponent (stored sorted).
        last_amax: role -> amax recorded at the last applied update.
        update_period: updates fire when iteration % period == 0.
        target_exp: updates aim amax * 2^scale at 2^target_exp.
        min_exp / max_exp: clamp bounds for the scale exponents.
    """

    scale_exps: tuple[tuple[str, int], ...]
    last_amax: tuple[tuple[str, float], ...]
    update_period: int = 10
    target_exp: int = 14
    min_exp: int = -127
    max_exp: int = 127

    def scale_exp(self, role: str) -> int:
        return dict(self.scale_exps)[role]

    def amax(self, role: str) -> float:
        return dict(self.last_amax)[role]


def pts_init(
    roles: tuple[str, ...] = ROLES,
    *,
    update_period: int = 10,
    target_exp: int = 14,
    min_exp: int = -127,
    max_exp: int = 127,
) -> TensorScaleState:
    """All roles start unscaled with no recorded amax."""
    return TensorScaleState(
        scale_exps=tuple(sorted((r, 0) for r in roles)),
        last_amax=tuple(sorted((r, 0.0) for r in roles)),
        update_period=update_period,
        target_exp=target_exp,
        min_exp=min_exp,
        max_exp=max_exp,
    )


def _ceil_log2(x: float) -> int:
    m, e = math.frexp(x)  # x = m * 2^e, m in [0.5, 1)
    return e - 1 if m == 0.5 else e


def pts_update(
    state: TensorScaleState, amax: Mapping[str, float], iteration: int
) -> TensorScaleState:
    """Refresh scales from observed per-role amax values.

    Off-period iterations return the state unchanged.  Roles whose amax
    is zero, negative, or non-finite keep their previous scale; sane
    roles get scale_exp = clamp(target_exp - ceil(log2(amax))).
    """
    if iteration % state.update_period != 0:
        return state
    scales = dict(state.scale_exps)
    recorded = dict(state.last_amax)
    for role, value in amax.items():
        if role not in scales:
            raise KeyError(f"unknown tensor role {role!r}")
        value = float(value)
        if value <= 0.0 or not math.isfinite(value):
            continue
        scales[role] = max(
            state.min_exp, min(state.max_exp, state.target_exp - _ceil_log2(value))
        )
        recorded[role] = value
    return replace(
        state,
        scale_exps=tuple(sorted(scales.items())),
        last_amax=tuple(sorted(recorded.items())),
    )


def scaled_cast_roundtrip(
    t, state: TensorScaleState, role: str, spec: RoundingSpec = RoundingSpec()
) -> np.ndarray:
    """fake_quant through the role's current scale exponent."""
    return fake_quant(t, spec, state.scale_exp(role))


def detect_overflow(t, scale_exp: int = 0) -> bool:
    """True when quantizing t * 2^scale_exp would produce Inf or NaN."""
    codes = round_array(t, RoundingSpec(), scale_exp=scale_exp)
    bad = (codes == codec.POS_INF_CODE) | (codes == codec.NEG_INF_CODE)
    return bool(np.any(bad | (codes == codec.NAN_CODE)))
