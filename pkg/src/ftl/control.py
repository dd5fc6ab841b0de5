"""Hierarchical control loop: MCN gate, RN tracking, sweep search, emergency stop.

Mode semantics:
  * Tracking covers three sub-cases: pedestrian in view (RN drives), the short
    LSTM-memory window right after losing them (RN still drives), and the
    lost-with-confident-steering case where the gate defers to the RN.
  * SweepSearch is committed: once entered it only exits on reacquisition or
    on the timeout. Steering holds full lock toward the last significant
    steering direction at a constant sweep throttle.
  * EmergencyStop is absorbing until an external reset; it emits (0, 0).
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

TRACKING = "tracking"
SWEEP = "sweep"
STOP = "stop"


@dataclass
class ControlParams:
    steering_threshold: float = 15.0   # of the +/-100 steering range
    lost_frames_limit: int = 10        # LSTM recovery window, in frames
    sweep_timeout: float = 10.0        # seconds of sweep before stopping
    sweep_steering: float = 100.0      # full-lock magnitude during sweep
    sweep_throttle: float = 30.0
    moving_average_n: int = 10
    sequence_length: int = 5

    def __post_init__(self):
        for name in ("steering_threshold", "lost_frames_limit", "sweep_timeout",
                     "sweep_steering", "sweep_throttle", "moving_average_n"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class ControllerState:
    mode: str = TRACKING
    sweep_direction: str | None = None        # "left" or "right"
    sweep_started_at: float | None = None
    last_sig_sign: float = 1.0                # +1 right, -1 left
    frames_since_seen: int = 0
    throttle_history: deque = field(default_factory=lambda: deque(maxlen=10))
    frame_window: deque = field(default_factory=lambda: deque(maxlen=5))
    rn_carry: object = None
    diagnostic: str | None = None


def reset(state: ControllerState | None = None,
          params: ControlParams | None = None) -> ControllerState:
    """Fresh controller state: Tracking mode, empty buffers."""
    params = params or ControlParams()
    fresh = ControllerState(
        throttle_history=deque(maxlen=params.moving_average_n),
        frame_window=deque(maxlen=params.sequence_length),
    )
    if state is not None:
        state.__dict__.update(fresh.__dict__)
        return state
    return fresh


def smooth_throttle(history: deque, raw: float) -> float:
    """Moving average of the previous N commanded throttles.

    The raw value is pushed after the average is taken; an empty history is
    seeded with the raw value so the first output equals the first input.
    """
    if not history:
        history.append(raw)
        return raw
    out = sum(history) / len(history)
    history.append(raw)
    return out


def _clamp(v: float, lo: float, hi: float) -> float:
    return min(max(v, lo), hi)


def controller_step(image, clock_seconds: float, state: ControllerState,
                    params: ControlParams, mcn, rn):
    """One control tick. ``mcn(image) -> (p_present, p_absent)``;
    ``rn(window) -> (steering_norm, throttle_norm)`` over the 5-frame window.

    Returns (steering in [-100, 100], throttle in [0, 100], state). The state
    object is updated in place and returned.
    """
    state.frame_window.append(image)

    if state.mode == STOP:
        return 0.0, 0.0, state

    p_present, p_absent = mcn(image)
    if not (math.isfinite(p_present) and math.isfinite(p_absent)):
        state.mode = STOP
        state.diagnostic = "gate output is not finite"
        return 0.0, 0.0, state
    present = p_present > p_absent  # exact tie counts as absent

    if present:
        state.mode = TRACKING
        state.frames_since_seen = 0
        state.sweep_direction = None
        state.sweep_started_at = None
        return _rn_drive(state, params, rn)

    state.frames_since_seen += 1

    if state.mode == TRACKING:
        if state.frames_since_seen <= params.lost_frames_limit:
            # LSTM memory recovery window: keep driving on the RN
            return _rn_drive(state, params, rn)
        steering, throttle, ok = _rn_raw(state, params, rn)
        if not ok:
            state.mode = STOP
            state.diagnostic = "regressor output is not finite"
            return 0.0, 0.0, state
        if abs(steering) >= params.steering_threshold:
            # the gate defers to the RN's inference output
            state.last_sig_sign = math.copysign(1.0, steering)
            throttle = smooth_throttle(state.throttle_history, throttle)
            return _bound(steering, throttle, state)
        state.mode = SWEEP
        state.sweep_direction = "left" if state.last_sig_sign < 0 else "right"
        state.sweep_started_at = clock_seconds
        return _sweep_output(state, params)

    # SWEEP mode, still absent
    if clock_seconds - state.sweep_started_at >= params.sweep_timeout:
        state.mode = STOP
        state.sweep_direction = None
        return 0.0, 0.0, state
    return _sweep_output(state, params)


def _rn_raw(state: ControllerState, params: ControlParams, rn):
    out = rn(padded_window(state, params.sequence_length))
    steer_n, thr_n = out[0], out[1]
    if not (math.isfinite(steer_n) and math.isfinite(thr_n)):
        return 0.0, 0.0, False
    return steer_n * 100.0, thr_n * 100.0, True


def _rn_drive(state: ControllerState, params: ControlParams, rn):
    steering, throttle, ok = _rn_raw(state, params, rn)
    if not ok:
        state.mode = STOP
        state.diagnostic = "regressor output is not finite"
        return 0.0, 0.0, state
    if abs(steering) >= params.steering_threshold:
        state.last_sig_sign = math.copysign(1.0, steering)
    throttle = smooth_throttle(state.throttle_history, throttle)
    return _bound(steering, throttle, state)


def _sweep_output(state: ControllerState, params: ControlParams):
    steering = params.sweep_steering * state.last_sig_sign
    return _bound(steering, params.sweep_throttle, state)


def _bound(steering: float, throttle: float, state: ControllerState):
    return (_clamp(steering, -100.0, 100.0), _clamp(throttle, 0.0, 100.0), state)


def padded_window(state: ControllerState, length: int):
    """The RN window, padded by repeating the oldest frame when underfull."""
    frames = list(state.frame_window)
    if not frames:
        raise ValueError("no frames seen yet")
    while len(frames) < length:
        frames.insert(0, frames[0])
    return frames
