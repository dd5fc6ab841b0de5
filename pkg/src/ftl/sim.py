"""2-D kinematic world: bicycle-model vehicle, scripted pedestrians, and the
pure-pursuit expert that stands in for the human teleoperator.

Conventions: x east, y north, headings in radians counterclockwise from +x.
Steering commands are in [-100, 100] with negative = left; throttle commands
are in [0, 100] mapping linearly to a 2.0 m/s top speed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

CLOCK_ANGLES = {12: math.pi / 2, 3: 0.0, 6: -math.pi / 2, 9: math.pi}


@dataclass(frozen=True)
class VehicleParams:
    wheelbase: float = 0.5
    max_steer_rad: float = math.radians(30.0)
    max_speed: float = 2.0
    speed_tau: float = 0.5      # first-order throttle lag, seconds
    stiction_speed: float = 5e-3


@dataclass
class VehicleState:
    x: float = 0.0
    y: float = 0.0
    heading: float = 0.0
    speed: float = 0.0


@dataclass
class PedestrianState:
    x: float = 0.0
    y: float = 0.0
    heading: float = 0.0
    speed: float = 0.0
    identity: str = "A"
    visible: bool = True


@dataclass
class WorldState:
    av: VehicleState = field(default_factory=VehicleState)
    ped: PedestrianState = field(default_factory=PedestrianState)
    tick: int = 0
    dt: float = 0.1


def wrap_angle(a: float) -> float:
    return math.atan2(math.sin(a), math.cos(a))


def vehicle_step(state: VehicleState, steering: float, throttle: float,
                 dt: float, params: VehicleParams = VehicleParams()) -> VehicleState:
    """Advance the bicycle model one step; turns integrate along exact arcs.

    Steering maps to a wheel angle of up to 30 degrees (negative command =
    left turn = heading increase); throttle sets a target speed reached
    through a first-order lag.
    """
    steering = min(max(steering, -100.0), 100.0)
    throttle = min(max(throttle, 0.0), 100.0)
    delta = -(steering / 100.0) * params.max_steer_rad
    target = (throttle / 100.0) * params.max_speed
    alpha = 1.0 - math.exp(-dt / params.speed_tau)
    speed = state.speed + (target - state.speed) * alpha
    if target == 0.0 and speed < params.stiction_speed:
        speed = 0.0
    x, y, heading = state.x, state.y, state.heading
    if speed > 0.0:
        if abs(delta) < 1e-9:
            x += speed * math.cos(heading) * dt
            y += speed * math.sin(heading) * dt
        else:
            radius = params.wheelbase / math.tan(delta)  # signed turn radius
            dtheta = speed * dt / radius
            new_heading = heading + dtheta
            x += radius * (math.sin(new_heading) - math.sin(heading))
            y += radius * (math.cos(heading) - math.cos(new_heading))
            heading = wrap_angle(new_heading)
    return VehicleState(x=x, y=y, heading=heading, speed=speed)


def turn_radius(params: VehicleParams = VehicleParams()) -> float:
    """Radius of the full-lock circle: wheelbase / tan(max steer)."""
    return params.wheelbase / math.tan(params.max_steer_rad)


# ---------------------------------------------------------------------------
# pedestrian trajectory scripts

class ClockLapScript:
    """Walk one full circular lap from a clock-face start position, then stop."""

    def __init__(self, start: int = 12, direction: str = "ccw",
                 radius: float = 3.0, speed: float = 1.0, identity: str = "A",
                 center=(0.0, 0.0)):
        if start not in CLOCK_ANGLES:
            raise ValueError(f"start must be one of {sorted(CLOCK_ANGLES)}")
        if direction not in ("cw", "ccw"):
            raise ValueError("direction must be 'cw' or 'ccw'")
        if radius <= 0 or speed <= 0:
            raise ValueError("radius and speed must be positive")
        self.start = start
        self.direction = direction
        self.radius = radius
        self.speed = speed
        self.identity = identity
        self.center = center
        self.reset()

    def reset(self):
        self._phase = 0.0  # walked arc angle, 0..2*pi

    @property
    def done(self) -> bool:
        return self._phase >= 2.0 * math.pi

    def state_at_phase(self, phase: float) -> PedestrianState:
        sign = 1.0 if self.direction == "ccw" else -1.0
        ang = CLOCK_ANGLES[self.start] + sign * phase
        x = self.center[0] + self.radius * math.cos(ang)
        y = self.center[1] + self.radius * math.sin(ang)
        heading = wrap_angle(ang + sign * math.pi / 2.0)  # tangent
        speed = 0.0 if phase >= 2.0 * math.pi else self.speed
        return PedestrianState(x=x, y=y, heading=heading, speed=speed,
                               identity=self.identity)

    def initial(self) -> PedestrianState:
        return self.state_at_phase(0.0)

    def step(self, dt: float) -> PedestrianState:
        if not self.done:
            self._phase = min(self._phase + self.speed * dt / self.radius,
                              2.0 * math.pi)
        return self.state_at_phase(self._phase)


class RandomWalkScript:
    """Seeded bounded-turn-rate wander inside a rectangular arena."""

    def __init__(self, seed: int = 0, bounds=(-6.0, -6.0, 6.0, 6.0),
                 speed_range=(0.5, 1.2), max_turn_rate: float = 1.2,
                 turn_accel: float = 2.5, identity: str = "A",
                 start=None):
        self.seed = seed
        self.bounds = tuple(bounds)
        self.speed_range = speed_range
        self.max_turn_rate = max_turn_rate
        self.turn_accel = turn_accel
        self.identity = identity
        self._start = start
        self.reset()

    def reset(self):
        self._rng = np.random.default_rng(self.seed)
        xmin, ymin, xmax, ymax = self.bounds
        if self._start is None:
            x = 0.5 * (xmin + xmax)
            y = 0.5 * (ymin + ymax)
        else:
            x, y = self._start
        self._state = PedestrianState(
            x=x, y=y, heading=float(self._rng.uniform(-math.pi, math.pi)),
            speed=float(np.mean(self.speed_range)), identity=self.identity)
        self._turn_rate = 0.0

    @property
    def done(self) -> bool:
        return False

    def initial(self) -> PedestrianState:
        return replace(self._state)

    def step(self, dt: float) -> PedestrianState:
        s = self._state
        self._turn_rate += float(self._rng.normal(0.0, self.turn_accel)) * dt
        self._turn_rate = min(max(self._turn_rate, -self.max_turn_rate),
                              self.max_turn_rate)
        lo, hi = self.speed_range
        speed = min(max(s.speed + float(self._rng.normal(0.0, 0.3)) * dt, lo), hi)
        heading = wrap_angle(s.heading + self._turn_rate * dt)
        x = s.x + speed * math.cos(heading) * dt
        y = s.y + speed * math.sin(heading) * dt
        xmin, ymin, xmax, ymax = self.bounds
        if x < xmin or x > xmax:
            heading = wrap_angle(math.pi - heading)
            x = min(max(x, xmin), xmax)
        if y < ymin or y > ymax:
            heading = wrap_angle(-heading)
            y = min(max(y, ymin), ymax)
        self._state = PedestrianState(x=x, y=y, heading=heading, speed=speed,
                                      identity=s.identity)
        return replace(self._state)


class VanishWrapper:
    """Run an inner script but hide the pedestrian after a fixed time."""

    def __init__(self, inner, vanish_at: float):
        self.inner = inner
        self.vanish_at = vanish_at
        self._elapsed = 0.0

    def reset(self):
        self.inner.reset()
        self._elapsed = 0.0

    @property
    def done(self) -> bool:
        return self.inner.done

    def initial(self) -> PedestrianState:
        return self.inner.initial()

    def step(self, dt: float) -> PedestrianState:
        self._elapsed += dt
        state = self.inner.step(dt)
        if self._elapsed >= self.vanish_at:
            state.visible = False
        return state


# ---------------------------------------------------------------------------
# expert driver (pure pursuit toward the pedestrian)

@dataclass(frozen=True)
class ExpertParams:
    standoff: float = 1.5       # meters kept to the pedestrian
    throttle_gain: float = 100.0  # throttle units per meter of range error
    max_throttle: float = 60.0
    lookahead: float = 1.2      # pure-pursuit lookahead, meters
    vehicle: VehicleParams = VehicleParams()


def expert_driver(world: WorldState,
                  params: ExpertParams = ExpertParams()) -> tuple[float, float]:
    """Steering/throttle that chases the pedestrian at a standoff distance.

    Defined only while the pedestrian is visible; callers gate on that.
    Steering is pure pursuit with a short fixed lookahead, which keeps the
    correction stiff at large bearings (a lookahead at the target itself
    responds too slowly for a cloned policy to stay converged).
    """
    av, ped = world.av, world.ped
    dx, dy = ped.x - av.x, ped.y - av.y
    dist = math.hypot(dx, dy)
    alpha = wrap_angle(math.atan2(dy, dx) - av.heading)
    if dist > 1e-6:
        lookahead = min(params.lookahead, dist)
        delta = math.atan2(2.0 * params.vehicle.wheelbase * math.sin(alpha),
                           lookahead)
    else:
        delta = 0.0
    steering = -delta / params.vehicle.max_steer_rad * 100.0
    steering = min(max(steering, -100.0), 100.0)
    throttle = min(max(params.throttle_gain * (dist - params.standoff), 0.0),
                   params.max_throttle)
    return steering, throttle


def spawn_av_behind(ped: PedestrianState, gap: float = 2.0) -> VehicleState:
    """Place the vehicle ``gap`` meters behind the pedestrian, facing them."""
    x = ped.x - gap * math.cos(ped.heading)
    y = ped.y - gap * math.sin(ped.heading)
    return VehicleState(x=x, y=y, heading=ped.heading, speed=0.0)
