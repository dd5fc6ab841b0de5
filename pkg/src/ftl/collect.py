"""Data collection: lap demonstrations driven by the expert and labeled
stills for the gate classifier, following the clock-face protocol."""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .datalog import FrameRecord, LogHeader, quantize_image, write_log
from .render import CameraModel, render_stereo
from .scenario import Scenario
from .sim import (
    CLOCK_ANGLES,
    PedestrianState,
    VehicleState,
    WorldState,
    expert_driver,
    spawn_av_behind,
    vehicle_step,
    wrap_angle,
)


def collect_mcn_stills(scn: Scenario, camera: CameraModel = CameraModel()):
    """Stills of the pedestrian standing at each clock position plus an equal
    number of empty-scene frames; labels come from the renderer's flag."""
    rng = np.random.default_rng(scn.seed)
    records = []
    tick = 0
    positions = sorted(CLOCK_ANGLES)
    for present in (True, False):
        for pos in positions:
            ang = CLOCK_ANGLES[pos]
            for _ in range(scn.frames_per_position):
                # poses sweep the whole field of view and follow-range band,
                # not just centered views, so the gate generalizes off-center
                dist = scn.radius * rng.uniform(0.4, 1.6)
                lateral = rng.uniform(-0.3, 0.3)
                ped = PedestrianState(
                    x=dist * math.cos(ang + lateral),
                    y=dist * math.sin(ang + lateral),
                    heading=rng.uniform(-math.pi, math.pi),
                    identity=scn.identity,
                    visible=present,
                )
                avx = rng.uniform(-1.5, 1.5)
                avy = rng.uniform(-1.5, 1.5)
                bearing = math.atan2(ped.y - avy, ped.x - avx)
                av = VehicleState(
                    x=avx, y=avy,
                    heading=wrap_angle(bearing + rng.uniform(-0.5, 0.5)),
                )
                world = WorldState(av=av, ped=ped, tick=tick, dt=scn.dt)
                image, visible = render_stereo(world, camera)
                records.append(FrameRecord(
                    tick=tick, timestamp=tick * scn.dt,
                    image_u8=quantize_image(image),
                    steering=0.0, throttle=0.0,
                    present=visible,
                    ped_id=scn.identity if visible else None,
                ))
                tick += 1
    return records


def collect_lap(scn: Scenario, lap_seed: int,
                camera: CameraModel = CameraModel(),
                steer_noise: float = 8.0, throttle_noise: float = 4.0,
                kick_every: float = 3.0, kick_len: float = 0.4,
                kick_mag: float = 45.0):
    """One expert-driven lap. The expert's clean command is logged; seeded
    perturbations go into the *executed* command only, so the camera visits
    off-nominal poses (including edge-of-view recoveries, via periodic
    steering kicks) while the training targets stay the expert's corrections."""
    rng = np.random.default_rng(lap_seed)
    script = scn.pedestrian_script()
    ped = script.initial()
    av = spawn_av_behind(ped, gap=rng.uniform(1.8, 2.4))
    records = []
    tick = 0
    noise_s, noise_t = 0.0, 0.0
    next_kick = rng.uniform(1.0, kick_every)
    kick_until, kick_side = -1.0, 1.0
    while not script.done:
        t = tick * scn.dt
        world = WorldState(av=av, ped=ped, tick=tick, dt=scn.dt)
        image, visible = render_stereo(world, camera)
        steering, throttle = expert_driver(world)
        records.append(FrameRecord(
            tick=tick, timestamp=t,
            image_u8=quantize_image(image),
            steering=steering, throttle=throttle,
            present=visible, ped_id=scn.identity if visible else None,
        ))
        # Ornstein-Uhlenbeck-flavored actuation noise, decorrelated per lap
        noise_s += 0.4 * (rng.normal(0.0, steer_noise) - noise_s)
        noise_t += 0.4 * (rng.normal(0.0, throttle_noise) - noise_t)
        if t >= next_kick:
            kick_until = t + kick_len
            kick_side = 1.0 if rng.uniform() < 0.5 else -1.0
            next_kick = t + kick_every * rng.uniform(0.8, 1.4)
        kick = kick_mag * kick_side if t < kick_until else 0.0
        av = vehicle_step(av,
                          min(max(steering + noise_s + kick, -100.0), 100.0),
                          min(max(throttle + noise_t, 0.0), 100.0),
                          scn.dt)
        ped = script.step(scn.dt)
        tick += 1
    return records


def collect_protocol(out_dir, *, identities=("A", "B"),
                     laps_per_identity_direction: int = 5,
                     starts=(12, 3, 6, 9),
                     frames_per_position: int = 150,
                     radius: float = 3.0, speed: float = 1.0,
                     seed: int = 0, dt: float = 0.1,
                     camera: CameraModel = CameraModel()) -> dict:
    """Run the full data protocol: labeled stills for the gate (per identity)
    plus expert-driven laps cycling through the clock-face starts, for both
    directions and identities, one log file per lap.

    Returns {"stills": [paths], "laps": {direction: [paths]}}.
    """
    out_dir = Path(out_dir)
    written = {"stills": [], "laps": {"cw": [], "ccw": []}}
    for k, identity in enumerate(identities):
        scn = Scenario(script="mcn_stills", identity=identity, seed=seed + k,
                       radius=radius, frames_per_position=frames_per_position,
                       dt=dt)
        written["stills"] += collect_scenario(scn, out_dir / "stills", camera)
    lap_no = 0
    for direction in ("cw", "ccw"):
        for identity in identities:
            for j in range(laps_per_identity_direction):
                start = starts[j % len(starts)]
                scn = Scenario(script="clock_lap", identity=identity,
                               direction=direction, start=start, laps=1,
                               radius=radius, speed=speed,
                               seed=seed + 100 + lap_no, dt=dt)
                paths = collect_scenario(scn, out_dir / f"laps_{direction}", camera)
                written["laps"][direction] += paths
                lap_no += 1
    return written


def collect_scenario(scn: Scenario, out_dir,
                     camera: CameraModel = CameraModel()) -> list[Path]:
    """Run a scenario's collection protocol; one log file per lap for laps,
    a single log for stills. Returns the written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    header = LogHeader(image_shape=(6, camera.height, camera.width),
                       dt=scn.dt, scenario=scn.to_text().rstrip("\n"))
    paths = []
    if scn.script == "mcn_stills":
        records = collect_mcn_stills(scn, camera)
        path = out_dir / f"stills_{scn.identity}_{scn.seed}.ftl"
        write_log(path, records, header)
        paths.append(path)
    elif scn.script in ("clock_lap", "vanish_lap"):
        for k in range(scn.laps):
            records = collect_lap(scn, lap_seed=scn.seed * 1000 + k, camera=camera)
            path = out_dir / (f"lap_{scn.identity}_{scn.direction}"
                              f"_{scn.start:02d}_s{scn.seed}_{k}.ftl")
            write_log(path, records, header)
            paths.append(path)
    else:
        raise ValueError(f"scenario script {scn.script!r} has no collect protocol")
    return paths
