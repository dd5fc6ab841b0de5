"""Closed-loop drives: the trained stack follows the scripted pedestrian."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .control import STOP, ControlParams, controller_step, reset
from .models import mcn_infer, rn_infer
from .render import CameraModel, render_stereo
from .scenario import Scenario
from .sim import WorldState, spawn_av_behind, vehicle_step


def model_callables(mcn_net, rn_net):
    """Adapt networks to the controller's gate/regressor callables."""

    def mcn(image):
        return mcn_infer(mcn_net, image)

    def rn(window):
        steer, thr, _ = rn_infer(rn_net, np.stack(window))
        return steer, thr

    return mcn, rn


def run_drive(scn: Scenario, mcn_net, rn_net,
              params: ControlParams | None = None,
              camera: CameraModel = CameraModel(),
              max_seconds: float = 120.0,
              stop_grace_ticks: int = 5) -> list[dict]:
    """Step the full controller against a scenario; returns the tick trace."""
    params = params or ControlParams()
    mcn, rn = model_callables(mcn_net, rn_net)
    script = scn.pedestrian_script()
    ped = script.initial()
    av = spawn_av_behind(ped, gap=2.0)
    state = reset(params=params)
    trace: list[dict] = []
    t, tick = 0.0, 0
    stop_ticks = 0
    while t < max_seconds:
        world = WorldState(av=av, ped=ped, tick=tick, dt=scn.dt)
        image, visible = render_stereo(world, camera)
        p_present, _ = mcn(image)
        steering, throttle, state = controller_step(
            image, t, state, params, mcn, rn)
        trace.append({
            "tick": tick, "t": round(t, 6),
            "av": {"x": av.x, "y": av.y, "heading": av.heading, "speed": av.speed},
            "ped": {"x": ped.x, "y": ped.y, "visible": ped.visible,
                    "id": ped.identity},
            "mode": state.mode,
            "steering": steering, "throttle": throttle,
            "p_present": p_present,
            "distance": math.hypot(ped.x - av.x, ped.y - av.y),
        })
        av = vehicle_step(av, steering, throttle, scn.dt)
        ped = script.step(scn.dt)
        t += scn.dt
        tick += 1
        if state.mode == STOP:
            stop_ticks += 1
            if stop_ticks >= stop_grace_ticks:
                break
        if script.done and scn.script in ("clock_lap",):
            break
    return trace


def write_trace(path, trace: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for row in trace:
            f.write(json.dumps(row) + "\n")


def read_trace(path) -> list[dict]:
    rows = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


def plot_trace(path_png, trace: list[dict]) -> None:
    """Top-down plot of the AV and pedestrian paths plus command profiles."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ts = [r["t"] for r in trace]
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(11, 5))
    ax0.plot([r["av"]["x"] for r in trace], [r["av"]["y"] for r in trace],
             label="AV")
    ax0.plot([r["ped"]["x"] for r in trace], [r["ped"]["y"] for r in trace],
             "--", label="pedestrian")
    ax0.set_aspect("equal")
    ax0.legend()
    ax0.set_title("paths")
    ax1.plot(ts, [r["steering"] for r in trace], label="steering")
    ax1.plot(ts, [r["throttle"] for r in trace], label="throttle")
    ax1.plot(ts, [100.0 * (r["mode"] == "sweep") for r in trace],
             ":", label="sweep")
    ax1.legend()
    ax1.set_title("commands")
    fig.savefig(path_png, dpi=110)
    plt.close(fig)
