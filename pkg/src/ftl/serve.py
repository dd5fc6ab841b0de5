"""Live simulation endpoint: steps the world at 10 Hz, broadcasts state over
a WebSocket, and accepts pedestrian-steer / AV-teleop / mode / record commands.

Wire protocol (one JSON object per message; newline-delimited batches are
accepted on receive):
  server -> client:
    {"type":"state","tick":int,
     "av":{"x","y","heading","steering","throttle","mode"},
     "ped":{"x","y","heading","id"},
     "mcn":{"p_present"}}
    {"type":"error","detail":str}
  client -> server:
    {"type":"ped_input","turn":-1|0|1,"speed":0..1.2}
    {"type":"teleop","steering":-100..100,"throttle":0..100}
    {"type":"mode","value":"auto"|"teleop"}
    {"type":"record","action":"start"|"stop","path":str}
"""
from __future__ import annotations

import asyncio
import contextlib
import json
import math
import time

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .control import ControlParams, controller_step, reset
from .datalog import FrameRecord, LogHeader, quantize_image, write_log
from .drive import model_callables
from .models import load_model, mcn_infer
from .render import CameraModel, render_stereo
from .scenario import Scenario
from .sim import (
    PedestrianState,
    VehicleState,
    WorldState,
    expert_driver,
    vehicle_step,
    wrap_angle,
)

PED_TURN_RATE = 1.5  # rad/s at full turn input
PED_MAX_SPEED = 1.2


class SimSession:
    """Single simulated world driven by the serve loop; all mutation happens
    on that loop (handlers run on the same event loop, so calls serialize)."""

    def __init__(self, scenario: Scenario | None = None,
                 mcn_net=None, rn_net=None,
                 camera: CameraModel = CameraModel()):
        self.scn = scenario or Scenario(script="random_walk")
        self.camera = camera
        self.mcn_net = mcn_net
        self.rn_net = rn_net
        self.dt = self.scn.dt
        self.tick = 0
        self.mode = "auto"
        self.teleop = (0.0, 0.0)
        self.ped_turn = 0
        self.ped_speed = 0.8
        xmin, ymin, xmax, ymax = self.scn.arena
        self.ped = PedestrianState(x=(xmin + xmax) / 2 + 2.0,
                                   y=(ymin + ymax) / 2,
                                   heading=math.pi / 2,
                                   identity=self.scn.identity)
        self.av = VehicleState()
        self.ctrl_params = ControlParams()
        self.ctrl_state = reset(params=self.ctrl_params)
        if mcn_net is not None and rn_net is not None:
            self._mcn_fn, self._rn_fn = model_callables(mcn_net, rn_net)
        else:
            self._mcn_fn = self._rn_fn = None
        self._recording: list[FrameRecord] | None = None
        self._record_path: str | None = None
        self.last_commands = (0.0, 0.0)
        self.last_p_present = 0.0

    # -- command handling ---------------------------------------------------

    def handle(self, msg: dict) -> dict | None:
        kind = msg.get("type")
        if kind == "ped_input":
            turn = msg.get("turn", 0)
            if turn not in (-1, 0, 1):
                return {"type": "error", "detail": f"turn must be -1|0|1, got {turn}"}
            self.ped_turn = turn
            if "speed" in msg:
                self.ped_speed = min(max(float(msg["speed"]), 0.0), PED_MAX_SPEED)
            return None
        if kind == "teleop":
            steering = min(max(float(msg.get("steering", 0.0)), -100.0), 100.0)
            throttle = min(max(float(msg.get("throttle", 0.0)), 0.0), 100.0)
            self.teleop = (steering, throttle)
            return None
        if kind == "mode":
            value = msg.get("value")
            if value not in ("auto", "teleop"):
                return {"type": "error", "detail": f"unknown mode {value!r}"}
            self.mode = value
            if value == "auto":
                self.ctrl_state = reset(params=self.ctrl_params)
            return None
        if kind == "record":
            return self._handle_record(msg)
        return {"type": "error", "detail": f"unknown message type {kind!r}"}

    def _handle_record(self, msg: dict) -> dict | None:
        action = msg.get("action")
        if action == "start":
            path = msg.get("path")
            if not path:
                return {"type": "error", "detail": "record start needs a path"}
            self._recording = []
            self._record_path = path
            return None
        if action == "stop":
            if self._recording is None:
                return {"type": "error", "detail": "no recording in progress"}
            header = LogHeader(
                image_shape=(6, self.camera.height, self.camera.width),
                dt=self.dt, scenario=self.scn.to_text().rstrip("\n"))
            write_log(self._record_path, self._recording, header)
            self._recording = None
            self._record_path = None
            return None
        return {"type": "error", "detail": f"unknown record action {action!r}"}

    # -- stepping -----------------------------------------------------------

    def step(self) -> dict:
        # pedestrian under human steer
        heading = wrap_angle(self.ped.heading
                             + self.ped_turn * PED_TURN_RATE * self.dt)
        x = self.ped.x + self.ped_speed * math.cos(heading) * self.dt
        y = self.ped.y + self.ped_speed * math.sin(heading) * self.dt
        xmin, ymin, xmax, ymax = self.scn.arena
        if x < xmin or x > xmax:
            heading = wrap_angle(math.pi - heading)
            x = min(max(x, xmin), xmax)
        if y < ymin or y > ymax:
            heading = wrap_angle(-heading)
            y = min(max(y, ymin), ymax)
        self.ped = PedestrianState(x=x, y=y, heading=heading,
                                   speed=self.ped_speed,
                                   identity=self.ped.identity)

        world = WorldState(av=self.av, ped=self.ped, tick=self.tick, dt=self.dt)
        image, visible = render_stereo(world, self.camera)

        if self.mcn_net is not None:
            p_present, _ = mcn_infer(self.mcn_net, image)
        else:
            p_present = float(visible)
        self.last_p_present = p_present

        if self.mode == "teleop":
            steering, throttle = self.teleop
        elif self._mcn_fn is not None:
            steering, throttle, self.ctrl_state = controller_step(
                image, self.tick * self.dt, self.ctrl_state,
                self.ctrl_params, self._mcn_fn, self._rn_fn)
        else:
            # no checkpoints loaded: fall back to the expert demonstrator
            dist = math.hypot(self.ped.x - self.av.x, self.ped.y - self.av.y)
            if dist > 0.2 and visible:
                steering, throttle = expert_driver(world)
            else:
                steering, throttle = 0.0, 0.0
        self.last_commands = (steering, throttle)

        if self._recording is not None:
            self._recording.append(FrameRecord(
                tick=self.tick, timestamp=self.tick * self.dt,
                image_u8=quantize_image(image),
                steering=steering, throttle=throttle,
                present=bool(visible),
                ped_id=self.ped.identity if visible else None))

        self.av = vehicle_step(self.av, steering, throttle, self.dt)
        self.tick += 1
        return self.state_message()

    def state_message(self) -> dict:
        steering, throttle = self.last_commands
        mode = self.ctrl_state.mode if (self.mode == "auto"
                                        and self._mcn_fn is not None) else self.mode
        return {
            "type": "state",
            "tick": self.tick,
            "av": {"x": self.av.x, "y": self.av.y, "heading": self.av.heading,
                   "steering": steering, "throttle": throttle, "mode": mode},
            "ped": {"x": self.ped.x, "y": self.ped.y,
                    "heading": self.ped.heading, "id": self.ped.identity},
            "mcn": {"p_present": self.last_p_present},
        }


def create_app(scenario: Scenario | None = None, mcn_path=None, rn_path=None,
               rate_hz: float = 10.0) -> FastAPI:
    mcn_net = load_model(mcn_path) if mcn_path else None
    rn_net = load_model(rn_path) if rn_path else None
    session = SimSession(scenario, mcn_net, rn_net)
    clients: set[WebSocket] = set()

    async def sim_loop():
        period = 1.0 / rate_hz
        next_t = time.perf_counter() + period
        while True:
            state = session.step()
            text = json.dumps(state)
            for ws in list(clients):
                try:
                    await ws.send_text(text)
                except Exception:
                    clients.discard(ws)
            delay = next_t - time.perf_counter()
            next_t += period
            await asyncio.sleep(max(delay, 0.0))

    @contextlib.asynccontextmanager
    async def lifespan(app: FastAPI):
        task = asyncio.create_task(sim_loop())
        try:
            yield
        finally:
            task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await task

    app = FastAPI(title="ftl serve", lifespan=lifespan)
    app.state.session = session

    @app.websocket("/ws")
    async def ws_endpoint(websocket: WebSocket):
        await websocket.accept()
        clients.add(websocket)
        try:
            while True:
                text = await websocket.receive_text()
                for line in text.splitlines():
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        msg = json.loads(line)
                    except json.JSONDecodeError as err:
                        await websocket.send_text(json.dumps(
                            {"type": "error", "detail": f"bad json: {err}"}))
                        continue
                    reply = session.handle(msg)
                    if reply is not None:
                        await websocket.send_text(json.dumps(reply))
        except WebSocketDisconnect:
            pass
        finally:
            clients.discard(websocket)

    return app


def run_server(app: FastAPI, port: int = 8765, host: str = "127.0.0.1") -> None:
    import uvicorn

    uvicorn.run(app, host=host, port=port, log_level="warning")
