"""Scenario files: the text key-value format consumed by collect/drive/serve."""
from __future__ import annotations

from dataclasses import dataclass, field, asdict

from .sim import ClockLapScript, RandomWalkScript, VanishWrapper

SCRIPTS = ("clock_lap", "random_walk", "mcn_stills", "vanish_lap")


class ScenarioError(ValueError):
    """Unparseable or inconsistent scenario file."""


@dataclass
class Scenario:
    script: str = "clock_lap"
    seed: int = 0
    radius: float = 3.0
    speed: float = 1.0
    laps: int = 1
    identity: str = "A"
    direction: str = "ccw"
    start: int = 12
    arena: tuple[float, float, float, float] = (-6.0, -6.0, 6.0, 6.0)
    duration: float = 30.0
    vanish_at: float = 8.0
    frames_per_position: int = 150
    dt: float = 0.1

    def __post_init__(self):
        if self.script not in SCRIPTS:
            raise ScenarioError(f"unknown script {self.script!r}")
        if self.identity not in ("A", "B"):
            raise ScenarioError(f"identity must be A or B, got {self.identity!r}")
        if self.direction not in ("cw", "ccw"):
            raise ScenarioError(f"direction must be cw or ccw")
        if self.radius <= 0 or self.speed <= 0 or self.dt <= 0:
            raise ScenarioError("radius, speed and dt must be positive")

    def to_text(self) -> str:
        lines = []
        for key, value in asdict(self).items():
            if key == "arena":
                value = " ".join(str(v) for v in value)
            lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"

    def pedestrian_script(self):
        """Build the pedestrian trajectory generator this scenario describes."""
        if self.script in ("clock_lap", "vanish_lap"):
            lap = ClockLapScript(start=self.start, direction=self.direction,
                                 radius=self.radius, speed=self.speed,
                                 identity=self.identity)
            if self.script == "vanish_lap":
                return VanishWrapper(lap, vanish_at=self.vanish_at)
            return lap
        if self.script == "random_walk":
            return RandomWalkScript(seed=self.seed, bounds=self.arena,
                                    identity=self.identity)
        raise ScenarioError(f"script {self.script!r} has no pedestrian trajectory")


_INT_KEYS = {"seed", "laps", "start", "frames_per_position"}
_FLOAT_KEYS = {"radius", "speed", "duration", "vanish_at", "dt"}
_STR_KEYS = {"script", "identity", "direction"}


def parse_scenario(text: str) -> Scenario:
    """Parse 'key = value' lines; '#' starts a comment; unknown keys fail."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in _INT_KEYS:
            values[key] = int(value)
        elif key in _FLOAT_KEYS:
            values[key] = float(value)
        elif key in _STR_KEYS:
            values[key] = value
        elif key == "arena":
            parts = [float(v) for v in value.replace(",", " ").split()]
            if len(parts) != 4:
                raise ScenarioError(f"line {lineno}: arena needs 4 numbers")
            values[key] = tuple(parts)
        else:
            raise ScenarioError(f"line {lineno}: unknown key {key!r}")
    try:
        return Scenario(**values)
    except TypeError as err:
        raise ScenarioError(str(err)) from err


def load_scenario(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as f:
        return parse_scenario(f.read())
