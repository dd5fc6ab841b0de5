"""Synthetic stereo renderer: two pinhole projections of a flat checkered
ground and the pedestrian billboard, concatenated into a 6-channel image."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sim import WorldState

PED_COLORS = {"A": (0.85, 0.20, 0.15), "B": (0.15, 0.30, 0.85)}
PED_WIDTH = 0.4
PED_HEIGHT = 1.7
SKY_SHADE = 0.72
CHECKER_SHADES = (0.32, 0.52)
CHECKER_SIZE = 1.0


@dataclass(frozen=True)
class CameraModel:
    width: int = 160
    height: int = 120
    hfov_deg: float = 90.0
    baseline: float = 0.12
    mount_height: float = 0.25

    def __post_init__(self):
        if self.baseline <= 0:
            raise ValueError("baseline must be positive")
        if not 0.0 < self.hfov_deg < 180.0:
            raise ValueError("horizontal FOV must be in (0, 180) degrees")

    @property
    def focal_px(self) -> float:
        return (self.width / 2.0) / math.tan(math.radians(self.hfov_deg) / 2.0)

    @property
    def cx(self) -> float:
        return (self.width - 1) / 2.0

    @property
    def cy(self) -> float:
        return (self.height - 1) / 2.0


_GRID_CACHE: dict = {}


def _pixel_rays(cam: CameraModel):
    """Per-pixel camera-frame ray components (x right, y down, z forward = 1)."""
    key = (cam.width, cam.height, round(cam.focal_px, 9))
    if key not in _GRID_CACHE:
        u = (np.arange(cam.width) - cam.cx) / cam.focal_px
        v = (np.arange(cam.height) - cam.cy) / cam.focal_px
        _GRID_CACHE[key] = (u[None, :], v[:, None])
    return _GRID_CACHE[key]


def _render_eye(world: WorldState, cam: CameraModel, eye_offset: float):
    """One RGB view; returns (image (3, H, W), pedestrian pixel count)."""
    av = world.av
    fx, fy = math.cos(av.heading), math.sin(av.heading)
    rx, ry = math.sin(av.heading), -math.cos(av.heading)  # right-hand vector
    ox = av.x + rx * eye_offset
    oy = av.y + ry * eye_offset
    h = cam.mount_height
    xcam, ycam = _pixel_rays(cam)

    img = np.full((cam.height, cam.width, 3), SKY_SHADE)
    below = ycam[:, 0] > 1e-9  # rows looking downward hit the ground
    if below.any():
        t = h / ycam[below, 0]
        dx = fx + rx * xcam[0]
        dy = fy + ry * xcam[0]
        gx = ox + t[:, None] * dx[None, :]
        gy = oy + t[:, None] * dy[None, :]
        parity = ((np.floor(gx / CHECKER_SIZE) + np.floor(gy / CHECKER_SIZE))
                  .astype(np.int64) & 1)
        shade = np.where(parity == 0, CHECKER_SHADES[0], CHECKER_SHADES[1])
        img[below] = shade[:, :, None]

    ped_pixels = 0
    ped = world.ped
    if ped.visible:
        px, py = ped.x - ox, ped.y - oy
        depth = px * fx + py * fy
        lateral = px * rx + py * ry
        if depth > 0.05:
            f = cam.focal_px
            uc = cam.cx + f * lateral / depth
            half_w = f * (PED_WIDTH / 2.0) / depth
            v_bot = cam.cy + f * h / depth
            v_top = cam.cy + f * (h - PED_HEIGHT) / depth
            u0 = int(math.ceil(uc - half_w))
            u1 = int(math.floor(uc + half_w))
            v0 = int(math.ceil(v_top))
            v1 = int(math.floor(v_bot))
            u0, u1 = max(u0, 0), min(u1, cam.width - 1)
            v0, v1 = max(v0, 0), min(v1, cam.height - 1)
            if u1 >= u0 and v1 >= v0:
                img[v0:v1 + 1, u0:u1 + 1] = PED_COLORS[ped.identity]
                ped_pixels = (u1 - u0 + 1) * (v1 - v0 + 1)
    return img.transpose(2, 0, 1), ped_pixels


def render_stereo(world: WorldState, cam: CameraModel = CameraModel()):
    """Render both eyes; returns (6 x H x W image in [0, 1], visible flag).

    Channels 0-2 are the left eye's RGB, 3-5 the right eye's. The visible
    flag is true iff the pedestrian covers at least one pixel in either eye.
    """
    left, n_left = _render_eye(world, cam, -cam.baseline / 2.0)
    right, n_right = _render_eye(world, cam, +cam.baseline / 2.0)
    image = np.concatenate([left, right], axis=0)
    return image, (n_left + n_right) > 0


def pedestrian_centroid(image6: np.ndarray, identity: str, eye: str = "left"):
    """Centroid (row, col) of the pedestrian's pixels in one eye, or None.

    Matches pixels by the identity's exact fill color; used by tests.
    """
    rgb = image6[0:3] if eye == "left" else image6[3:6]
    color = np.array(PED_COLORS[identity]).reshape(3, 1, 1)
    mask = np.all(np.abs(rgb - color) < 1e-9, axis=0)
    if not mask.any():
        return None
    rows, cols = np.nonzero(mask)
    return float(rows.mean()), float(cols.mean())
