"""Sequential frame logging, labeling, and train/test splitting.

Log container layout (all integers little-endian):
  bytes 0-7    magic "FTLLOG1\\0"
  bytes 8-9    version (u16, currently 1)
  bytes 10-13  header length (u32), then that many bytes of UTF-8 text
               ("key = value" lines: image_shape, dt, scenario, ...)
  next 8       record count (u64); written when the log is sealed
  records      fixed-size: tick u64, timestamp f64, steering f64,
               throttle f64, present u8, ped_id u8 (0 none / 1 A / 2 B),
               then the 8-bit image payload (channels * height * width bytes)
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAGIC = b"FTLLOG1\0"
VERSION = 1
_REC_FIXED = struct.Struct("<QdddBB")
_PED_CODES = {None: 0, "A": 1, "B": 2}
_PED_NAMES = {0: None, 1: "A", 2: "B"}


class LogFormatError(ValueError):
    """Malformed log container; carries the byte offset of the problem."""

    def __init__(self, message: str, byte_offset: int):
        super().__init__(f"{message} (at byte {byte_offset})")
        self.byte_offset = byte_offset


def quantize_image(image: np.ndarray) -> np.ndarray:
    """[0, 1] float image -> uint8; re-read error is at most 1/255 per pixel."""
    return np.round(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)


def dequantize_image(image_u8: np.ndarray) -> np.ndarray:
    return image_u8.astype(np.float64) / 255.0


@dataclass
class FrameRecord:
    tick: int
    timestamp: float
    image_u8: np.ndarray          # (6, H, W) uint8
    steering: float
    throttle: float
    present: bool
    ped_id: str | None = None

    def __post_init__(self):
        if not -100.0 <= self.steering <= 100.0:
            raise ValueError(f"steering {self.steering} outside [-100, 100]")
        if not 0.0 <= self.throttle <= 100.0:
            raise ValueError(f"throttle {self.throttle} outside [0, 100]")
        if self.image_u8.ndim != 3 or self.image_u8.shape[0] != 6:
            raise ValueError(f"image must be 6-channel, got {self.image_u8.shape}")
        if self.image_u8.dtype != np.uint8:
            raise ValueError("image must be uint8 (quantize first)")
        if self.ped_id not in _PED_CODES:
            raise ValueError(f"ped_id must be 'A', 'B' or None, got {self.ped_id}")

    @property
    def image(self) -> np.ndarray:
        return dequantize_image(self.image_u8)


@dataclass
class LogHeader:
    image_shape: tuple[int, int, int] = (6, 120, 160)
    dt: float = 0.1
    scenario: str = ""
    extra: dict = field(default_factory=dict)

    def to_text(self) -> str:
        lines = [
            f"image_shape = {self.image_shape[0]}x{self.image_shape[1]}x{self.image_shape[2]}",
            f"dt = {self.dt!r}",
        ]
        for k, v in self.extra.items():
            lines.append(f"{k} = {v}")
        if self.scenario:
            lines.append("scenario:")
            lines.append(self.scenario.rstrip("\n"))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "LogHeader":
        image_shape, dt, extra = (6, 120, 160), 0.1, {}
        scenario_lines: list[str] | None = None
        for line in text.splitlines():
            if scenario_lines is not None:
                scenario_lines.append(line)
                continue
            if line.strip() == "scenario:":
                scenario_lines = []
                continue
            if "=" not in line:
                continue
            key, value = (s.strip() for s in line.split("=", 1))
            if key == "image_shape":
                image_shape = tuple(int(x) for x in value.split("x"))
            elif key == "dt":
                dt = float(value)
            else:
                extra[key] = value
        scenario = "\n".join(scenario_lines) if scenario_lines else ""
        return cls(image_shape=image_shape, dt=dt, scenario=scenario, extra=extra)


def write_log(path, records: list[FrameRecord],
              header: LogHeader | None = None) -> None:
    """Write a sealed log; records must be in strictly increasing tick order."""
    header = header or LogHeader()
    for prev, cur in zip(records, records[1:]):
        if cur.tick <= prev.tick:
            raise ValueError(f"ticks not strictly increasing at tick {cur.tick}")
    for rec in records:
        if tuple(rec.image_u8.shape) != tuple(header.image_shape):
            raise ValueError(
                f"record image {rec.image_u8.shape} != header {header.image_shape}"
            )
    htext = header.to_text().encode()
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<H", VERSION))
        f.write(struct.pack("<I", len(htext)))
        f.write(htext)
        f.write(struct.pack("<Q", len(records)))
        for rec in records:
            f.write(_REC_FIXED.pack(rec.tick, rec.timestamp, rec.steering,
                                    rec.throttle, int(rec.present),
                                    _PED_CODES[rec.ped_id]))
            f.write(rec.image_u8.tobytes())


def read_log(path) -> tuple[LogHeader, list[FrameRecord]]:
    """Read and validate a sealed log; fails closed on any truncation."""
    raw = Path(path).read_bytes()
    if len(raw) < 14:
        raise LogFormatError("file shorter than the fixed header", len(raw))
    if raw[:8] != MAGIC:
        raise LogFormatError("bad magic", 0)
    (version,) = struct.unpack_from("<H", raw, 8)
    if version != VERSION:
        raise LogFormatError(f"unsupported version {version}", 8)
    (hlen,) = struct.unpack_from("<I", raw, 10)
    off = 14
    if off + hlen + 8 > len(raw):
        raise LogFormatError("truncated header", len(raw))
    header = LogHeader.from_text(raw[off:off + hlen].decode())
    off += hlen
    (count,) = struct.unpack_from("<Q", raw, off)
    off += 8
    c, h, w = header.image_shape
    img_bytes = c * h * w
    rec_size = _REC_FIXED.size + img_bytes
    records: list[FrameRecord] = []
    for i in range(count):
        if off + rec_size > len(raw):
            raise LogFormatError(
                f"truncated record {i} of {count}", off)
        tick, ts, steering, throttle, present, ped = _REC_FIXED.unpack_from(raw, off)
        img = np.frombuffer(raw, dtype=np.uint8, count=img_bytes,
                            offset=off + _REC_FIXED.size)
        records.append(FrameRecord(
            tick=tick, timestamp=ts,
            image_u8=img.reshape(c, h, w).copy(),
            steering=steering, throttle=throttle,
            present=bool(present), ped_id=_PED_NAMES[ped]))
        off += rec_size
    if off != len(raw):
        raise LogFormatError("trailing bytes after final record", off)
    return header, records


# ---------------------------------------------------------------------------
# splits and sequence windows

def split_frames(records: list, test_fraction: float = 0.20, seed: int = 0):
    """Frame-level shuffled split (the gate classifier's protocol)."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must be in (0, 1)")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(records))
    n_test = round(len(records) * test_fraction)
    test_idx = set(int(i) for i in order[:n_test])
    train = [records[i] for i in range(len(records)) if i not in test_idx]
    test = [records[i] for i in range(len(records)) if i in test_idx]
    return train, test


def split_laps(laps: list, test_fraction: float = 0.20, seed: int = 0):
    """Lap-level split: whole held-out laps, never frames of a training lap."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must be in (0, 1)")
    n_test = round(len(laps) * test_fraction)
    if n_test < 1 or n_test >= len(laps):
        raise ValueError(
            f"{len(laps)} laps cannot support a {test_fraction:.0%} lap split")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(laps))
    test_idx = set(int(i) for i in order[:n_test])
    train = [laps[i] for i in range(len(laps)) if i not in test_idx]
    test = [laps[i] for i in range(len(laps)) if i in test_idx]
    return train, test


def normalize_targets(steering: float, throttle: float) -> np.ndarray:
    """Actuator units -> head ranges: steering/100 in [-1,1], throttle/100 in [0,1]."""
    return np.array([steering / 100.0, throttle / 100.0])


def denormalize_targets(pair) -> tuple[float, float]:
    return float(pair[0]) * 100.0, float(pair[1]) * 100.0


def make_sequences(records: list[FrameRecord], t: int = 5):
    """Stride-1 sliding windows over one contiguous lap.

    Yields (window index tuple, normalized target of the final frame). The
    caller keeps the records list; windows are index tuples to avoid copying
    images.
    """
    if len(records) < t:
        raise ValueError(f"lap of {len(records)} frames is shorter than T={t}")
    out = []
    for end in range(t - 1, len(records)):
        idx = tuple(range(end - t + 1, end + 1))
        rec = records[end]
        out.append((idx, normalize_targets(rec.steering, rec.throttle)))
    return out
