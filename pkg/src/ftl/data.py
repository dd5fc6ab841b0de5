"""Training datasets over logged frames; images stay 8-bit until batch time."""
from __future__ import annotations

import numpy as np

from .datalog import FrameRecord, dequantize_image, make_sequences


class McnDataset:
    """(image, present-label) pairs for the gate classifier."""

    def __init__(self, records: list[FrameRecord]):
        if not records:
            raise ValueError("no records")
        self._images = np.stack([r.image_u8 for r in records])
        self._labels = np.array([int(r.present) for r in records], dtype=np.int64)

    def __len__(self) -> int:
        return len(self._labels)

    def __getitem__(self, i: int):
        return dequantize_image(self._images[i]), int(self._labels[i])

    @property
    def labels(self) -> np.ndarray:
        return self._labels

    def images_f64(self) -> np.ndarray:
        return dequantize_image(self._images)


class RnDataset:
    """(5-frame window, normalized steering/throttle target) pairs.

    Windows are stride-1 and never cross lap boundaries; frames are stored
    once per lap and dequantized window-by-window.
    """

    def __init__(self, laps: list[list[FrameRecord]], t: int = 5):
        self._lap_images = []
        self._index: list[tuple[int, tuple, np.ndarray]] = []
        for lap_no, lap in enumerate(laps):
            self._lap_images.append(np.stack([r.image_u8 for r in lap]))
            for idx, target in make_sequences(lap, t=t):
                self._index.append((lap_no, idx, target))
        if not self._index:
            raise ValueError("no sequences")

    def __len__(self) -> int:
        return len(self._index)

    def __getitem__(self, i: int):
        lap_no, idx, target = self._index[i]
        window = dequantize_image(self._lap_images[lap_no][list(idx)])
        return window, target


class RnSegmentDataset:
    """Contiguous lap segments for the shared-trunk trainer.

    Each item is (frames (L, 6, H, W), targets (L-T+1, 2)): every stride-1
    window of the segment, exactly partitioning the lap's windows so one
    epoch still visits each window once.
    """

    def __init__(self, laps: list[list[FrameRecord]], t: int = 5,
                 windows_per_segment: int = 16):
        self._segments = []
        self.window_count = 0
        for lap in laps:
            windows = make_sequences(lap, t=t)
            self.window_count += len(windows)
            images = np.stack([r.image_u8 for r in lap])
            for start in range(0, len(windows), windows_per_segment):
                chunk = windows[start:start + windows_per_segment]
                first = chunk[0][0][0]
                last = chunk[-1][0][-1]
                targets = np.stack([target for _, target in chunk])
                self._segments.append((images[first:last + 1], targets))
        if not self._segments:
            raise ValueError("no segments")

    def __len__(self) -> int:
        return len(self._segments)

    def __getitem__(self, i: int):
        frames_u8, targets = self._segments[i]
        return dequantize_image(frames_u8), targets
