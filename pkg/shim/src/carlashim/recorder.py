"""Dashcam-style video recording.

Frames arrive as HxWx3 BGR arrays (the simulator camera's native layout) and
are written at the configured rate. MJPG/AVI is used for the container: it
encodes without external codec packages and every build of OpenCV reads it
back.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np


class VideoRecorder:
    def __init__(self, path: Path, width: int, height: int, fps: float):
        import cv2

        self._cv2 = cv2
        self.path = Path(path)
        self.width = width
        self.height = height
        self.fps = fps
        self.frames = 0
        fourcc = cv2.VideoWriter_fourcc(*"MJPG")
        self._writer = cv2.VideoWriter(str(path), fourcc, fps, (width, height))
        if not self._writer.isOpened():
            raise RuntimeError(f"cannot open video writer for {path}")

    def add_frame(self, frame: "np.ndarray") -> None:
        if frame.shape[1] != self.width or frame.shape[0] != self.height:
            frame = self._cv2.resize(frame, (self.width, self.height))
        self._writer.write(frame)
        self.frames += 1

    def close(self) -> int:
        self._writer.release()
        return self.frames

    def __enter__(self) -> "VideoRecorder":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def placeholder_frame(width: int, height: int, index: int, seed: int) -> "np.ndarray":
    """Deterministic moving-gradient frame for stub recordings."""
    xs = np.linspace(0, 255, width, dtype=np.uint8)
    row = np.empty((width, 3), dtype=np.uint8)
    row[:, 0] = xs
    row[:, 1] = (index * 5 + seed) % 256
    row[:, 2] = xs[::-1]
    return np.repeat(row[np.newaxis, :, :], height, axis=0)
