"""Shim configuration: simulator address and recording camera."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional


@dataclass(frozen=True)
class ShimConfig:
    host: str = "127.0.0.1"
    port: int = 2000
    connect_timeout_s: float = 5.0
    camera_width: int = 640
    camera_height: int = 360
    camera_fps: float = 20.0  # dashcam-parity recording rate
    timestep: float = 0.05


def load_shim_config(path: Optional[Path]) -> ShimConfig:
    if path is None:
        return ShimConfig()
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    known = ShimConfig.__dataclass_fields__
    unknown = set(data) - set(known)
    if unknown:
        raise ValueError(f"unknown shim config keys: {sorted(unknown)}")
    return ShimConfig(**data)
