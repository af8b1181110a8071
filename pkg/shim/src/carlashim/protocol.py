"""Request/result JSON protocol spoken with the parent pipeline.

The request names a script file, a seed, a wall-clock budget and an output
directory; the result manifest reports status, the recorded video and a log
excerpt. result.json is written atomically (temp file + rename) so the
parent never observes a partial manifest. Exit code 0 means status ok.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

OK = "ok"
SCENARIO_ERROR = "scenario_error"
RUNTIME_ERROR = "runtime_error"
TIMEOUT = "timeout"

EXIT_OK = 0
EXIT_BAD_REQUEST = 2
EXIT_BY_STATUS = {
    OK: EXIT_OK,
    SCENARIO_ERROR: 3,
    RUNTIME_ERROR: 4,
    TIMEOUT: 5,
}

_LOG_LIMIT = 2000


class RequestError(ValueError):
    """Malformed request: the shim exits 2 without writing a result."""


@dataclass(frozen=True)
class ShimRequest:
    script_path: Path
    seed: int
    max_sim_seconds: float
    output_dir: Path

    @classmethod
    def load(cls, path: Path) -> "ShimRequest":
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise RequestError(f"cannot read request {path}: {exc}") from exc
        missing = [k for k in ("script_path", "seed", "max_sim_seconds", "output_dir")
                   if k not in data]
        if missing:
            raise RequestError(f"request {path} is missing keys: {missing}")
        try:
            request = cls(
                script_path=Path(data["script_path"]),
                seed=int(data["seed"]),
                max_sim_seconds=float(data["max_sim_seconds"]),
                output_dir=Path(data["output_dir"]),
            )
        except (TypeError, ValueError) as exc:
            raise RequestError(f"request {path} has invalid values: {exc}") from exc
        if request.max_sim_seconds <= 0:
            raise RequestError("max_sim_seconds must be positive")
        if not request.script_path.is_file():
            raise RequestError(f"script does not exist: {request.script_path}")
        return request


@dataclass(frozen=True)
class ShimResult:
    status: str
    video_path: Optional[str]
    frames: Optional[int]
    fps: Optional[float]
    log_excerpt: str
    wall_time_s: float
    seed: Optional[int] = None
    map: Optional[str] = None

    def to_dict(self) -> dict:
        data = {
            "status": self.status,
            "video_path": self.video_path,
            "frames": self.frames,
            "fps": self.fps,
            "log_excerpt": self.log_excerpt,
            "wall_time_s": self.wall_time_s,
        }
        if self.seed is not None:
            data["seed"] = self.seed
        if self.map is not None:
            data["map"] = self.map
        return data

    @property
    def exit_code(self) -> int:
        return EXIT_BY_STATUS[self.status]


def failure(status: str, log: str, wall_time_s: float = 0.0,
            seed: Optional[int] = None) -> ShimResult:
    return ShimResult(
        status=status, video_path=None, frames=None, fps=None,
        log_excerpt=clip_log(log) or status, wall_time_s=wall_time_s, seed=seed,
    )


def clip_log(text: str) -> str:
    text = text.strip()
    return text[-_LOG_LIMIT:] if len(text) > _LOG_LIMIT else text


def write_result(result: ShimResult, output_dir: Path) -> Path:
    """Atomic write: the manifest either exists complete or not at all."""
    output_dir.mkdir(parents=True, exist_ok=True)
    target = output_dir / "result.json"
    fd, tmp_name = tempfile.mkstemp(dir=output_dir, prefix=".result-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(result.to_dict(), fh, indent=2)
        os.replace(tmp_name, target)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise
    return target
