"""Dispatch a validated scenario script to a simulator backend.

Two backends implement the same small contract:

* ExternalSimulator launches the out-of-process shim
  (`<command> --request <request.json>`), enforces a wall-clock timeout on
  the whole process group, and reads the result manifest the shim wrote.
* MockSimulator is a pure function of (script tree, seed): it emits a
  synthetic-video descriptor whose identity is a digest of both, embedding
  the rendered script so the mock feature backend can close the loop.

A fixed seed pins one concrete scene out of the many a script can produce,
and is recorded alongside the result.
"""

from __future__ import annotations

import hashlib
import json
import os
import shlex
import signal
import subprocess
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Protocol

from .dialect import ScenicScript, render_tree
from .frames import VideoRef

OK = "ok"
SCENARIO_ERROR = "scenario_error"
RUNTIME_ERROR = "runtime_error"
TIMEOUT = "timeout"
_STATUSES = (OK, SCENARIO_ERROR, RUNTIME_ERROR, TIMEOUT)

# Grace period on top of max_sim_seconds before the shim process group is
# killed (the shim self-enforces the same limit).
_KILL_GRACE_S = 30.0

MOCK_FPS = 20.0
MOCK_SIM_SECONDS = 2.0


@dataclass(frozen=True)
class SimRequest:
    script: ScenicScript
    seed: int
    max_sim_seconds: float
    record: Path  # per-run output directory


@dataclass(frozen=True)
class SimResult:
    status: str
    video: Optional[VideoRef]
    log_excerpt: str
    wall_time_s: float

    def __post_init__(self) -> None:
        if self.status not in _STATUSES:
            raise ValueError(f"unknown simulation status {self.status!r}")
        if self.status == OK and self.video is None:
            raise ValueError("ok result must carry a video")
        if self.status != OK and not self.log_excerpt:
            raise ValueError("failed result must carry a log excerpt")

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "video_path": str(self.video.path) if self.video else None,
            "frames": self.video.frame_count if self.video else None,
            "fps": self.video.fps if self.video else None,
            "log_excerpt": self.log_excerpt,
            "wall_time_s": self.wall_time_s,
        }


class SimulatorBackend(Protocol):
    def run(self, request: SimRequest) -> SimResult: ...


def sim_result_from_dict(data: dict) -> SimResult:
    """Rebuild a persisted result manifest (inverse of SimResult.to_dict)."""
    video = None
    if data.get("video_path") is not None:
        frames = int(data["frames"])
        fps = float(data["fps"])
        video = VideoRef(
            path=Path(data["video_path"]), frame_count=frames, fps=fps,
            duration_s=frames / fps,
        )
    return SimResult(
        status=data["status"],
        video=video,
        log_excerpt=str(data.get("log_excerpt", "")),
        wall_time_s=float(data.get("wall_time_s", 0.0)),
    )


def script_seed_digest(script: ScenicScript, seed: int) -> str:
    """Identity of one pinned scene: digest of (canonical tree, seed)."""
    canonical = render_tree(script.tree)
    return hashlib.sha256(f"{canonical}\x00seed={seed}".encode("utf-8")).hexdigest()


class MockSimulator:
    """Always-ok backend for offline runs; deterministic per (tree, seed)."""

    def __init__(self) -> None:
        self.calls = 0

    def run(self, request: SimRequest) -> SimResult:
        self.calls += 1
        digest = script_seed_digest(request.script, request.seed)
        frame_count = int(MOCK_FPS * min(MOCK_SIM_SECONDS, request.max_sim_seconds))
        frame_count = max(frame_count, 2)
        request.record.mkdir(parents=True, exist_ok=True)
        video_path = request.record / f"sim_{digest[:12]}.json"
        descriptor = {
            "kind": "synthetic-video",
            "label": f"sim_{digest[:12]}",
            "digest": digest,
            "frame_count": frame_count,
            "fps": MOCK_FPS,
            "seed": request.seed,
            "script_source": render_tree(request.script.tree),
        }
        video_path.write_text(json.dumps(descriptor, indent=2), encoding="utf-8")
        video = VideoRef(
            path=video_path, frame_count=frame_count, fps=MOCK_FPS,
            duration_s=frame_count / MOCK_FPS,
        )
        return SimResult(status=OK, video=video, log_excerpt="", wall_time_s=0.0)


class ExternalSimulator:
    """Runs the shim process per the JSON request/result protocol."""

    def __init__(self, shim_command: str):
        self.shim_command = shim_command
        self.calls = 0

    def run(self, request: SimRequest) -> SimResult:
        self.calls += 1
        record = request.record
        record.mkdir(parents=True, exist_ok=True)
        script_path = record / "script.scenic"
        script_path.write_text(request.script.source, encoding="utf-8")
        request_path = record / "request.json"
        request_path.write_text(json.dumps({
            "script_path": str(script_path),
            "seed": request.seed,
            "max_sim_seconds": request.max_sim_seconds,
            "output_dir": str(record),
        }, indent=2), encoding="utf-8")

        argv = shlex.split(self.shim_command) + ["--request", str(request_path)]
        started = time.monotonic()
        timed_out = False
        try:
            proc = subprocess.Popen(
                argv,
                stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True,
                start_new_session=True,
            )
        except OSError as exc:
            return SimResult(
                status=RUNTIME_ERROR, video=None,
                log_excerpt=f"cannot launch shim {argv[0]!r}: {exc}",
                wall_time_s=0.0,
            )
        try:
            stdout, stderr = proc.communicate(
                timeout=request.max_sim_seconds + _KILL_GRACE_S
            )
        except subprocess.TimeoutExpired:
            timed_out = True
            _kill_process_group(proc)
            stdout, stderr = proc.communicate()
        wall_time = time.monotonic() - started

        if timed_out:
            return SimResult(
                status=TIMEOUT, video=None,
                log_excerpt=_tail(stderr or stdout or "simulation wall clock exceeded"),
                wall_time_s=wall_time,
            )
        # The result manifest is authoritative; it is read only after exit.
        return self._read_result(record / "result.json", stderr, wall_time)

    def _read_result(self, result_path: Path, stderr: str, wall_time: float) -> SimResult:
        try:
            data = json.loads(result_path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            return SimResult(
                status=RUNTIME_ERROR, video=None,
                log_excerpt=_tail(f"unreadable result manifest: {exc}\n{stderr}"),
                wall_time_s=wall_time,
            )
        status = data.get("status")
        if status not in _STATUSES:
            return SimResult(
                status=RUNTIME_ERROR, video=None,
                log_excerpt=_tail(f"result manifest has invalid status {status!r}\n{stderr}"),
                wall_time_s=wall_time,
            )
        log_excerpt = _tail(str(data.get("log_excerpt", "")) or stderr)
        if status != OK:
            return SimResult(
                status=status, video=None,
                log_excerpt=log_excerpt or "simulation failed",
                wall_time_s=wall_time,
            )
        try:
            video = VideoRef(
                path=Path(data["video_path"]),
                frame_count=int(data["frames"]),
                fps=float(data["fps"]),
                duration_s=int(data["frames"]) / float(data["fps"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            return SimResult(
                status=RUNTIME_ERROR, video=None,
                log_excerpt=_tail(f"ok result missing video fields: {exc}"),
                wall_time_s=wall_time,
            )
        if not video.path.exists():
            return SimResult(
                status=RUNTIME_ERROR, video=None,
                log_excerpt=f"result video does not exist: {video.path}",
                wall_time_s=wall_time,
            )
        return SimResult(status=OK, video=video, log_excerpt=log_excerpt, wall_time_s=wall_time)


def _kill_process_group(proc: subprocess.Popen) -> None:
    try:
        os.killpg(os.getpgid(proc.pid), signal.SIGKILL)
    except (ProcessLookupError, PermissionError):
        proc.kill()


def _tail(text: str, limit: int = 2000) -> str:
    text = text.strip()
    return text[-limit:] if len(text) > limit else text
