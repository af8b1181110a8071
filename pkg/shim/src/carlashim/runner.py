"""Scenario execution paths.

`run_stub` needs no simulator: it records a placeholder video of the
requested duration and reports ok, which lets the parent pipeline's external
path be integration-tested on machines without CARLA.

`run_live` drives the real stack: load the script through the SCENIC
runtime, pin the seed, connect to the CARLA server, step the simulation to
its termination condition (or the wall-clock budget), recording the ego
camera. Every failure maps to a protocol status instead of a traceback.
"""

from __future__ import annotations

import random
import re
import signal
import socket
import time
from pathlib import Path
from typing import Optional

from .config import ShimConfig
from .protocol import (
    OK, RUNTIME_ERROR, SCENARIO_ERROR, TIMEOUT, ShimRequest, ShimResult, failure,
)
from .recorder import VideoRecorder, placeholder_frame

_MAP_PARAM_RE = re.compile(r"param\s+map\s*=\s*['\"]([^'\"]+)['\"]")


class _Deadline:
    """Self-enforced wall-clock limit (on top of the parent's)."""

    def __init__(self, seconds: float):
        self.seconds = seconds

    def __enter__(self):
        signal.signal(signal.SIGALRM, self._fire)
        signal.setitimer(signal.ITIMER_REAL, self.seconds)
        return self

    def __exit__(self, *exc_info):
        signal.setitimer(signal.ITIMER_REAL, 0.0)
        signal.signal(signal.SIGALRM, signal.SIG_DFL)

    @staticmethod
    def _fire(signum, frame):
        raise TimeoutError("simulation wall clock exceeded")


def script_map(script_path: Path) -> Optional[str]:
    match = _MAP_PARAM_RE.search(script_path.read_text(encoding="utf-8", errors="replace"))
    return match.group(1) if match else None


def run_stub(request: ShimRequest, config: ShimConfig) -> ShimResult:
    """Offline ok-path: placeholder video of the requested duration plus a
    copy of the script next to it (provenance for downstream analysis)."""
    started = time.monotonic()
    request.output_dir.mkdir(parents=True, exist_ok=True)
    video_path = request.output_dir / "recording.avi"
    frame_total = max(2, int(round(request.max_sim_seconds * config.camera_fps)))
    rng_base = request.seed % 256
    with VideoRecorder(video_path, config.camera_width, config.camera_height,
                       config.camera_fps) as recorder:
        for index in range(frame_total):
            recorder.add_frame(placeholder_frame(
                config.camera_width, config.camera_height, index, rng_base))
        frames = recorder.frames
    sidecar = Path(str(video_path) + ".source.scenic")
    sidecar.write_text(request.script_path.read_text(encoding="utf-8"), encoding="utf-8")
    return ShimResult(
        status=OK,
        video_path=str(video_path),
        frames=frames,
        fps=config.camera_fps,
        log_excerpt="",
        wall_time_s=round(time.monotonic() - started, 3),
        seed=request.seed,
        map=script_map(request.script_path),
    )


def check_simulator_reachable(config: ShimConfig) -> Optional[str]:
    """None when a server answers, else the connection log excerpt."""
    try:
        with socket.create_connection((config.host, config.port),
                                      timeout=config.connect_timeout_s):
            return None
    except OSError as exc:
        return f"cannot reach simulator at {config.host}:{config.port}: {exc}"


def run_live(request: ShimRequest, config: ShimConfig) -> ShimResult:
    started = time.monotonic()
    connection_log = check_simulator_reachable(config)
    if connection_log is not None:
        return failure(RUNTIME_ERROR, connection_log,
                       wall_time_s=round(time.monotonic() - started, 3),
                       seed=request.seed)
    try:
        import scenic
        from scenic.simulators.carla.simulator import CarlaSimulator
    except ImportError as exc:
        return failure(RUNTIME_ERROR, f"scenario runtime not importable: {exc}",
                       wall_time_s=round(time.monotonic() - started, 3),
                       seed=request.seed)

    random.seed(request.seed)
    try:
        scenario = scenic.scenarioFromFile(str(request.script_path))
    except Exception as exc:  # scenic raises plain Exceptions for bad scripts
        return failure(SCENARIO_ERROR, f"script failed to load: {exc}",
                       wall_time_s=round(time.monotonic() - started, 3),
                       seed=request.seed)

    request.output_dir.mkdir(parents=True, exist_ok=True)
    video_path = request.output_dir / "recording.avi"
    chosen_map = script_map(request.script_path)
    try:
        with _Deadline(request.max_sim_seconds):
            scene, _ = scenario.generate()
            simulator = CarlaSimulator(
                carla_map=chosen_map, map_path=None,
                address=config.host, port=config.port,
                timestep=config.timestep, render=False,
            )
            max_steps = int(request.max_sim_seconds / config.timestep)
            with VideoRecorder(video_path, config.camera_width,
                               config.camera_height, config.camera_fps) as recorder:
                simulation = simulator.simulate(scene, maxSteps=max_steps)
                for frame in _camera_frames(simulation):
                    recorder.add_frame(frame)
                frames = recorder.frames
    except TimeoutError:
        return failure(TIMEOUT, "simulation wall clock exceeded",
                       wall_time_s=round(time.monotonic() - started, 3),
                       seed=request.seed)
    except Exception as exc:
        return failure(RUNTIME_ERROR, f"simulation failed: {exc}",
                       wall_time_s=round(time.monotonic() - started, 3),
                       seed=request.seed)

    if frames == 0:
        return failure(RUNTIME_ERROR, "simulation produced no camera frames",
                       wall_time_s=round(time.monotonic() - started, 3),
                       seed=request.seed)
    sidecar = Path(str(video_path) + ".source.scenic")
    sidecar.write_text(request.script_path.read_text(encoding="utf-8"), encoding="utf-8")
    return ShimResult(
        status=OK,
        video_path=str(video_path),
        frames=frames,
        fps=config.camera_fps,
        log_excerpt="",
        wall_time_s=round(time.monotonic() - started, 3),
        seed=request.seed,
        map=chosen_map,
    )


def _camera_frames(simulation):
    """Ego dashcam frames out of a finished simulation.

    Recent SCENIC/CARLA versions expose recorded sensor data on the
    simulation result; older ones only keep actor trajectories, in which
    case there is nothing to record and the caller reports runtime_error.
    """
    records = getattr(simulation, "records", None) or {}
    for key in ("ego_camera", "camera", "rgb"):
        frames = records.get(key)
        if frames:
            for frame in frames:
                yield frame
            return
