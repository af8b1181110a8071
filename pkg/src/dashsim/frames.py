"""Video-to-frames preparation for model input.

A video becomes a FramePack: n uniformly sampled frames, downscaled so the
longest side fits max_dim, JPEG-encoded in memory. Probing and frame
extraction are delegated to an external tool through command templates, so
the pipeline never decodes video in-process:

* probe template, placeholder {input}: prints JSON with frame_count / fps /
  duration_s (ffprobe's `-show_streams -of json` output is also understood).
* extract template: either per-frame with {input} {frame_index} {output}, or
  batch with {input} {indices} {output_dir} (tool writes frame_000.png,
  frame_001.png, ... in sampled order).

The package ships `dashsim-videotool` implementing both contracts; ffmpeg
equivalents are documented in the README.
"""

from __future__ import annotations

import json
import math
import shlex
import subprocess
import tempfile
from dataclasses import dataclass
from io import BytesIO
from pathlib import Path
from typing import Union

from PIL import Image

DEFAULT_PROBE_COMMAND = "dashsim-videotool probe {input}"
DEFAULT_EXTRACT_COMMAND = "dashsim-videotool extract-batch {input} {indices} {output_dir}"

_TOOL_TIMEOUT_S = 120.0


class FrameError(Exception):
    """Base class; `tool_output` carries the external tool's diagnostics."""

    def __init__(self, message: str, tool_output: str = ""):
        super().__init__(message)
        self.tool_output = tool_output


class ProbeError(FrameError):
    pass


class ExtractError(FrameError):
    pass


class DecodeError(FrameError):
    pass


@dataclass(frozen=True)
class ExtractorConfig:
    probe_command: str = DEFAULT_PROBE_COMMAND
    extract_command: str = DEFAULT_EXTRACT_COMMAND


@dataclass(frozen=True)
class VideoRef:
    path: Path
    frame_count: int
    fps: float
    duration_s: float

    def __post_init__(self) -> None:
        if self.frame_count < 1:
            raise ValueError(f"frame_count must be >= 1, got {self.frame_count}")
        if self.fps <= 0:
            raise ValueError(f"fps must be > 0, got {self.fps}")


@dataclass(frozen=True)
class FramePack:
    source: VideoRef
    indices: tuple[int, ...]
    images: tuple[tuple[str, bytes], ...]  # (format tag, encoded bytes)
    width: int
    height: int


def sample_indices(frame_count: int, n: int) -> list[int]:
    """Uniform-coverage frame indices: floor(k*(frame_count-1)/(n-1)),
    including both endpoints for n >= 2."""
    if n < 1:
        raise ValueError("must sample at least one frame")
    if frame_count < 1:
        raise ValueError("frame_count must be >= 1")
    if n > frame_count:
        raise ValueError(f"cannot sample {n} frames from {frame_count}")
    if n == 1:
        return [0]
    return [math.floor(k * (frame_count - 1) / (n - 1)) for k in range(n)]


def probe_video(path: Union[str, Path], tool: ExtractorConfig = ExtractorConfig()) -> VideoRef:
    """Probe `path` via the external tool and return its VideoRef."""
    path = Path(path)
    if not path.exists():
        raise ProbeError(f"video file not found: {path}")
    argv = _substitute(tool.probe_command, {"input": str(path)})
    stdout, stderr = _run_tool(argv, ProbeError)
    try:
        data = json.loads(stdout)
    except json.JSONDecodeError as exc:
        raise ProbeError(f"probe output is not JSON: {exc}", tool_output=stdout + stderr) from exc
    try:
        frame_count, fps, duration = _parse_probe(data)
    except (KeyError, ValueError, TypeError, ZeroDivisionError) as exc:
        raise ProbeError(f"unrecognized probe output: {exc}", tool_output=stdout) from exc
    return VideoRef(path=path, frame_count=frame_count, fps=fps, duration_s=duration)


def _parse_probe(data: dict) -> tuple[int, float, float]:
    if "frame_count" in data:
        frame_count = int(data["frame_count"])
        fps = float(data["fps"])
        duration = float(data.get("duration_s", frame_count / fps if fps else 0.0))
        return frame_count, fps, duration
    # ffprobe -show_streams -of json
    stream = data["streams"][0]
    raw_count = stream.get("nb_read_frames") or stream.get("nb_frames")
    num, _, den = str(stream["r_frame_rate"]).partition("/")
    fps = float(num) / float(den or 1)
    if raw_count is not None:
        frame_count = int(raw_count)
    else:
        frame_count = int(round(float(stream["duration"]) * fps))
    duration = float(stream.get("duration", frame_count / fps))
    return frame_count, fps, duration


def build_frame_pack(
    video: VideoRef,
    n: int = 10,
    max_dim: int = 512,
    tool: ExtractorConfig = ExtractorConfig(),
    jpeg_quality: int = 85,
) -> FramePack:
    """Extract, scale and encode n sampled frames. No partial output: any
    tool or decode failure raises before a FramePack exists."""
    indices = sample_indices(video.frame_count, n)
    with tempfile.TemporaryDirectory(prefix="dashsim-frames-") as tmp:
        tmp_dir = Path(tmp)
        frame_paths = _extract_frames(video, indices, tool, tmp_dir)
        images: list[tuple[str, bytes]] = []
        width = height = 0
        for frame_path in frame_paths:
            try:
                with Image.open(frame_path) as img:
                    scaled = _scale(img.convert("RGB"), max_dim)
            except (OSError, ValueError) as exc:
                raise DecodeError(f"cannot decode extracted frame {frame_path.name}: {exc}") from exc
            width, height = scaled.size
            buf = BytesIO()
            scaled.save(buf, format="JPEG", quality=jpeg_quality)
            images.append(("jpeg", buf.getvalue()))
        if not images:
            raise DecodeError("zero decodable frames")
    return FramePack(
        source=video, indices=tuple(indices), images=tuple(images),
        width=width, height=height,
    )


def _extract_frames(
    video: VideoRef, indices: list[int], tool: ExtractorConfig, out_dir: Path
) -> list[Path]:
    template = tool.extract_command
    if "{indices}" in template:
        argv = _substitute(template, {
            "input": str(video.path),
            "indices": ",".join(str(i) for i in indices),
            "output_dir": str(out_dir),
        })
        _run_tool(argv, ExtractError)
        paths = [out_dir / f"frame_{k:03d}.png" for k in range(len(indices))]
    else:
        paths = []
        for k, index in enumerate(indices):
            out_path = out_dir / f"frame_{k:03d}.png"
            argv = _substitute(template, {
                "input": str(video.path),
                "frame_index": str(index),
                "output": str(out_path),
            })
            _run_tool(argv, ExtractError)
            paths.append(out_path)
    missing = [p.name for p in paths if not p.exists()]
    if len(missing) == len(paths):
        raise DecodeError("zero decodable frames: extractor wrote no output")
    if missing:
        raise ExtractError(f"extractor did not write: {missing}")
    return paths


def _scale(img: Image.Image, max_dim: int) -> Image.Image:
    longest = max(img.size)
    if longest <= max_dim:
        return img
    scale = max_dim / longest
    new_size = (max(1, round(img.width * scale)), max(1, round(img.height * scale)))
    return img.resize(new_size, Image.LANCZOS)


def _substitute(template: str, values: dict[str, str]) -> list[str]:
    argv = []
    for token in shlex.split(template):
        for key, value in values.items():
            token = token.replace("{" + key + "}", value)
        argv.append(token)
    return argv


def _run_tool(argv: list[str], error_cls: type[FrameError]) -> tuple[str, str]:
    try:
        proc = subprocess.run(
            argv, capture_output=True, text=True, timeout=_TOOL_TIMEOUT_S,
        )
    except FileNotFoundError as exc:
        raise error_cls(f"tool not found: {argv[0]}") from exc
    except subprocess.TimeoutExpired as exc:
        raise error_cls(f"tool timed out: {' '.join(argv)}", tool_output=str(exc)) from exc
    if proc.returncode != 0:
        raise error_cls(
            f"tool exited {proc.returncode}: {' '.join(argv)}",
            tool_output=proc.stderr,
        )
    return proc.stdout, proc.stderr


# ---------------------------------------------------------------------------
# FramePack persistence
# ---------------------------------------------------------------------------

def write_frame_pack(pack: FramePack, directory: Union[str, Path]) -> Path:
    """Persist a pack as manifest.json plus frame_<k>.jpg siblings."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for k, (_, payload) in enumerate(pack.images):
        (directory / f"frame_{k}.jpg").write_bytes(payload)
    manifest = {
        "source": str(pack.source.path),
        "indices": list(pack.indices),
        "width": pack.width,
        "height": pack.height,
        "format": "jpeg",
        "frame_count": pack.source.frame_count,
        "fps": pack.source.fps,
    }
    manifest_path = directory / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    return manifest_path


def read_frame_pack(directory: Union[str, Path]) -> FramePack:
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text(encoding="utf-8"))
    indices = tuple(int(i) for i in manifest["indices"])
    images = tuple(
        ("jpeg", (directory / f"frame_{k}.jpg").read_bytes()) for k in range(len(indices))
    )
    frame_count = int(manifest.get("frame_count", indices[-1] + 1 if indices else 1))
    fps = float(manifest.get("fps", 20.0))
    source = VideoRef(
        path=Path(manifest["source"]),
        frame_count=frame_count,
        fps=fps,
        duration_s=frame_count / fps,
    )
    return FramePack(
        source=source, indices=indices, images=images,
        width=int(manifest["width"]), height=int(manifest["height"]),
    )
