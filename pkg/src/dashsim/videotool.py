"""Bundled frame probe/extractor, invoked as a subprocess.

Implements the pipeline's external-tool contracts:

    dashsim-videotool probe <input>
        prints {"frame_count": N, "fps": F, "duration_s": D}
    dashsim-videotool extract <input> <frame_index> <output>
        writes one frame image to <output>
    dashsim-videotool extract-batch <input> <indices> <output_dir>
        comma-separated indices; writes frame_000.png, frame_001.png, ...
    dashsim-videotool synth <output> --frames N --fps F [--width W --height H]
        writes a real solid-frame video (test/dev helper)

Real video files are decoded with OpenCV. A file ending in .json is treated
as a synthetic video descriptor ({"kind": "synthetic-video", "frame_count",
"fps", optional "label"/"digest"/"script_source"/"features"}): frames are
rendered as solid colors derived deterministically from the descriptor
identity and frame index, so mock simulations need no codec at all.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from PIL import Image

SYNTHETIC_KIND = "synthetic-video"
_DEFAULT_SIZE = (64, 48)


def load_descriptor(path: Path) -> dict:
    data = json.loads(path.read_text(encoding="utf-8"))
    if data.get("kind") != SYNTHETIC_KIND:
        raise ValueError(f"{path} is not a synthetic video descriptor")
    return data


def descriptor_identity(descriptor: dict, path: Path) -> str:
    return str(descriptor.get("digest") or descriptor.get("label") or path.stem)


def synthetic_frame(descriptor: dict, path: Path, frame_index: int) -> Image.Image:
    width = int(descriptor.get("width", _DEFAULT_SIZE[0]))
    height = int(descriptor.get("height", _DEFAULT_SIZE[1]))
    seed = f"{descriptor_identity(descriptor, path)}:{frame_index}".encode()
    r, g, b = hashlib.sha256(seed).digest()[:3]
    return Image.new("RGB", (width, height), (r, g, b))


def _probe(path: Path) -> dict:
    if path.suffix == ".json":
        descriptor = load_descriptor(path)
        frame_count = int(descriptor["frame_count"])
        fps = float(descriptor["fps"])
        return {
            "frame_count": frame_count,
            "fps": fps,
            "duration_s": frame_count / fps,
        }

    import cv2

    cap = cv2.VideoCapture(str(path))
    if not cap.isOpened():
        raise ValueError(f"cannot open video: {path}")
    try:
        frame_count = int(cap.get(cv2.CAP_PROP_FRAME_COUNT))
        fps = float(cap.get(cv2.CAP_PROP_FPS)) or 30.0
    finally:
        cap.release()
    if frame_count < 1:
        raise ValueError(f"no frames detected in {path}")
    return {"frame_count": frame_count, "fps": fps, "duration_s": frame_count / fps}


def _extract_one(path: Path, frame_index: int, output: Path) -> None:
    if path.suffix == ".json":
        descriptor = load_descriptor(path)
        if frame_index >= int(descriptor["frame_count"]):
            raise ValueError(f"frame index {frame_index} out of range")
        synthetic_frame(descriptor, path, frame_index).save(output)
        return

    import cv2

    cap = cv2.VideoCapture(str(path))
    if not cap.isOpened():
        raise ValueError(f"cannot open video: {path}")
    try:
        cap.set(cv2.CAP_PROP_POS_FRAMES, frame_index)
        ok, frame = cap.read()
    finally:
        cap.release()
    if not ok or frame is None:
        raise ValueError(f"cannot decode frame {frame_index} of {path}")
    if not cv2.imwrite(str(output), frame):
        raise ValueError(f"cannot write frame image {output}")


def _extract_batch(path: Path, indices: list[int], out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    if path.suffix == ".json":
        descriptor = load_descriptor(path)
        frame_count = int(descriptor["frame_count"])
        for k, index in enumerate(indices):
            if index >= frame_count:
                raise ValueError(f"frame index {index} out of range")
            synthetic_frame(descriptor, path, index).save(out_dir / f"frame_{k:03d}.png")
        return

    import cv2

    cap = cv2.VideoCapture(str(path))
    if not cap.isOpened():
        raise ValueError(f"cannot open video: {path}")
    try:
        for k, index in enumerate(indices):
            cap.set(cv2.CAP_PROP_POS_FRAMES, index)
            ok, frame = cap.read()
            if not ok or frame is None:
                raise ValueError(f"cannot decode frame {index} of {path}")
            if not cv2.imwrite(str(out_dir / f"frame_{k:03d}.png"), frame):
                raise ValueError(f"cannot write frame image in {out_dir}")
    finally:
        cap.release()


def _synth(output: Path, frames: int, fps: float, width: int, height: int) -> None:
    import cv2
    import numpy as np

    fourcc = cv2.VideoWriter_fourcc(*("mp4v" if output.suffix == ".mp4" else "MJPG"))
    writer = cv2.VideoWriter(str(output), fourcc, fps, (width, height))
    if not writer.isOpened():
        raise ValueError(f"cannot open video writer for {output}")
    try:
        for i in range(frames):
            shade = (i * 7) % 256
            frame = np.full((height, width, 3), (shade, 128, 255 - shade), dtype=np.uint8)
            writer.write(frame)
    finally:
        writer.release()


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="dashsim-videotool", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_probe = sub.add_parser("probe")
    p_probe.add_argument("input", type=Path)

    p_extract = sub.add_parser("extract")
    p_extract.add_argument("input", type=Path)
    p_extract.add_argument("frame_index", type=int)
    p_extract.add_argument("output", type=Path)

    p_batch = sub.add_parser("extract-batch")
    p_batch.add_argument("input", type=Path)
    p_batch.add_argument("indices", type=str)
    p_batch.add_argument("output_dir", type=Path)

    p_synth = sub.add_parser("synth")
    p_synth.add_argument("output", type=Path)
    p_synth.add_argument("--frames", type=int, default=60)
    p_synth.add_argument("--fps", type=float, default=20.0)
    p_synth.add_argument("--width", type=int, default=64)
    p_synth.add_argument("--height", type=int, default=48)

    args = parser.parse_args(argv)
    try:
        if args.command == "probe":
            print(json.dumps(_probe(args.input)))
        elif args.command == "extract":
            _extract_one(args.input, args.frame_index, args.output)
        elif args.command == "extract-batch":
            indices = [int(x) for x in args.indices.split(",") if x]
            _extract_batch(args.input, indices, args.output_dir)
        elif args.command == "synth":
            _synth(args.output, args.frames, args.fps, args.width, args.height)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"videotool error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
