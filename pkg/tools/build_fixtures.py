#!/usr/bin/env python3
"""Regenerate derived fixture artifacts from the authored corpus scripts.

For every fixtures/script/<name>/script.scenic this writes, deterministically:

    fixtures/script/<name>/video.json       synthetic video descriptor
    fixtures/script/<name>/frames/          2-frame pack (manifest + jpegs)
    fixtures/feature/<name>/features.json   binary vector from static evidence
    fixtures/feature/<name>/video.json
    fixtures/feature/<name>/frames/

Run from the repository root: python tools/build_fixtures.py
"""

from __future__ import annotations

import hashlib
import json
import sys
from io import BytesIO
from pathlib import Path

from dashsim.dialect import default_catalog, parse, static_feature_hints, validate
from dashsim.features import default_taxonomy, vector_from_hints
from dashsim.frames import sample_indices
from dashsim.videotool import synthetic_frame

FRAME_COUNT_BASE = 90
FPS = 20.0
FRAMES_PER_FIXTURE = 2
WIDTH, HEIGHT = 64, 48


def frame_count_for(name: str) -> int:
    return FRAME_COUNT_BASE + int(hashlib.sha256(name.encode()).hexdigest()[:2], 16) % 60


def write_frames(descriptor: dict, video_path: Path, frames_dir: Path) -> None:
    frames_dir.mkdir(parents=True, exist_ok=True)
    indices = sample_indices(descriptor["frame_count"], FRAMES_PER_FIXTURE)
    for k, index in enumerate(indices):
        image = synthetic_frame(descriptor, video_path, index)
        buf = BytesIO()
        image.save(buf, format="JPEG", quality=85)
        (frames_dir / f"frame_{k}.jpg").write_bytes(buf.getvalue())
    (frames_dir / "manifest.json").write_text(json.dumps({
        "source": "video.json",
        "indices": indices,
        "width": WIDTH,
        "height": HEIGHT,
        "format": "jpeg",
        "frame_count": descriptor["frame_count"],
        "fps": FPS,
    }, indent=2) + "\n")


def main() -> int:
    root = Path(__file__).resolve().parent.parent
    script_root = root / "fixtures" / "script"
    feature_root = root / "fixtures" / "feature"
    catalog = default_catalog()
    taxonomy = default_taxonomy()

    names = sorted(d.name for d in script_root.iterdir() if d.is_dir())
    for name in names:
        script_dir = script_root / name
        source = (script_dir / "script.scenic").read_text(encoding="utf-8")
        script = parse(source)
        if isinstance(script, list):
            print(f"{name}: does not parse: {script[0].render()}", file=sys.stderr)
            return 1
        diagnostics = validate(script, catalog)
        if diagnostics:
            print(f"{name}: does not validate: {diagnostics[0].render()}", file=sys.stderr)
            return 1

        hints = static_feature_hints(script)
        vector = vector_from_hints(hints, taxonomy)
        descriptor = {
            "kind": "synthetic-video",
            "label": name,
            "frame_count": frame_count_for(name),
            "fps": FPS,
            "width": WIDTH,
            "height": HEIGHT,
            "features": dict(zip(taxonomy.ids, vector.values)),
        }
        (script_dir / "video.json").write_text(json.dumps(descriptor, indent=2) + "\n")
        write_frames(descriptor, script_dir / "video.json", script_dir / "frames")

        feature_dir = feature_root / name
        feature_dir.mkdir(parents=True, exist_ok=True)
        (feature_dir / "features.json").write_text(json.dumps(vector.to_dict(), indent=2) + "\n")
        (feature_dir / "video.json").write_text(json.dumps(descriptor, indent=2) + "\n")
        write_frames(descriptor, feature_dir / "video.json", feature_dir / "frames")
        print(f"{name}: frames + features written")
    print(f"{len(names)} fixtures built")
    return 0


if __name__ == "__main__":
    sys.exit(main())
