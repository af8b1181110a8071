from __future__ import annotations

import json
from pathlib import Path

import pytest

from dashsim.config import (
    FramesConfig, LoopConfig, PathsConfig, PipelineConfig,
)
from dashsim.dialect import ScenicScript, parse, static_feature_hints
from dashsim.engine import Backends
from dashsim.features import default_taxonomy, vector_from_hints
from dashsim.gateway import MockFeatureBackend, MockScriptBackend
from dashsim.simulate import MockSimulator

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURES_DIR = REPO_ROOT / "fixtures"
CORPUS_DIR = FIXTURES_DIR / "script"
NEGATIVE_DIR = Path(__file__).resolve().parent / "data" / "negative"

TAXONOMY = default_taxonomy()


@pytest.fixture(scope="session")
def corpus() -> dict[str, str]:
    """Name -> source text of the 20 authored corpus scripts."""
    out = {}
    for entry in sorted(CORPUS_DIR.iterdir()):
        if entry.is_dir():
            out[entry.name] = (entry / "script.scenic").read_text(encoding="utf-8")
    assert len(out) == 20
    return out


@pytest.fixture(scope="session")
def negative_corpus() -> dict[str, dict]:
    expected = json.loads((NEGATIVE_DIR / "expected.json").read_text(encoding="utf-8"))
    assert len(expected) == 10
    return expected


def parsed(source: str) -> ScenicScript:
    script = parse(source)
    assert isinstance(script, ScenicScript), script
    return script


def features_of(source: str):
    """Binary feature vector a mock feature model would report for a video
    of this script."""
    return vector_from_hints(static_feature_hints(parsed(source)), TAXONOMY)


def write_video_descriptor(path: Path, label: str, features=None,
                           script_source: str | None = None,
                           frame_count: int = 80, fps: float = 20.0) -> Path:
    descriptor = {
        "kind": "synthetic-video",
        "label": label,
        "frame_count": frame_count,
        "fps": fps,
    }
    if features is not None:
        descriptor["features"] = dict(zip(TAXONOMY.ids, features.values))
    if script_source is not None:
        descriptor["script_source"] = script_source
    path.write_text(json.dumps(descriptor, indent=2), encoding="utf-8")
    return path


def make_config(tmp_path: Path, **overrides) -> PipelineConfig:
    """Fast test configuration: 2-frame packs, mock backends."""
    defaults = dict(
        frames=FramesConfig(count=2),
        loop=LoopConfig(max_iterations=5),
        paths=PathsConfig(runs_dir=tmp_path / "runs"),
    )
    defaults.update(overrides)
    return PipelineConfig(**defaults)


def mock_backends(scripts: dict[str, str] | None = None, **script_knobs) -> Backends:
    return Backends(
        script=MockScriptBackend(scripts or {}, **script_knobs),
        feature=MockFeatureBackend(),
        simulator=MockSimulator(),
    )
