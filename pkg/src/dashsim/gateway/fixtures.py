"""Few-shot example registries loaded from a fixtures directory.

Layout:

    fixtures/script/<name>/{frames/, script.scenic}
    fixtures/feature/<name>/{frames/, features.json}

Registration order is the sorted directory listing, and prompt assembly
preserves it, so example order in requests is stable across runs.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Union

from ..features import load_feature_vector
from ..frames import read_frame_pack
from .prompts import FewShotExample


class FixtureError(ValueError):
    pass


@dataclass(frozen=True)
class FixtureRegistry:
    script_examples: tuple[FewShotExample, ...]
    feature_examples: tuple[FewShotExample, ...]


def load_fixtures(fixtures_dir: Union[str, Path]) -> FixtureRegistry:
    fixtures_dir = Path(fixtures_dir)
    return FixtureRegistry(
        script_examples=_load_role(fixtures_dir / "script", "script.scenic"),
        feature_examples=_load_role(fixtures_dir / "feature", "features.json"),
    )


def _load_role(role_dir: Path, payload_name: str) -> tuple[FewShotExample, ...]:
    if not role_dir.is_dir():
        return ()
    examples = []
    for entry in sorted(role_dir.iterdir()):
        if not entry.is_dir():
            continue
        payload_path = entry / payload_name
        frames_dir = entry / "frames"
        if not payload_path.exists():
            raise FixtureError(f"fixture {entry.name!r} is missing {payload_name}")
        if not (frames_dir / "manifest.json").exists():
            raise FixtureError(f"fixture {entry.name!r} is missing frames/manifest.json")
        if payload_name == "script.scenic":
            payload: object = payload_path.read_text(encoding="utf-8")
        else:
            payload = load_feature_vector(payload_path)
        examples.append(FewShotExample(
            frames=read_frame_pack(frames_dir),
            payload=payload,  # type: ignore[arg-type]
            label=entry.name,
        ))
    return tuple(examples)


def load_scripts_by_label(fixtures_dir: Union[str, Path]) -> dict[str, str]:
    """Fixture label -> script text, for the mock script backend."""
    registry = load_fixtures(fixtures_dir)
    return {ex.label: ex.payload for ex in registry.script_examples}  # type: ignore[misc]
