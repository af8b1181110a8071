"""Run-state model and on-disk layout.

A run directory is the unit of persistence and isolation:

    run.json                    manifest: ids, probe data, config snapshot,
                                iteration summaries, outcome, timings
    input/                      input video frame pack (manifest + jpegs)
    real_features.json          cached feature vector of the input video
    iter_NN/
        script.scenic           generated script (attempt 1)
        diagnostics.jsonl       its parse/validation diagnostics
        script_repair.scenic    one automatic repair attempt, when needed
        diagnostics_repair.jsonl
        sim/result.json         simulation result manifest (+ backend files)
        sim_frames/             simulated video frame pack
        sim_features.json
        similarity.json
        feedback.txt            feedback sent into the next iteration

Files are only ever added, and the manifest is rewritten atomically, so a
killed run can always be resumed from its first incomplete step.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from ..config import PipelineConfig
from ..dialect import Diagnostic, ScenicScript
from ..features import FeatureVector, SimilarityReport
from ..frames import VideoRef
from ..simulate import SimResult

ACCEPTED = "accepted"
BUDGET_EXHAUSTED = "budget_exhausted"
VALIDATION_FAILED = "validation_failed"
SIMULATION_FAILED = "simulation_failed"
GATEWAY_FAILED = "gateway_failed"
TERMINAL_OUTCOMES = (
    ACCEPTED, BUDGET_EXHAUSTED, VALIDATION_FAILED, SIMULATION_FAILED, GATEWAY_FAILED,
)

MANIFEST_NAME = "run.json"


class StateError(Exception):
    """A run directory that cannot be loaded; the message names the file."""


@dataclass
class IterationRecord:
    index: int  # 1-based
    script_text: str
    script: Optional[ScenicScript]
    validation: list[Diagnostic]
    repair_used: bool = False
    sim: Optional[SimResult] = None
    sim_features: Optional[FeatureVector] = None
    report: Optional[SimilarityReport] = None
    feedback_out: Optional[str] = None
    reused_previous: bool = False
    timings: dict[str, float] = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "index": self.index,
            "script_lines": self.script.line_count if self.script else None,
            "valid": self.script is not None and not self.validation_errors(),
            "repair_used": self.repair_used,
            "sim_status": self.sim.status if self.sim else None,
            "passed": self.report.passed if self.report else None,
            "feedback_out": self.feedback_out is not None,
            "reused_previous": self.reused_previous,
            "timings": dict(self.timings),
        }

    def validation_errors(self) -> list[Diagnostic]:
        return [d for d in self.validation if d.severity == "error"]


@dataclass
class RunState:
    run_id: str
    run_dir: Path
    input_video: VideoRef
    config: PipelineConfig
    seed: int
    real_features: Optional[FeatureVector] = None
    iterations: list[IterationRecord] = field(default_factory=list)
    outcome: Optional[str] = None
    error: Optional[str] = None
    created_at: str = ""
    updated_at: str = ""
    wall_time_s: float = 0.0

    @property
    def is_terminal(self) -> bool:
        return self.outcome in TERMINAL_OUTCOMES

    def iter_dir(self, index: int) -> Path:
        return self.run_dir / f"iter_{index:02d}"

    def to_manifest(self) -> dict:
        return {
            "run_id": self.run_id,
            "created_at": self.created_at,
            "updated_at": self.updated_at,
            "input_video": {
                "path": str(self.input_video.path),
                "frame_count": self.input_video.frame_count,
                "fps": self.input_video.fps,
                "duration_s": self.input_video.duration_s,
            },
            "seed": self.seed,
            "outcome": self.outcome,
            "error": self.error,
            "wall_time_s": round(self.wall_time_s, 3),
            "iterations": [record.summary() for record in self.iterations],
            "config": self.config.to_dict(),
        }


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def write_json_atomic(path: Path, payload: object) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise


def save_manifest(state: RunState) -> None:
    state.updated_at = utc_now()
    write_json_atomic(state.run_dir / MANIFEST_NAME, state.to_manifest())


def load_manifest(run_dir: Path) -> dict:
    path = Path(run_dir) / MANIFEST_NAME
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise StateError(f"cannot read run manifest {path}: {exc}") from exc
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise StateError(f"run manifest {path} is not valid JSON: {exc}") from exc
    for key in ("run_id", "input_video", "config", "seed"):
        if key not in data:
            raise StateError(f"run manifest {path} is missing {key!r}")
    return data


def diagnostics_to_jsonl(diags: list[Diagnostic]) -> str:
    return "".join(d.to_json_line() + "\n" for d in diags)


def diagnostics_from_jsonl(text: str) -> list[Diagnostic]:
    from ..dialect.diagnostics import Diagnostic as D, Span

    out = []
    for line in text.splitlines():
        if not line.strip():
            continue
        raw = json.loads(line)
        out.append(D(
            severity=raw["severity"], code=raw["code"],
            span=Span(raw["line"], raw["col"], raw["end_line"], raw["end_col"]),
            message=raw["message"], hint=raw.get("hint"),
        ))
    return out
