"""Aggregate reporting over finished run directories.

Counts and rates mirror how batches are judged: how many conversions were
fully automated (accepted), how failures break down by outcome, how often
the refinement loop had to run more than once, and the mean cost of an
accepted conversion.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

from .state import ACCEPTED, StateError, load_manifest


class ReportError(Exception):
    pass


@dataclass
class AggregateReport:
    runs_total: int
    accepted_count: int
    accepted_rate_pct: float
    outcomes: dict[str, int]
    refined_count: int  # runs that needed >= 2 iterations
    refined_rate_pct: float  # over all runs
    accepted_refined_rate_pct: float  # over accepted runs only
    mean_wall_time_s_accepted: float
    mean_script_lines_accepted: float
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "runs_total": self.runs_total,
            "accepted_count": self.accepted_count,
            "accepted_rate_pct": self.accepted_rate_pct,
            "outcomes": dict(sorted(self.outcomes.items())),
            "refined_count": self.refined_count,
            "refined_rate_pct": self.refined_rate_pct,
            "accepted_refined_rate_pct": self.accepted_refined_rate_pct,
            "mean_wall_time_s_accepted": self.mean_wall_time_s_accepted,
            "mean_script_lines_accepted": self.mean_script_lines_accepted,
            "warnings": list(self.warnings),
        }

    def to_text(self) -> str:
        rows = [
            ("runs", str(self.runs_total)),
            ("accepted", f"{self.accepted_count} ({self.accepted_rate_pct:.1f}%)"),
            ("refined (>= 2 iterations)", f"{self.refined_count} ({self.refined_rate_pct:.1f}%)"),
            ("refined among accepted", f"{self.accepted_refined_rate_pct:.1f}%"),
            ("mean wall time, accepted", f"{self.mean_wall_time_s_accepted:.1f} s"),
            ("mean script lines, accepted", f"{self.mean_script_lines_accepted:.1f}"),
        ]
        for outcome, count in sorted(self.outcomes.items()):
            rows.append((f"outcome: {outcome}", str(count)))
        for warning in self.warnings:
            rows.append(("warning", warning))
        width = max(len(label) for label, _ in rows)
        return "\n".join(f"{label:<{width}}  {value}" for label, value in rows)


def report(run_dirs: Sequence[Union[str, Path]]) -> AggregateReport:
    """Aggregate over run directories; unreadable ones become warnings and
    are excluded from every denominator."""
    manifests = []
    warnings = []
    for run_dir in run_dirs:
        try:
            manifests.append(load_manifest(Path(run_dir)))
        except StateError as exc:
            warnings.append(str(exc))
    if not manifests:
        raise ReportError("no readable run directories")

    total = len(manifests)
    outcomes: dict[str, int] = {}
    accepted = []
    refined = 0
    for manifest in manifests:
        outcome = manifest.get("outcome") or "incomplete"
        outcomes[outcome] = outcomes.get(outcome, 0) + 1
        iterations = manifest.get("iterations", [])
        if len(iterations) >= 2:
            refined += 1
        if outcome == ACCEPTED:
            accepted.append(manifest)

    accepted_refined = sum(1 for m in accepted if len(m.get("iterations", [])) >= 2)
    wall_times = [float(m.get("wall_time_s", 0.0)) for m in accepted]
    script_lines = [
        m["iterations"][-1].get("script_lines") or 0
        for m in accepted if m.get("iterations")
    ]
    return AggregateReport(
        runs_total=total,
        accepted_count=len(accepted),
        accepted_rate_pct=round(100.0 * len(accepted) / total, 1),
        outcomes=outcomes,
        refined_count=refined,
        refined_rate_pct=round(100.0 * refined / total, 1),
        accepted_refined_rate_pct=(
            round(100.0 * accepted_refined / len(accepted), 1) if accepted else 0.0
        ),
        mean_wall_time_s_accepted=(
            round(sum(wall_times) / len(wall_times), 3) if wall_times else 0.0
        ),
        mean_script_lines_accepted=(
            round(sum(script_lines) / len(script_lines), 1) if script_lines else 0.0
        ),
        warnings=warnings,
    )
