"""Driving-feature taxonomy, similarity gate and feedback synthesis.

Ten predefined feature categories cover the environment (weather, road type)
and the core inter-vehicle behaviors. A video is summarised as a probability
per category; the similarity between a real and a simulated video is the
vector of per-category gaps, gated against per-category thresholds.

Conventions:

* gap_i = sim_i - real_i, so a behavior present in the real video but missing
  from the simulation gives a negative gap (direction `missing_in_sim`).
* a violation needs |gap_i| > tau_i strictly; |gap| == tau passes.
* slash-named categories hold P(first-named label): `sunny_rainy` near 1
  means sunny, near 0 means rainy; same for `urban_highway`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

TAXONOMY_VERSION = "1"

ENVIRONMENT = "environment"
BEHAVIOR = "behavior"

MISSING_IN_SIM = "missing_in_sim"
EXTRA_IN_SIM = "extra_in_sim"

_ENV_DEFAULT_THRESHOLD = 0.3
_BEHAVIOR_DEFAULT_THRESHOLD = 0.2


class FeatureError(ValueError):
    """Contract violation: malformed vector, config or violation list."""


@dataclass(frozen=True)
class FeatureDescriptor:
    id: str
    display_name: str
    threshold: float
    kind: str  # ENVIRONMENT or BEHAVIOR


@dataclass(frozen=True)
class FeatureTaxonomy:
    features: tuple[FeatureDescriptor, ...]

    def __post_init__(self) -> None:
        if len(self.features) != 10:
            raise FeatureError(f"taxonomy must have exactly 10 entries, got {len(self.features)}")

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(f.id for f in self.features)

    def index_of(self, feature_id: str) -> int:
        for i, f in enumerate(self.features):
            if f.id == feature_id:
                return i
        raise FeatureError(f"unknown feature id {feature_id!r}")

    def by_id(self, feature_id: str) -> FeatureDescriptor:
        return self.features[self.index_of(feature_id)]


def default_taxonomy() -> FeatureTaxonomy:
    """The ten predefined categories with their default gap thresholds."""
    env = _ENV_DEFAULT_THRESHOLD
    beh = _BEHAVIOR_DEFAULT_THRESHOLD
    return FeatureTaxonomy(features=(
        FeatureDescriptor("sunny_rainy", "Sunny / Rainy", env, ENVIRONMENT),
        FeatureDescriptor("urban_highway", "Urban / Highway", env, ENVIRONMENT),
        FeatureDescriptor("random_object_on_road", "Random Object on Road", beh, BEHAVIOR),
        FeatureDescriptor("leading_vehicle_cruising", "Leading Vehicle Cruising", beh, BEHAVIOR),
        FeatureDescriptor("leading_vehicle_stopped", "Leading Vehicle Stopped", beh, BEHAVIOR),
        FeatureDescriptor("parallel_vehicle_cutting_in", "Parallel Vehicle Cutting in", beh, BEHAVIOR),
        FeatureDescriptor("parallel_vehicle_cruising", "Parallel Vehicle Cruising", beh, BEHAVIOR),
        FeatureDescriptor("parallel_vehicle_stopped", "Parallel Vehicle Stopped", beh, BEHAVIOR),
        FeatureDescriptor("behind_vehicle_overtaking", "Behind Vehicle Overtaking", beh, BEHAVIOR),
        FeatureDescriptor("opposite_vehicle_turning", "Opposite Vehicle Turning", beh, BEHAVIOR),
    ))


@dataclass(frozen=True)
class FeatureVector:
    values: tuple[float, ...]
    taxonomy_version: str = TAXONOMY_VERSION

    def __post_init__(self) -> None:
        if len(self.values) != 10:
            raise FeatureError(f"feature vector must have 10 components, got {len(self.values)}")
        for i, v in enumerate(self.values):
            if not 0.0 <= v <= 1.0:
                raise FeatureError(f"component {i} out of [0, 1]: {v}")

    @classmethod
    def from_mapping(cls, probs: Mapping[str, float],
                     taxonomy: Optional[FeatureTaxonomy] = None) -> "FeatureVector":
        taxonomy = taxonomy or default_taxonomy()
        missing = [fid for fid in taxonomy.ids if fid not in probs]
        if missing:
            raise FeatureError(f"missing feature probabilities: {missing}")
        return cls(values=tuple(float(probs[fid]) for fid in taxonomy.ids))

    def to_dict(self) -> dict:
        return {"taxonomy_version": self.taxonomy_version, "values": list(self.values)}

    @classmethod
    def from_dict(cls, data: Mapping) -> "FeatureVector":
        try:
            values = tuple(float(v) for v in data["values"])
            version = str(data.get("taxonomy_version", TAXONOMY_VERSION))
        except (KeyError, TypeError, ValueError) as exc:
            raise FeatureError(f"malformed feature vector payload: {exc}") from exc
        return cls(values=values, taxonomy_version=version)


def vector_from_hints(hints: Iterable[str],
                      taxonomy: Optional[FeatureTaxonomy] = None) -> FeatureVector:
    """Binary vector from hint tokens: 1.0 where evidence is present, 0.0
    elsewhere. Slash categories take 1.0 on their first-named label token
    (`sunny`, `urban`)."""
    taxonomy = taxonomy or default_taxonomy()
    tokens = set(hints)
    positive = {"sunny_rainy": "sunny", "urban_highway": "urban"}
    values = tuple(
        1.0 if positive.get(fid, fid) in tokens else 0.0 for fid in taxonomy.ids
    )
    return FeatureVector(values=values)


@dataclass(frozen=True)
class ThresholdConfig:
    """Per-feature threshold overrides; unlisted features use taxonomy
    defaults."""

    overrides: Mapping[str, float] = field(default_factory=dict)

    def validated(self, taxonomy: FeatureTaxonomy) -> "ThresholdConfig":
        for fid, tau in self.overrides.items():
            if fid not in taxonomy.ids:
                raise FeatureError(f"threshold override for unknown feature {fid!r}")
            if not 0.0 < tau <= 1.0:
                raise FeatureError(f"threshold for {fid!r} must be in (0, 1], got {tau}")
        return self

    def threshold_for(self, descriptor: FeatureDescriptor) -> float:
        return float(self.overrides.get(descriptor.id, descriptor.threshold))


@dataclass(frozen=True)
class Violation:
    feature_id: str
    gap: float
    threshold: float
    direction: str  # MISSING_IN_SIM or EXTRA_IN_SIM

    def to_dict(self) -> dict:
        return {
            "feature": self.feature_id,
            "gap": self.gap,
            "threshold": self.threshold,
            "direction": self.direction,
        }


@dataclass(frozen=True)
class SimilarityReport:
    gaps: tuple[float, ...]
    violations: tuple[Violation, ...]
    passed: bool

    def to_dict(self) -> dict:
        return {
            "gaps": list(self.gaps),
            "violations": [v.to_dict() for v in self.violations],
            "passed": self.passed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: Mapping) -> "SimilarityReport":
        violations = tuple(
            Violation(v["feature"], float(v["gap"]), float(v["threshold"]), v["direction"])
            for v in data["violations"]
        )
        return cls(
            gaps=tuple(float(g) for g in data["gaps"]),
            violations=violations,
            passed=bool(data["passed"]),
        )


def similarity(real: FeatureVector, sim: FeatureVector,
               cfg: Optional[ThresholdConfig] = None,
               taxonomy: Optional[FeatureTaxonomy] = None) -> SimilarityReport:
    """Gap vector and threshold gate between a real and a simulated video's
    feature vectors."""
    taxonomy = taxonomy or default_taxonomy()
    cfg = (cfg or ThresholdConfig()).validated(taxonomy)
    if len(real.values) != len(sim.values) or len(real.values) != len(taxonomy.features):
        raise FeatureError(
            f"dimension mismatch: real={len(real.values)} sim={len(sim.values)} "
            f"taxonomy={len(taxonomy.features)}"
        )
    gaps: list[float] = []
    violations: list[Violation] = []
    for descriptor, real_v, sim_v in zip(taxonomy.features, real.values, sim.values):
        gap = sim_v - real_v
        gaps.append(gap)
        tau = cfg.threshold_for(descriptor)
        if abs(gap) > tau:
            direction = MISSING_IN_SIM if gap < 0 else EXTRA_IN_SIM
            violations.append(Violation(descriptor.id, gap, tau, direction))
    return SimilarityReport(
        gaps=tuple(gaps), violations=tuple(violations), passed=not violations
    )


def synthesize_feedback(violations: Sequence[Violation],
                        taxonomy: Optional[FeatureTaxonomy] = None) -> str:
    """Natural-language feedback, one sentence per violation, in taxonomy
    order. Deterministic: equal violation lists give byte-identical text."""
    if not violations:
        raise FeatureError("synthesize_feedback needs at least one violation")
    taxonomy = taxonomy or default_taxonomy()
    ordered = sorted(violations, key=lambda v: taxonomy.index_of(v.feature_id))
    lines = []
    for violation in ordered:
        descriptor = taxonomy.by_id(violation.feature_id)
        noun = "condition" if descriptor.kind == ENVIRONMENT else "behavior"
        label = descriptor.display_name.lower()
        if violation.direction == MISSING_IN_SIM:
            lines.append(f"there should be a {label} {noun}, please improve on that")
        else:
            lines.append(f"there shouldn't be a {label} {noun}, please improve on that")
    return "\n".join(lines)


def parse_feedback(text: str,
                   taxonomy: Optional[FeatureTaxonomy] = None) -> list[tuple[str, str]]:
    """Inverse of `synthesize_feedback`: (feature_id, direction) per line.
    Unrecognised lines are skipped."""
    taxonomy = taxonomy or default_taxonomy()
    by_label = {f.display_name.lower(): f for f in taxonomy.features}
    out: list[tuple[str, str]] = []
    for line in text.splitlines():
        line = line.strip()
        for label, descriptor in by_label.items():
            noun = "condition" if descriptor.kind == ENVIRONMENT else "behavior"
            if line == f"there should be a {label} {noun}, please improve on that":
                out.append((descriptor.id, MISSING_IN_SIM))
                break
            if line == f"there shouldn't be a {label} {noun}, please improve on that":
                out.append((descriptor.id, EXTRA_IN_SIM))
                break
    return out


def load_feature_vector(path: Union[str, Path]) -> FeatureVector:
    raw = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise FeatureError(f"invalid feature vector file {path}: {exc}") from exc
    return FeatureVector.from_dict(data)
