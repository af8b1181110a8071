"""Deterministic completion backends for offline runs and tests.

The pair closes the loop without any live model:

* MockScriptBackend answers the script role from a canned table keyed by the
  query video's fixture label. On refinement turns it edits the prior script
  per the fed-back sentences: a "there should be ..." line adds the canonical
  construct evidencing that feature, a "there shouldn't be ..." line removes
  the declarations evidencing it. With `stall=True` it ignores feedback and
  repeats its first answer.
* MockFeatureBackend answers the feature role from the query video itself:
  a synthetic-video descriptor's explicit `features`, or the static feature
  evidence of its embedded `script_source`, or the same via `
  <video>.features.json` / `<video>.source.scenic` sidecar files.

Together they satisfy: features extracted from a mock-simulated script equal
that script's static feature evidence.
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path
from typing import Mapping, Optional

from .. import features as feat
from ..dialect import parse, render_tree
from ..dialect.hints import hints_for_tree, object_feature_evidence
from ..dialect.nodes import ParamDecl, ScenarioTree, StringLit
from ..frames import FramePack
from .errors import MALFORMED_RESPONSE, GatewayError
from .prompts import BackendCapabilities, FEATURE_ROLE, SCRIPT_ROLE, PromptPayload

# Canonical single-feature constructs used by the repair path. Each snippet
# evidences exactly its own feature and nothing else.
_FEATURE_SNIPPETS: dict[str, str] = {
    "random_object_on_road":
        "obstacle = new Trash at (2, 30)",
    "leading_vehicle_cruising":
        "lead_cruiser = new Car ahead of ego by 25, with behavior FollowLaneBehavior(8)",
    "leading_vehicle_stopped":
        "stopped_lead = new Car ahead of ego by 18, with behavior Idle",
    "parallel_vehicle_cutting_in":
        "cutter = new Car left of ego by 4, with behavior LaneChangeBehavior(1)",
    "parallel_vehicle_cruising":
        "pacer = new Car right of ego by 4, with behavior FollowLaneBehavior(10)",
    "parallel_vehicle_stopped":
        "parked_neighbor = new Car right of ego by 4, with behavior Idle",
    "behind_vehicle_overtaking":
        "chaser = new Car behind ego by 12, with behavior OvertakeBehavior(ego)",
    "opposite_vehicle_turning":
        "oncoming = new Car ahead of ego by 35, facing 180 deg, with behavior TurnLeftBehavior(5)",
}

# (feature, direction) -> param edit for the two environment categories.
_ENV_EDITS: dict[tuple[str, str], tuple[str, str]] = {
    ("sunny_rainy", feat.MISSING_IN_SIM): ("weather", "ClearNoon"),
    ("sunny_rainy", feat.EXTRA_IN_SIM): ("weather", "HardRainNoon"),
    ("urban_highway", feat.MISSING_IN_SIM): ("map", "Town03"),
    ("urban_highway", feat.EXTRA_IN_SIM): ("map", "Town04"),
}


def fixture_label(pack: FramePack) -> str:
    """Label identifying which fixture a frame pack was built from."""
    path = Path(pack.source.path)
    if path.suffix == ".json" and path.exists():
        try:
            descriptor = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError):
            return path.stem
        label = descriptor.get("label")
        if isinstance(label, str) and label:
            return label
    return path.stem


class MockScriptBackend:
    capabilities = BackendCapabilities()

    def __init__(
        self,
        scripts: Mapping[str, str],
        stall: bool = False,
        max_repairs: Optional[int] = None,
        taxonomy: Optional[feat.FeatureTaxonomy] = None,
    ):
        self.scripts = dict(scripts)
        self.stall = stall
        self.max_repairs = max_repairs
        self.taxonomy = taxonomy or feat.default_taxonomy()
        self.calls = 0

    def complete(self, payload: PromptPayload) -> str:
        if payload.role != SCRIPT_ROLE:
            raise GatewayError(MALFORMED_RESPONSE, "script backend got a non-script prompt")
        self.calls += 1
        label = fixture_label(payload.query_frames)
        if payload.feedback is not None and not self.stall:
            return apply_feedback_repairs(
                payload.prior_script or "", payload.feedback,
                max_repairs=self.max_repairs, taxonomy=self.taxonomy,
            )
        try:
            return self.scripts[label]
        except KeyError:
            raise GatewayError(
                MALFORMED_RESPONSE, f"no canned script for fixture {label!r}"
            ) from None


class MockFeatureBackend:
    capabilities = BackendCapabilities()

    def __init__(self, taxonomy: Optional[feat.FeatureTaxonomy] = None):
        self.taxonomy = taxonomy or feat.default_taxonomy()
        self.calls = 0

    def complete(self, payload: PromptPayload) -> str:
        if payload.role != FEATURE_ROLE:
            raise GatewayError(MALFORMED_RESPONSE, "feature backend got a non-feature prompt")
        self.calls += 1
        vector = self._vector_for(Path(payload.query_frames.source.path))
        mapping = dict(zip(self.taxonomy.ids, vector.values))
        return json.dumps(mapping)

    def _vector_for(self, path: Path) -> feat.FeatureVector:
        if path.suffix == ".json" and path.exists():
            descriptor = json.loads(path.read_text(encoding="utf-8"))
            explicit = descriptor.get("features")
            if isinstance(explicit, Mapping):
                probs = {fid: float(explicit.get(fid, 0.0)) for fid in self.taxonomy.ids}
                return feat.FeatureVector.from_mapping(probs, self.taxonomy)
            source = descriptor.get("script_source")
            if isinstance(source, str):
                return self._vector_from_script(source)
        sidecar_features = Path(str(path) + ".features.json")
        if sidecar_features.exists():
            return feat.load_feature_vector(sidecar_features)
        sidecar_script = Path(str(path) + ".source.scenic")
        if sidecar_script.exists():
            return self._vector_from_script(sidecar_script.read_text(encoding="utf-8"))
        raise GatewayError(
            MALFORMED_RESPONSE,
            f"mock feature backend cannot derive features for {path}",
        )

    def _vector_from_script(self, source: str) -> feat.FeatureVector:
        script = parse(source)
        if isinstance(script, list):
            raise GatewayError(
                MALFORMED_RESPONSE,
                "mock feature backend got an unparseable script: "
                + "; ".join(d.message for d in script),
            )
        return feat.vector_from_hints(hints_for_tree(script.tree), self.taxonomy)


class StaticTextBackend:
    """Returns a fixed response regardless of the prompt (unit-test helper)."""

    capabilities = BackendCapabilities()

    def __init__(self, text: str):
        self.text = text
        self.calls = 0

    def complete(self, payload: PromptPayload) -> str:
        self.calls += 1
        return self.text


def apply_feedback_repairs(
    prior_source: str,
    feedback: str,
    max_repairs: Optional[int] = None,
    taxonomy: Optional[feat.FeatureTaxonomy] = None,
) -> str:
    """Edit `prior_source` so that, for each fed-back violation (up to
    `max_repairs`, taxonomy order), the named feature's evidence is added
    (missing_in_sim) or removed (extra_in_sim). Unparseable priors are
    returned unchanged."""
    taxonomy = taxonomy or feat.default_taxonomy()
    script = parse(prior_source)
    if isinstance(script, list):
        return prior_source
    requests = feat.parse_feedback(feedback, taxonomy)
    if max_repairs is not None:
        requests = requests[:max_repairs]
    tree = script.tree
    for feature_id, direction in requests:
        env_edit = _ENV_EDITS.get((feature_id, direction))
        if env_edit is not None:
            tree = _set_param(tree, *env_edit)
        elif direction == feat.MISSING_IN_SIM:
            tree = _add_snippet(tree, feature_id)
        else:
            tree = _remove_feature_objects(tree, feature_id)
    return render_tree(tree)


def _set_param(tree: ScenarioTree, name: str, value: str) -> ScenarioTree:
    new_param = ParamDecl(name=name, value=StringLit(value))
    params = list(tree.params)
    for i, param in enumerate(params):
        if param.name == name:
            params[i] = new_param
            break
    else:
        params.append(new_param)
    return dataclasses.replace(tree, params=tuple(params))


def _add_snippet(tree: ScenarioTree, feature_id: str) -> ScenarioTree:
    snippet = _FEATURE_SNIPPETS[feature_id]
    carrier = parse(f"ego = new Car at (0, 0)\n{snippet}\n")
    assert not isinstance(carrier, list), f"bad snippet for {feature_id}"
    obj = carrier.tree.objects[1]
    taken = {o.binding for o in tree.objects if o.binding}
    binding = obj.binding or "extra"
    candidate = binding
    serial = 1
    while candidate in taken:
        serial += 1
        candidate = f"{binding}_{serial}"
    obj = dataclasses.replace(obj, binding=candidate)
    return dataclasses.replace(tree, objects=(*tree.objects, obj))


def _remove_feature_objects(tree: ScenarioTree, feature_id: str) -> ScenarioTree:
    doomed = {
        id(obj)
        for obj, evidence in object_feature_evidence(tree)
        if feature_id in evidence
    }
    if not doomed:
        return tree
    survivors = tuple(o for o in tree.objects if id(o) not in doomed)
    return dataclasses.replace(tree, objects=survivors)
