"""Static feature evidence extracted from a scenario tree.

`static_feature_hints` returns the set of taxonomy features a script
syntactically evidences, as hint tokens. Behavior-kind features use their
taxonomy id directly; the two paired environment features contribute polarity
tokens (`sunny`/`rainy`, `urban`/`highway`). The function is pure: equal trees
always give equal sets.

Evidence rules (everything is keyed on the tree, nothing is simulated):

* weather param value in the sunny or rainy literal set -> polarity token
* map param value in the urban or highway town set -> polarity token
* an obstacle-class object (pedestrian, props) -> random_object_on_road
* a non-ego vehicle whose specifiers anchor it to ego:
    - `ahead of ego` + cruising behavior          -> leading_vehicle_cruising
    - `ahead of ego` + stopping behavior or none  -> leading_vehicle_stopped
    - `left/right of ego` + lane-change behavior  -> parallel_vehicle_cutting_in
    - `left/right of ego` + cruising behavior     -> parallel_vehicle_cruising
    - `left/right of ego` + stopping or none      -> parallel_vehicle_stopped
    - `behind ego` + overtaking behavior          -> behind_vehicle_overtaking
* a vehicle facing roughly opposite (angle within 150..210 degrees) with a
  turning behavior -> opposite_vehicle_turning; opposite-facing vehicles are
  never counted as "leading"

A reference to a script-defined behavior is analysed transitively: its `do`
and `take` targets contribute evidence (cycles are guarded).
"""

from __future__ import annotations

from typing import Iterable, Optional

from .nodes import (
    AngleLit, BehaviorDecl, BehaviorStmt, DoStmt, Expr, Name, ObjectDecl,
    ScenarioTree, ScenicScript, StringLit, TakeStmt, TryInterruptStmt,
    UnaryOp,
)
from .validator import referenced_name

SUNNY = "sunny"
RAINY = "rainy"
URBAN = "urban"
HIGHWAY = "highway"

RANDOM_OBJECT = "random_object_on_road"
LEAD_CRUISING = "leading_vehicle_cruising"
LEAD_STOPPED = "leading_vehicle_stopped"
PARALLEL_CUTTING_IN = "parallel_vehicle_cutting_in"
PARALLEL_CRUISING = "parallel_vehicle_cruising"
PARALLEL_STOPPED = "parallel_vehicle_stopped"
BEHIND_OVERTAKING = "behind_vehicle_overtaking"
OPPOSITE_TURNING = "opposite_vehicle_turning"

SUNNY_WEATHER = frozenset({
    "ClearNoon", "ClearSunset", "ClearNight", "CloudyNoon", "CloudySunset",
})
RAINY_WEATHER = frozenset({
    "WetNoon", "WetSunset", "WetCloudyNoon",
    "SoftRainNoon", "MidRainyNoon", "HardRainNoon", "HardRainSunset",
})
URBAN_MAPS = frozenset({"Town01", "Town02", "Town03", "Town05", "Town10HD"})
HIGHWAY_MAPS = frozenset({"Town04", "Town06"})

OBSTACLE_CLASSES = frozenset({"Pedestrian", "Cone", "Trash", "Debris", "Box"})
VEHICLE_CLASSES = frozenset({"Car", "Truck", "Van", "Motorcycle", "Bicycle"})

# Behavior-name evidence classes. Actions that imply a class are listed too.
_CRUISE = frozenset({"FollowLaneBehavior", "AccelerateForwardBehavior"})
_STOP = frozenset({"Idle", "BrakeBehavior", "SetBrakeAction"})
_LANE_CHANGE = frozenset({"LaneChangeBehavior", "CutInBehavior"})
_OVERTAKE = frozenset({"OvertakeBehavior"})
_TURN = frozenset({"TurnLeftBehavior", "TurnRightBehavior"})


def static_feature_hints(script: ScenicScript) -> frozenset[str]:
    """Hint tokens evidenced by a validated script."""
    return hints_for_tree(script.tree)


def hints_for_tree(tree: ScenarioTree) -> frozenset[str]:
    hints: set[str] = set()
    for param in tree.params:
        if param.name == "weather" and isinstance(param.value, StringLit):
            if param.value.value in SUNNY_WEATHER:
                hints.add(SUNNY)
            elif param.value.value in RAINY_WEATHER:
                hints.add(RAINY)
        elif param.name == "map" and isinstance(param.value, StringLit):
            if param.value.value in URBAN_MAPS:
                hints.add(URBAN)
            elif param.value.value in HIGHWAY_MAPS:
                hints.add(HIGHWAY)
    for obj, features in object_feature_evidence(tree):
        hints.update(features)
    return frozenset(hints)


def object_feature_evidence(tree: ScenarioTree) -> list[tuple[ObjectDecl, frozenset[str]]]:
    """Per-object feature attribution, in declaration order.

    Used both for hint aggregation and for tooling that needs to know which
    declaration carries a given feature (e.g. scripted repairs in tests).
    """
    behaviors = {b.name: b for b in tree.behaviors}
    out: list[tuple[ObjectDecl, frozenset[str]]] = []
    for obj in tree.objects:
        if obj.binding == "ego":
            continue
        features: set[str] = set()
        if obj.class_name in OBSTACLE_CLASSES:
            features.add(RANDOM_OBJECT)
        if obj.class_name in VEHICLE_CLASSES:
            features.update(_vehicle_features(obj, behaviors))
        out.append((obj, frozenset(features)))
    return out


def _vehicle_features(obj: ObjectDecl, behaviors: dict[str, BehaviorDecl]) -> set[str]:
    relation = _ego_relation(obj)
    opposite = _is_opposite_facing(obj)
    evidence = _behavior_evidence(obj, behaviors)

    features: set[str] = set()
    if opposite and _TURN_CLASS in evidence:
        features.add(OPPOSITE_TURNING)
    if relation == "ahead" and not opposite:
        if _CRUISE_CLASS in evidence:
            features.add(LEAD_CRUISING)
        if _STOP_CLASS in evidence or not evidence:
            features.add(LEAD_STOPPED)
    elif relation == "parallel":
        if _LANE_CHANGE_CLASS in evidence:
            features.add(PARALLEL_CUTTING_IN)
        if _CRUISE_CLASS in evidence:
            features.add(PARALLEL_CRUISING)
        if _STOP_CLASS in evidence or not evidence:
            features.add(PARALLEL_STOPPED)
    elif relation == "behind":
        if _OVERTAKE_CLASS in evidence:
            features.add(BEHIND_OVERTAKING)
    return features


_CRUISE_CLASS = "cruise"
_STOP_CLASS = "stop"
_LANE_CHANGE_CLASS = "lane_change"
_OVERTAKE_CLASS = "overtake"
_TURN_CLASS = "turn"

_NAME_CLASSES = (
    (_CRUISE, _CRUISE_CLASS),
    (_STOP, _STOP_CLASS),
    (_LANE_CHANGE, _LANE_CHANGE_CLASS),
    (_OVERTAKE, _OVERTAKE_CLASS),
    (_TURN, _TURN_CLASS),
)


def _ego_relation(obj: ObjectDecl) -> Optional[str]:
    for spec in obj.specifiers:
        if not spec.args or not _is_ego(spec.args[0]):
            continue
        if spec.kind == "ahead_of":
            return "ahead"
        if spec.kind == "behind":
            return "behind"
        if spec.kind in ("left_of", "right_of"):
            return "parallel"
    return None


def _is_ego(expr: Expr) -> bool:
    return isinstance(expr, Name) and expr.ident == "ego"


def _is_opposite_facing(obj: ObjectDecl) -> bool:
    for spec in obj.specifiers:
        if spec.kind != "facing":
            continue
        angle = _first_angle(spec.args[0])
        if angle is None:
            continue
        if 150 <= angle % 360 <= 210:
            return True
    return False


def _first_angle(expr: Expr) -> Optional[float]:
    if isinstance(expr, AngleLit):
        return float(expr.value)
    if isinstance(expr, UnaryOp) and expr.op == "-":
        inner = _first_angle(expr.operand)
        return None if inner is None else -inner
    for child in _children(expr):
        angle = _first_angle(child)
        if angle is not None:
            return angle
    return None


def _children(expr: Expr) -> Iterable[Expr]:
    from .nodes import Attribute, BinaryOp, Call, DistanceExpr, VectorLit

    if isinstance(expr, BinaryOp):
        return (expr.left, expr.right)
    if isinstance(expr, Call):
        return (*expr.args, *(v for _, v in expr.kwargs))
    if isinstance(expr, VectorLit):
        return expr.items
    if isinstance(expr, Attribute):
        return (expr.base,)
    if isinstance(expr, DistanceExpr):
        return (expr.target,) if expr.origin is None else (expr.target, expr.origin)
    return ()


def _behavior_evidence(obj: ObjectDecl, behaviors: dict[str, BehaviorDecl]) -> set[str]:
    ref = obj.behavior_ref()
    if ref is None:
        return set()
    name = referenced_name(ref)
    if name is None:
        return set()
    return _evidence_for_name(name, behaviors, frozenset())


def _evidence_for_name(
    name: str, behaviors: dict[str, BehaviorDecl], visiting: frozenset[str]
) -> set[str]:
    for names, cls in _NAME_CLASSES:
        if name in names:
            return {cls}
    if name in behaviors and name not in visiting:
        return _evidence_for_body(
            behaviors[name].body, behaviors, visiting | {name}
        )
    return set()


def _evidence_for_body(
    body: tuple[BehaviorStmt, ...], behaviors: dict[str, BehaviorDecl],
    visiting: frozenset[str],
) -> set[str]:
    evidence: set[str] = set()
    for stmt in body:
        if isinstance(stmt, DoStmt):
            name = referenced_name(stmt.call)
            if name is not None:
                evidence |= _evidence_for_name(name, behaviors, visiting)
        elif isinstance(stmt, TakeStmt):
            for action in stmt.actions:
                name = referenced_name(action)
                if name is not None:
                    evidence |= _evidence_for_name(name, behaviors, visiting)
        elif isinstance(stmt, TryInterruptStmt):
            evidence |= _evidence_for_body(stmt.body, behaviors, visiting)
            for handler in stmt.handlers:
                evidence |= _evidence_for_body(handler.body, behaviors, visiting)
    return evidence
