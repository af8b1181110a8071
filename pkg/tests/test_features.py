from __future__ import annotations

import json
import random

import pytest
from hypothesis import given, strategies as st

from dashsim.features import (
    EXTRA_IN_SIM, MISSING_IN_SIM, FeatureError, FeatureVector, SimilarityReport,
    ThresholdConfig, Violation, default_taxonomy, load_feature_vector,
    parse_feedback, similarity, synthesize_feedback, vector_from_hints,
)

TAX = default_taxonomy()

# (display name, default threshold) in fixed order.
EXPECTED_ROWS = [
    ("Sunny / Rainy", 0.3),
    ("Urban / Highway", 0.3),
    ("Random Object on Road", 0.2),
    ("Leading Vehicle Cruising", 0.2),
    ("Leading Vehicle Stopped", 0.2),
    ("Parallel Vehicle Cutting in", 0.2),
    ("Parallel Vehicle Cruising", 0.2),
    ("Parallel Vehicle Stopped", 0.2),
    ("Behind Vehicle Overtaking", 0.2),
    ("Opposite Vehicle Turning", 0.2),
]


def vec(**overrides) -> FeatureVector:
    values = [0.5] * 10
    for fid, value in overrides.items():
        values[TAX.index_of(fid)] = value
    return FeatureVector(values=tuple(values))


def test_taxonomy_has_exactly_ten_fixed_rows():
    assert [(f.display_name, f.threshold) for f in TAX.features] == EXPECTED_ROWS


def test_taxonomy_entry_spot_checks():
    assert (TAX.features[0].display_name, TAX.features[0].threshold) == ("Sunny / Rainy", 0.3)
    assert (TAX.features[3].display_name, TAX.features[3].threshold) == ("Leading Vehicle Cruising", 0.2)
    assert (TAX.features[9].display_name, TAX.features[9].threshold) == ("Opposite Vehicle Turning", 0.2)


def test_environment_vs_behavior_kinds():
    kinds = [f.kind for f in TAX.features]
    assert kinds[:2] == ["environment", "environment"]
    assert set(kinds[2:]) == {"behavior"}


def test_identity_passes():
    v = vec()
    result = similarity(v, v)
    assert result.passed
    assert result.violations == ()
    assert all(g == 0.0 for g in result.gaps)


def test_missing_behavior_violates_point_two_threshold():
    real = vec(leading_vehicle_stopped=0.9)
    sim = vec(leading_vehicle_stopped=0.6)
    result = similarity(real, sim)
    assert not result.passed
    assert len(result.violations) == 1
    violation = result.violations[0]
    assert violation.feature_id == "leading_vehicle_stopped"
    assert violation.gap == pytest.approx(-0.3)
    assert violation.threshold == 0.2
    assert violation.direction == MISSING_IN_SIM


def test_environment_gap_within_point_three_passes():
    real = vec(sunny_rainy=0.5)
    sim = vec(sunny_rainy=0.75)
    result = similarity(real, sim)
    assert result.passed
    assert result.gaps[0] == pytest.approx(0.25)


def test_gap_equal_to_threshold_passes():
    real = vec(leading_vehicle_cruising=0.7)
    sim = vec(leading_vehicle_cruising=0.5)
    assert similarity(real, sim).passed  # |gap| == tau exactly


def test_dimension_mismatch_is_error():
    with pytest.raises(FeatureError):
        FeatureVector(values=(0.5,) * 9)
    with pytest.raises(FeatureError):
        FeatureVector(values=(0.5,) * 10 + (1.2,))


def test_vector_component_bounds():
    with pytest.raises(FeatureError):
        FeatureVector(values=(1.4,) + (0.5,) * 9)
    with pytest.raises(FeatureError):
        FeatureVector(values=(-0.1,) + (0.5,) * 9)


def test_threshold_override_applies():
    real = vec(leading_vehicle_stopped=0.9)
    sim = vec(leading_vehicle_stopped=0.6)
    loose = ThresholdConfig({"leading_vehicle_stopped": 0.5})
    assert similarity(real, sim, loose).passed


def test_threshold_override_validation():
    with pytest.raises(FeatureError):
        similarity(vec(), vec(), ThresholdConfig({"nope": 0.2}))
    with pytest.raises(FeatureError):
        similarity(vec(), vec(), ThresholdConfig({"sunny_rainy": 0.0}))


def test_antisymmetry_and_zero_property_random_pairs():
    rng = random.Random(20240817)
    for _ in range(300):
        a = FeatureVector(values=tuple(rng.random() for _ in range(10)))
        b = FeatureVector(values=tuple(rng.random() for _ in range(10)))
        ab = similarity(a, b)
        ba = similarity(b, a)
        for x, y in zip(ab.gaps, ba.gaps):
            assert x == pytest.approx(-y)
        assert similarity(a, a).passed


@given(st.lists(st.floats(min_value=0, max_value=1), min_size=10, max_size=10),
       st.lists(st.floats(min_value=0, max_value=1), min_size=10, max_size=10))
def test_brute_force_equivalence(real_values, sim_values):
    real = FeatureVector(values=tuple(real_values))
    sim = FeatureVector(values=tuple(sim_values))
    result = similarity(real, sim)
    naive = []
    for descriptor, rv, sv in zip(TAX.features, real_values, sim_values):
        gap = sv - rv
        if abs(gap) > descriptor.threshold:
            naive.append((descriptor.id, MISSING_IN_SIM if gap < 0 else EXTRA_IN_SIM))
    assert [(v.feature_id, v.direction) for v in result.violations] == naive
    assert result.passed == (not naive)


def test_threshold_monotonicity():
    rng = random.Random(7)
    for _ in range(100):
        a = FeatureVector(values=tuple(rng.random() for _ in range(10)))
        b = FeatureVector(values=tuple(rng.random() for _ in range(10)))
        base = similarity(a, b)
        raised = similarity(a, b, ThresholdConfig({f.id: min(1.0, f.threshold + 0.3)
                                                   for f in TAX.features}))
        assert len(raised.violations) <= len(base.violations)
        base_ids = {v.feature_id for v in base.violations}
        assert {v.feature_id for v in raised.violations} <= base_ids


# -- feedback ---------------------------------------------------------------

def test_feedback_extra_behavior_sentence():
    violation = Violation("behind_vehicle_overtaking", 0.8, 0.2, EXTRA_IN_SIM)
    assert synthesize_feedback([violation]) == (
        "there shouldn't be a behind vehicle overtaking behavior, please improve on that"
    )


def test_feedback_missing_behavior_sentence():
    violation = Violation("leading_vehicle_stopped", -0.7, 0.2, MISSING_IN_SIM)
    assert synthesize_feedback([violation]) == (
        "there should be a leading vehicle stopped behavior, please improve on that"
    )


def test_feedback_environment_uses_condition():
    violation = Violation("sunny_rainy", -0.6, 0.3, MISSING_IN_SIM)
    assert synthesize_feedback([violation]) == (
        "there should be a sunny / rainy condition, please improve on that"
    )


def test_feedback_two_violations_in_taxonomy_order():
    violations = [
        Violation("behind_vehicle_overtaking", 0.5, 0.2, EXTRA_IN_SIM),
        Violation("sunny_rainy", -0.6, 0.3, MISSING_IN_SIM),
    ]
    text = synthesize_feedback(violations)
    lines = text.splitlines()
    assert len(lines) == 2
    assert "sunny / rainy" in lines[0]
    assert "behind vehicle overtaking" in lines[1]


def test_feedback_deterministic():
    violations = [
        Violation("leading_vehicle_cruising", -0.4, 0.2, MISSING_IN_SIM),
        Violation("urban_highway", 0.9, 0.3, EXTRA_IN_SIM),
    ]
    assert synthesize_feedback(violations) == synthesize_feedback(list(violations))


def test_feedback_requires_violations():
    with pytest.raises(FeatureError):
        synthesize_feedback([])


def test_parse_feedback_inverts_synthesis():
    violations = [
        Violation("sunny_rainy", -0.6, 0.3, MISSING_IN_SIM),
        Violation("parallel_vehicle_stopped", 0.4, 0.2, EXTRA_IN_SIM),
    ]
    text = synthesize_feedback(violations)
    assert parse_feedback(text) == [
        ("sunny_rainy", MISSING_IN_SIM),
        ("parallel_vehicle_stopped", EXTRA_IN_SIM),
    ]


# -- serialization ------------------------------------------------------------

def test_vector_json_round_trip(tmp_path):
    vector = vec(sunny_rainy=1.0, opposite_vehicle_turning=0.25)
    path = tmp_path / "features.json"
    path.write_text(json.dumps(vector.to_dict()))
    loaded = load_feature_vector(path)
    assert loaded == vector
    raw = json.loads(path.read_text())
    assert set(raw) == {"taxonomy_version", "values"}
    assert len(raw["values"]) == 10


def test_report_json_shape_and_round_trip():
    real = vec(leading_vehicle_stopped=0.9)
    sim = vec(leading_vehicle_stopped=0.1)
    result = similarity(real, sim)
    data = result.to_dict()
    assert set(data) == {"gaps", "violations", "passed"}
    assert data["violations"][0] == {
        "feature": "leading_vehicle_stopped",
        "gap": pytest.approx(-0.8),
        "threshold": 0.2,
        "direction": "missing_in_sim",
    }
    assert SimilarityReport.from_dict(json.loads(json.dumps(data))) == result


def test_vector_from_hints_polarity():
    sunny = vector_from_hints({"sunny", "leading_vehicle_stopped"})
    assert sunny.values[0] == 1.0
    assert sunny.values[TAX.index_of("leading_vehicle_stopped")] == 1.0
    rainy = vector_from_hints({"rainy"})
    assert rainy.values[0] == 0.0
    assert vector_from_hints(set()).values == (0.0,) * 10
