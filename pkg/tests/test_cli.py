from __future__ import annotations

import json
from pathlib import Path

import pytest

from dashsim.cli import main
from dashsim.engine import run_pipeline
from dashsim.features import FeatureVector, default_taxonomy

from conftest import (
    CORPUS_DIR, FIXTURES_DIR, NEGATIVE_DIR, features_of, make_config,
    mock_backends, write_video_descriptor,
)

TAX = default_taxonomy()


def write_cli_config(tmp_path: Path, **extra_lines) -> Path:
    lines = [
        "[gateway]", 'backend = "mock"', "",
        "[frames]", "count = 2", "",
        "[simulator]", 'backend = "mock"', "",
        "[paths]",
        f'fixtures_dir = "{FIXTURES_DIR}"',
        f'runs_dir = "{tmp_path / "runs"}"',
    ]
    for section, body in extra_lines.items():
        lines += ["", f"[{section}]", body]
    path = tmp_path / "pipeline.toml"
    path.write_text("\n".join(lines) + "\n")
    return path


def corpus_video(tmp_path: Path, name: str) -> Path:
    source = (CORPUS_DIR / name / "script.scenic").read_text()
    return write_video_descriptor(tmp_path / f"{name}.json", name,
                                  features=features_of(source))


def vector_file(tmp_path: Path, name: str, **overrides) -> Path:
    values = [0.5] * 10
    for fid, v in overrides.items():
        values[TAX.index_of(fid)] = v
    path = tmp_path / name
    path.write_text(json.dumps(FeatureVector(values=tuple(values)).to_dict()))
    return path


# -- convert -------------------------------------------------------------------

def test_convert_mock_end_to_end(tmp_path, capsys):
    config = write_cli_config(tmp_path)
    video = corpus_video(tmp_path, "urban_cruise_follow")
    code = main(["convert", str(video), "--config", str(config), "--json"])
    out = json.loads(capsys.readouterr().out)
    assert code == 0
    assert out["outcome"] == "accepted"
    assert (Path(out["run_dir"]) / "run.json").exists()


def test_convert_unreadable_config_exits_2(tmp_path, capsys):
    bad = tmp_path / "broken.toml"
    bad.write_text("[gateway]\nretry_cpa = 1\n")
    code = main(["convert", "x.json", "--config", str(bad)])
    assert code == 2
    assert "retry_cpa" in capsys.readouterr().err


def test_convert_missing_credential_fails_fast(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("DASHSIM_TEST_KEY", raising=False)
    config = write_cli_config(tmp_path)
    text = config.read_text().replace('backend = "mock"', 'backend = "http"', 1)
    config.write_text(text.replace(
        "[gateway]", '[gateway]\ncredential_env = "DASHSIM_TEST_KEY"', 1))
    video = corpus_video(tmp_path, "urban_cruise_follow")
    code = main(["convert", str(video), "--config", str(config)])
    assert code == 2
    assert "DASHSIM_TEST_KEY" in capsys.readouterr().err


def test_convert_missing_video_exits_4(tmp_path, capsys):
    config = write_cli_config(tmp_path)
    code = main(["convert", str(tmp_path / "absent.json"), "--config", str(config)])
    assert code == 4


def test_convert_pipeline_failure_exits_3(tmp_path, capsys):
    config = write_cli_config(tmp_path, loop="max_iterations = 1")
    # a video whose features no canned script matches within one iteration
    video = write_video_descriptor(
        tmp_path / "urban_cruise_follow.json", "urban_cruise_follow",
        features=FeatureVector(values=(0.0,) * 9 + (1.0,)),
    )
    code = main(["convert", str(video), "--config", str(config), "--json"])
    out = json.loads(capsys.readouterr().out)
    assert code == 3
    assert out["outcome"] == "budget_exhausted"


# -- validate --------------------------------------------------------------------

def test_validate_corpus_script_exits_0(capsys):
    script = CORPUS_DIR / "ped_crossing" / "script.scenic"
    assert main(["validate", str(script)]) == 0
    assert capsys.readouterr().out == ""


def test_validate_unknown_class_exits_1(capsys):
    script = NEGATIVE_DIR / "unknown_class.scenic"
    assert main(["validate", str(script)]) == 1
    assert "CATALOG_UNKNOWN_CLASS" in capsys.readouterr().out


def test_validate_json_output_machine_readable(capsys):
    script = NEGATIVE_DIR / "unknown_class.scenic"
    assert main(["validate", str(script), "--json"]) == 1
    lines = capsys.readouterr().out.strip().splitlines()
    parsed = [json.loads(line) for line in lines]
    assert parsed[0]["code"] == "CATALOG_UNKNOWN_CLASS"
    assert {"line", "col", "end_line", "end_col"} <= set(parsed[0])


def test_validate_custom_catalog(tmp_path, capsys):
    catalog = {
        "object_classes": ["Moose", "Car"],
        "builtin_behaviors": {"FollowLaneBehavior": 3},
        "weather_values": ["ClearNoon"],
        "param_names": ["weather"],
        "specifier_kinds": ["at", "ahead_of"],
    }
    catalog_path = tmp_path / "catalog.json"
    catalog_path.write_text(json.dumps(catalog))
    script = NEGATIVE_DIR / "unknown_class.scenic"
    assert main(["validate", str(script), "--catalog", str(catalog_path)]) == 0


def test_validate_unreadable_file_exits_4(tmp_path):
    assert main(["validate", str(tmp_path / "absent.scenic")]) == 4


# -- similarity -------------------------------------------------------------------

def test_similarity_identical_passes(tmp_path, capsys):
    a = vector_file(tmp_path, "a.json")
    b = vector_file(tmp_path, "b.json")
    assert main(["similarity", str(a), str(b)]) == 0
    assert json.loads(capsys.readouterr().out)["passed"] is True


def test_similarity_quarter_gap_thresholds(tmp_path, capsys):
    base = vector_file(tmp_path, "base.json")
    env_shift = vector_file(tmp_path, "env.json", sunny_rainy=0.75)
    assert main(["similarity", str(base), str(env_shift)]) == 0

    behavior_shift = vector_file(tmp_path, "beh.json", leading_vehicle_cruising=0.75)
    capsys.readouterr()
    assert main(["similarity", str(base), str(behavior_shift)]) == 1
    report = json.loads(capsys.readouterr().out)
    assert report["violations"][0]["feature"] == "leading_vehicle_cruising"


def test_similarity_dimension_mismatch_exits_2(tmp_path, capsys):
    a = vector_file(tmp_path, "a.json")
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"taxonomy_version": "1", "values": [0.5] * 9}))
    assert main(["similarity", str(a), str(bad)]) == 2


# -- report ----------------------------------------------------------------------

def test_report_over_real_runs(tmp_path, capsys):
    video = corpus_video(tmp_path, "urban_cruise_follow")
    config = make_config(tmp_path)
    source = (CORPUS_DIR / "urban_cruise_follow" / "script.scenic").read_text()
    state = run_pipeline(video, config, mock_backends({"urban_cruise_follow": source}))
    assert state.outcome == "accepted"
    code = main(["report", str(state.run_dir), "--json"])
    out = json.loads(capsys.readouterr().out)
    assert code == 0
    assert out["runs_total"] == 1
    assert out["accepted_rate_pct"] == 100.0


def test_report_glob_and_empty(tmp_path, capsys):
    assert main(["report", str(tmp_path / "nothing*")]) == 4


# -- variations --------------------------------------------------------------------

def accepted_run(tmp_path):
    video = corpus_video(tmp_path, "urban_cruise_follow")
    source = (CORPUS_DIR / "urban_cruise_follow" / "script.scenic").read_text()
    state = run_pipeline(video, make_config(tmp_path),
                         mock_backends({"urban_cruise_follow": source}))
    assert state.outcome == "accepted"
    return state


def test_variations_fan_out_distinct_seeds(tmp_path, capsys):
    state = accepted_run(tmp_path)
    code = main(["variations", str(state.run_dir), "--count", "3", "--json"])
    out = json.loads(capsys.readouterr().out)
    assert code == 0
    assert out["count"] == 3
    identities = {r["video_path"] for r in out["results"]}
    assert len(identities) == 3
    for k in range(1, 4):
        manifest = state.run_dir / "variations" / f"var_{k:02d}" / "result.json"
        assert manifest.exists()
        assert json.loads(manifest.read_text())["status"] == "ok"


def test_variations_on_unaccepted_run_exit_3(tmp_path, capsys):
    video = write_video_descriptor(
        tmp_path / "urban_cruise_follow.json", "urban_cruise_follow",
        features=FeatureVector(values=(0.0,) * 9 + (1.0,)),
    )
    config = make_config(tmp_path, loop=type(make_config(tmp_path).loop)(max_iterations=1))
    source = (CORPUS_DIR / "urban_cruise_follow" / "script.scenic").read_text()
    state = run_pipeline(video, config, mock_backends({"urban_cruise_follow": source}))
    assert state.outcome != "accepted"
    assert main(["variations", str(state.run_dir), "--count", "2"]) == 3


def test_variations_zero_count_exit_2(tmp_path):
    state = accepted_run(tmp_path)
    assert main(["variations", str(state.run_dir), "--count", "0"]) == 2
