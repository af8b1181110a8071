"""Command-line surface.

Exit codes are a stable contract across commands: 0 success (accepted /
passed / clean), 1 gate failure (diagnostics or similarity violations), 2
usage or configuration error, 3 pipeline failure outcome, 4 I/O error.
Every command takes --json for machine-readable output; both forms are
rendered from the same in-memory value.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

from . import engine
from .config import ConfigError, load_config
from .dialect import default_catalog, has_errors, load_catalog, parse, validate
from .features import (
    FeatureError, ThresholdConfig, load_feature_vector, similarity,
)
from .frames import FrameError

EXIT_OK = 0
EXIT_GATE = 1
EXIT_USAGE = 2
EXIT_PIPELINE = 3
EXIT_IO = 4


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FrameError as exc:
        print(f"video error: {exc}", file=sys.stderr)
        return EXIT_IO
    except engine.StateError as exc:
        print(f"run state error: {exc}", file=sys.stderr)
        return EXIT_PIPELINE
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dashsim",
        description="Convert dashcam crash videos into simulator-ready scenario scripts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="run the full conversion pipeline on one video")
    p.add_argument("video", type=Path)
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--out", type=Path, default=None, help="run directory (default: under runs dir)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=_cmd_convert)

    p = sub.add_parser("validate", help="parse and catalog-check a scenario script")
    p.add_argument("script", type=Path)
    p.add_argument("--catalog", type=Path, default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=_cmd_validate)

    p = sub.add_parser("similarity", help="compare two feature vector files")
    p.add_argument("features_a", type=Path)
    p.add_argument("features_b", type=Path)
    p.add_argument("--config", type=Path, default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=_cmd_similarity)

    p = sub.add_parser("report", help="aggregate statistics over run directories")
    p.add_argument("runs", nargs="+", type=str, help="run directories or globs")
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=_cmd_report)

    p = sub.add_parser("variations", help="re-simulate an accepted run across fresh seeds")
    p.add_argument("run_dir", type=Path)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--config", type=Path, default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=_cmd_variations)
    return parser


def _cmd_convert(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    if not args.video.exists():
        print(f"video not found: {args.video}", file=sys.stderr)
        return EXIT_IO
    try:
        backends = engine.build_backends(config)
    except ValueError as exc:  # e.g. credential env var unset
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    state = engine.run_pipeline(args.video, config, backends, run_dir=args.out)
    payload = {
        "run_id": state.run_id,
        "run_dir": str(state.run_dir),
        "outcome": state.outcome,
        "iterations": len(state.iterations),
        "wall_time_s": round(state.wall_time_s, 3),
        "error": state.error,
    }
    if args.json:
        print(json.dumps(payload))
    else:
        print(f"outcome: {payload['outcome']}")
        print(f"iterations: {payload['iterations']}")
        print(f"run directory: {payload['run_dir']}")
        if state.error:
            print(f"detail: {state.error}")
    return EXIT_OK if state.outcome == engine.ACCEPTED else EXIT_PIPELINE


def _cmd_validate(args: argparse.Namespace) -> int:
    try:
        source = args.script.read_text(encoding="utf-8")
    except OSError as exc:
        print(f"cannot read script: {exc}", file=sys.stderr)
        return EXIT_IO
    catalog = load_catalog(args.catalog) if args.catalog else default_catalog()
    result = parse(source)
    if isinstance(result, list):
        diags = result
    else:
        diags = validate(result, catalog)
    for diag in diags:
        print(diag.to_json_line() if args.json else diag.render())
    return EXIT_GATE if has_errors(diags) else EXIT_OK


def _cmd_similarity(args: argparse.Namespace) -> int:
    thresholds = ThresholdConfig()
    if args.config is not None:
        thresholds = ThresholdConfig(load_config(args.config).thresholds)
    try:
        real = load_feature_vector(args.features_a)
        sim = load_feature_vector(args.features_b)
        result = similarity(real, sim, thresholds)
    except FeatureError as exc:
        print(f"feature error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(json.dumps(result.to_dict()) if args.json else result.to_json())
    return EXIT_OK if result.passed else EXIT_GATE


def _cmd_report(args: argparse.Namespace) -> int:
    import glob as globlib

    run_dirs: list[Path] = []
    for pattern in args.runs:
        path = Path(pattern)
        if path.is_dir():
            run_dirs.append(path)
        else:
            run_dirs.extend(
                sorted(Path(p) for p in globlib.glob(pattern) if Path(p).is_dir())
            )
    try:
        result = engine.report(run_dirs)
    except engine.ReportError as exc:
        print(f"report error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(json.dumps(result.to_dict()) if args.json else result.to_text())
    return EXIT_OK


def _cmd_variations(args: argparse.Namespace) -> int:
    if args.count < 1:
        print("--count must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    config = load_config(args.config) if args.config else None
    results = engine.run_variations(args.run_dir, args.count, config)
    payload = {
        "count": len(results),
        "results": [r.to_dict() for r in results],
    }
    if args.json:
        print(json.dumps(payload))
    else:
        for k, result in enumerate(results, start=1):
            video = result.video.path.name if result.video else "-"
            print(f"var_{k:02d}: {result.status} {video}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
