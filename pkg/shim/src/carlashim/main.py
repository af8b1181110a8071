"""carla-shim command line.

    carla-shim --request <request.json> [--config <shim.json>] [--stub]
    carla-shim --self-test [--output-dir DIR] [--config <shim.json>]

One invocation runs one scenario. The result manifest is always written
(atomically) unless the request itself is malformed, in which case the shim
exits 2 without touching the output directory. Exit code 0 iff status ok.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import load_shim_config
from .protocol import (
    EXIT_BAD_REQUEST, RUNTIME_ERROR, RequestError, ShimRequest, failure,
    write_result,
)
from .runner import check_simulator_reachable, run_live, run_stub


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="carla-shim", description=__doc__)
    parser.add_argument("--request", type=Path, help="request.json path")
    parser.add_argument("--config", type=Path, default=None, help="shim config JSON")
    parser.add_argument("--stub", action="store_true",
                        help="no simulator: record a placeholder video and report ok")
    parser.add_argument("--self-test", action="store_true",
                        help="offline protocol check: emit a schema-valid result")
    parser.add_argument("--output-dir", type=Path, default=Path.cwd(),
                        help="result directory for --self-test")
    args = parser.parse_args(argv)

    try:
        config = load_shim_config(args.config)
    except (OSError, ValueError) as exc:
        print(f"shim config error: {exc}", file=sys.stderr)
        return EXIT_BAD_REQUEST

    if args.self_test:
        log = check_simulator_reachable(config)
        if log is None:
            log = "self-test only checks the offline contract; simulator was reachable"
        result = failure(RUNTIME_ERROR, log)
        write_result(result, args.output_dir)
        print(f"self-test result written to {args.output_dir / 'result.json'}",
              file=sys.stderr)
        return result.exit_code

    if args.request is None:
        parser.error("--request is required unless --self-test is given")

    try:
        request = ShimRequest.load(args.request)
    except RequestError as exc:
        print(f"bad request: {exc}", file=sys.stderr)
        return EXIT_BAD_REQUEST

    runner = run_stub if args.stub else run_live
    result = runner(request, config)
    write_result(result, request.output_dir)
    if result.status != "ok":
        print(f"{result.status}: {result.log_excerpt}", file=sys.stderr)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
