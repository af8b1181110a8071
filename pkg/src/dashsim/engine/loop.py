"""The conversion control loop.

One run: build the input frame pack once, extract the input video's feature
vector once, then iterate generate -> validate -> simulate -> extract sim
features -> similarity gate -> feedback, until the gate passes or the
iteration budget is spent. Every step persists its artifact before the next
step begins, and every step loads its artifact instead of recomputing when it
already exists, so `resume` and a fresh `run_pipeline` share one code path.
"""

from __future__ import annotations

import hashlib
import logging
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

from .. import features as feat
from ..config import PipelineConfig
from ..dialect import ScenicScript, default_catalog, load_catalog, parse, validate
from ..frames import (
    ExtractorConfig, FramePack, FrameError, VideoRef, build_frame_pack,
    probe_video, read_frame_pack, write_frame_pack,
)
from ..gateway import (
    CompletionBackend, FixtureRegistry, GatewayError, HttpBackend,
    HttpEndpointConfig, MockFeatureBackend, MockScriptBackend, extract_features,
    generate_script, load_fixtures, load_scripts_by_label,
)
from ..simulate import (
    ExternalSimulator, MockSimulator, OK, SimRequest, SimResult,
    SimulatorBackend, sim_result_from_dict,
)
from .state import (
    ACCEPTED, BUDGET_EXHAUSTED, GATEWAY_FAILED, SIMULATION_FAILED,
    VALIDATION_FAILED, IterationRecord, RunState, StateError,
    diagnostics_from_jsonl, diagnostics_to_jsonl, load_manifest, save_manifest,
    utc_now, write_json_atomic,
)

logger = logging.getLogger("dashsim.engine")

_VALIDATION_FEEDBACK_HEADER = "the script failed validation"


@dataclass
class Backends:
    script: CompletionBackend
    feature: CompletionBackend
    simulator: SimulatorBackend


def build_backends(config: PipelineConfig) -> Backends:
    """Construct backends from configuration. For the live gateway this
    reads the credential environment variable and fails fast if unset."""
    gw = config.gateway
    if gw.backend == "http":
        script_backend: CompletionBackend = HttpBackend(HttpEndpointConfig(
            url=gw.endpoint, model=gw.script_model, credential_env=gw.credential_env,
            temperature=gw.script_temperature, retry_cap=gw.retry_cap,
            deadline_s=gw.deadline_s, backoff_base_s=gw.backoff_base_s,
            max_in_flight=gw.max_in_flight,
        ))
        feature_backend: CompletionBackend = HttpBackend(HttpEndpointConfig(
            url=gw.endpoint, model=gw.feature_model, credential_env=gw.credential_env,
            temperature=gw.feature_temperature, retry_cap=gw.retry_cap,
            deadline_s=gw.deadline_s, backoff_base_s=gw.backoff_base_s,
            max_in_flight=gw.max_in_flight,
        ))
    else:
        scripts = {}
        if config.paths.fixtures_dir is not None:
            scripts = load_scripts_by_label(config.paths.fixtures_dir)
        script_backend = MockScriptBackend(scripts)
        feature_backend = MockFeatureBackend()

    if config.simulator.backend == "external":
        simulator: SimulatorBackend = ExternalSimulator(config.simulator.shim_command)
    else:
        simulator = MockSimulator()
    return Backends(script=script_backend, feature=feature_backend, simulator=simulator)


def run_pipeline(
    video: Union[VideoRef, str, Path],
    config: PipelineConfig,
    backends: Optional[Backends] = None,
    run_dir: Optional[Path] = None,
) -> RunState:
    """Convert one video; returns the terminal RunState. Gateway and
    simulator failures terminate the run with the matching outcome rather
    than raising; I/O problems with the input video itself raise."""
    backends = backends or build_backends(config)
    extractor = _extractor(config)
    if not isinstance(video, VideoRef):
        video = probe_video(video, extractor)

    run_id = f"{time.strftime('%Y%m%dT%H%M%S')}_{uuid.uuid4().hex[:6]}"
    run_dir = Path(run_dir) if run_dir is not None else config.paths.runs_dir / run_id
    run_dir.mkdir(parents=True, exist_ok=True)
    state = RunState(
        run_id=run_id, run_dir=run_dir, input_video=video, config=config,
        seed=_seed_from_run_id(run_id), created_at=utc_now(),
    )
    save_manifest(state)
    return _Engine(state, backends).execute()


def resume(run_dir: Union[str, Path], backends: Optional[Backends] = None) -> RunState:
    """Reload a run directory and continue from the first incomplete step.
    Terminal runs are returned unchanged."""
    run_dir = Path(run_dir)
    manifest = load_manifest(run_dir)
    config = PipelineConfig.from_dict(manifest["config"], check_paths=False)
    video = VideoRef(
        path=Path(manifest["input_video"]["path"]),
        frame_count=int(manifest["input_video"]["frame_count"]),
        fps=float(manifest["input_video"]["fps"]),
        duration_s=float(manifest["input_video"]["duration_s"]),
    )
    state = RunState(
        run_id=manifest["run_id"], run_dir=run_dir, input_video=video,
        config=config, seed=int(manifest["seed"]),
        outcome=manifest.get("outcome"), error=manifest.get("error"),
        created_at=manifest.get("created_at", ""),
        wall_time_s=float(manifest.get("wall_time_s", 0.0)),
    )
    backends = backends or build_backends(config)
    return _Engine(state, backends).execute()


def run_batch(
    videos: Sequence[Union[VideoRef, str, Path]],
    config: PipelineConfig,
    backends: Optional[Backends] = None,
    parallelism: Optional[int] = None,
) -> list[RunState]:
    """Run several conversions concurrently (per-run directories are the
    isolation unit; backends are shared)."""
    backends = backends or build_backends(config)
    workers = parallelism or config.loop.batch_parallelism
    if workers <= 1 or len(videos) <= 1:
        return [run_pipeline(v, config, backends) for v in videos]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(run_pipeline, v, config, backends) for v in videos]
        return [f.result() for f in futures]


def run_variations(
    run_dir: Union[str, Path],
    count: int,
    config: Optional[PipelineConfig] = None,
    backends: Optional[Backends] = None,
) -> list[SimResult]:
    """Fan the accepted script of a finished run out across `count` fresh
    seeds, writing variations/var_NN/result.json manifests."""
    if count < 1:
        raise ValueError("variation count must be >= 1")
    run_dir = Path(run_dir)
    manifest = load_manifest(run_dir)
    if manifest.get("outcome") != ACCEPTED:
        raise StateError(f"run {run_dir} is not accepted (outcome={manifest.get('outcome')})")
    config = config or PipelineConfig.from_dict(manifest["config"], check_paths=False)
    backends = backends or build_backends(config)

    final_index = len(manifest["iterations"])
    script_path = _script_path(run_dir / f"iter_{final_index:02d}")
    script = parse(script_path.read_text(encoding="utf-8"))
    if not isinstance(script, ScenicScript):
        raise StateError(f"accepted script {script_path} no longer parses")

    base_seed = int(manifest["seed"])
    results = []
    for k in range(1, count + 1):
        var_dir = run_dir / "variations" / f"var_{k:02d}"
        var_dir.mkdir(parents=True, exist_ok=True)
        request = SimRequest(
            script=script, seed=base_seed + k,
            max_sim_seconds=config.simulator.max_sim_seconds, record=var_dir,
        )
        result = backends.simulator.run(request)
        write_json_atomic(var_dir / "result.json", {**result.to_dict(), "seed": request.seed})
        results.append(result)
    return results


def _extractor(config: PipelineConfig) -> ExtractorConfig:
    return ExtractorConfig(
        probe_command=config.frames.probe_command,
        extract_command=config.frames.extract_command,
    )


def _seed_from_run_id(run_id: str) -> int:
    return int.from_bytes(hashlib.sha256(run_id.encode()).digest()[:4], "big") & 0x7FFFFFFF


def _script_path(iter_dir: Path) -> Path:
    repair = iter_dir / "script_repair.scenic"
    return repair if repair.exists() else iter_dir / "script.scenic"


class _Engine:
    """Load-or-compute executor over one run directory."""

    def __init__(self, state: RunState, backends: Backends):
        self.state = state
        self.backends = backends
        self.config = state.config
        self.extractor = _extractor(state.config)
        self.taxonomy = feat.default_taxonomy()
        self.thresholds = feat.ThresholdConfig(dict(state.config.thresholds))
        if state.config.paths.catalog_file is not None:
            self.catalog = load_catalog(state.config.paths.catalog_file)
        else:
            self.catalog = default_catalog()
        self.registry = self._load_registry()

    def _load_registry(self) -> FixtureRegistry:
        fixtures_dir = self.config.paths.fixtures_dir
        if self.config.gateway.backend == "http" and fixtures_dir is not None:
            return load_fixtures(fixtures_dir)
        return FixtureRegistry(script_examples=(), feature_examples=())

    # -- main flow -----------------------------------------------------------

    def execute(self) -> RunState:
        state = self.state
        if state.is_terminal:
            self._reload_iterations()
            return state
        started = time.monotonic()
        try:
            input_pack = self._ensure_input_pack()
            state.real_features = self._ensure_real_features(input_pack)
            self._reload_iterations()
            self._iterate(input_pack)
        except GatewayError as exc:
            state.outcome = GATEWAY_FAILED
            state.error = f"{exc.kind}: {exc.detail}"
        finally:
            state.wall_time_s += time.monotonic() - started
            save_manifest(state)
        return state

    def _iterate(self, input_pack: FramePack) -> None:
        state = self.state
        max_iterations = self.config.loop.max_iterations
        # Keep reloaded iterations only up to the first incomplete one; that
        # one is re-entered below and its finished steps load from disk.
        reloaded = state.iterations
        state.iterations = []
        for record in reloaded:
            if not self._record_complete(record, max_iterations):
                break
            state.iterations.append(record)
        index = len(state.iterations)
        if index and self._decide(state.iterations[-1], max_iterations):
            return
        while index < max_iterations:
            index += 1
            previous = state.iterations[-1] if state.iterations else None
            record = self._run_iteration(index, input_pack, previous)
            state.iterations.append(record)
            save_manifest(state)
            if self._decide(record, max_iterations):
                return
        state.outcome = BUDGET_EXHAUSTED

    def _record_complete(self, record: IterationRecord, max_iterations: int) -> bool:
        """True when every step of the iteration already ran to its end
        (successfully or terminally)."""
        if record.script is None or record.validation_errors():
            return True  # terminal: validation failure is the end state
        if record.sim is not None and record.sim.status != OK:
            return True
        if record.report is None:
            return False
        if record.report.passed or record.index >= max_iterations:
            return True
        return record.feedback_out is not None

    def _decide(self, record: IterationRecord, max_iterations: int) -> bool:
        """Apply the gate outcome of a completed iteration; True ends the run."""
        state = self.state
        if record.script is None or record.validation_errors():
            state.outcome = VALIDATION_FAILED
            state.error = "; ".join(d.message for d in record.validation_errors()) or None
            return True
        if record.sim is not None and record.sim.status != OK:
            state.outcome = SIMULATION_FAILED
            state.error = record.sim.log_excerpt or record.sim.status
            return True
        if record.report is None:
            state.outcome = SIMULATION_FAILED
            state.error = state.error or "iteration ended without a similarity report"
            return True
        if record.report.passed:
            state.outcome = ACCEPTED
            return True
        if record.index >= max_iterations:
            state.outcome = BUDGET_EXHAUSTED
            return True
        return False

    # -- steps ----------------------------------------------------------------

    def _ensure_input_pack(self) -> FramePack:
        input_dir = self.state.run_dir / "input"
        if (input_dir / "manifest.json").exists():
            return read_frame_pack(input_dir)
        started = time.monotonic()
        pack = build_frame_pack(
            self.state.input_video,
            n=self.config.frames.count,
            max_dim=self.config.frames.max_dim,
            tool=self.extractor,
            jpeg_quality=self.config.frames.jpeg_quality,
        )
        write_frame_pack(pack, input_dir)
        logger.debug("input frame pack built in %.2fs", time.monotonic() - started)
        save_manifest(self.state)
        return pack

    def _ensure_real_features(self, input_pack: FramePack) -> feat.FeatureVector:
        path = self.state.run_dir / "real_features.json"
        if path.exists():
            return feat.load_feature_vector(path)
        vector = extract_features(
            input_pack, self.backends.feature,
            examples=self.registry.feature_examples, taxonomy=self.taxonomy,
        )
        write_json_atomic(path, vector.to_dict())
        save_manifest(self.state)
        return vector

    def _run_iteration(
        self, index: int, input_pack: FramePack, previous: Optional[IterationRecord]
    ) -> IterationRecord:
        iter_dir = self.state.iter_dir(index)
        iter_dir.mkdir(parents=True, exist_ok=True)
        timings: dict[str, float] = {}

        record = self._ensure_script(index, iter_dir, input_pack, previous, timings)
        if record.script is None or record.validation_errors():
            return record

        if self._is_stalled(record, previous):
            self._reuse_previous(record, previous, iter_dir)
            return self._finish_gate(record, iter_dir, timings)

        assert record.script is not None
        started = time.monotonic()
        record.sim = self._ensure_sim(record.script, iter_dir)
        timings["simulate_s"] = round(time.monotonic() - started, 3)
        record.timings = timings
        if record.sim.status != OK:
            return record

        started = time.monotonic()
        record.sim_features = self._ensure_sim_features(record.sim, iter_dir)
        timings["features_s"] = round(time.monotonic() - started, 3)
        if record.sim_features is None:
            return record  # frame prep failed; recorded as simulation failure

        return self._finish_gate(record, iter_dir, timings)

    def _finish_gate(
        self, record: IterationRecord, iter_dir: Path, timings: dict[str, float]
    ) -> IterationRecord:
        assert self.state.real_features is not None and record.sim_features is not None
        report_path = iter_dir / "similarity.json"
        if report_path.exists():
            record.report = feat.SimilarityReport.from_dict(
                _read_json(report_path)
            )
        else:
            record.report = feat.similarity(
                self.state.real_features, record.sim_features,
                self.thresholds, self.taxonomy,
            )
            write_json_atomic(report_path, record.report.to_dict())
        if not record.report.passed and record.index < self.config.loop.max_iterations:
            feedback_path = iter_dir / "feedback.txt"
            if feedback_path.exists():
                record.feedback_out = feedback_path.read_text(encoding="utf-8")
            else:
                record.feedback_out = feat.synthesize_feedback(
                    list(record.report.violations), self.taxonomy
                )
                feedback_path.write_text(record.feedback_out, encoding="utf-8")
        record.timings = timings
        return record

    def _ensure_script(
        self, index: int, iter_dir: Path, input_pack: FramePack,
        previous: Optional[IterationRecord], timings: dict[str, float],
    ) -> IterationRecord:
        script_path = iter_dir / "script.scenic"
        diag_path = iter_dir / "diagnostics.jsonl"

        started = time.monotonic()
        if script_path.exists():
            text = script_path.read_text(encoding="utf-8")
        else:
            feedback = prior = None
            if previous is not None:
                feedback = previous.feedback_out
                prior = previous.script
            text = generate_script(
                input_pack, self.backends.script,
                examples=self.registry.script_examples,
                feedback=feedback, prior=prior,
            )
            script_path.write_text(text, encoding="utf-8")
            save_manifest(self.state)
        timings["generate_s"] = round(time.monotonic() - started, 3)

        script, diags = self._validate_text(text, diag_path)
        record = IterationRecord(
            index=index, script_text=text, script=script, validation=diags,
            timings=timings,
        )
        if script is not None and not record.validation_errors():
            return record

        if self.config.loop.repair_attempts < 1:
            return record
        # One automatic repair: feed the diagnostics back and regenerate once.
        repair_path = iter_dir / "script_repair.scenic"
        repair_diag_path = iter_dir / "diagnostics_repair.jsonl"
        if repair_path.exists():
            repair_text = repair_path.read_text(encoding="utf-8")
        else:
            messages = "; ".join(d.message for d in record.validation_errors())
            repair_feedback = f"{_VALIDATION_FEEDBACK_HEADER}: {messages}; fix only these issues"
            repair_text = generate_script(
                input_pack, self.backends.script,
                examples=self.registry.script_examples,
                feedback=repair_feedback, prior=text,
            )
            repair_path.write_text(repair_text, encoding="utf-8")
            save_manifest(self.state)
        script, diags = self._validate_text(repair_text, repair_diag_path)
        record.script_text = repair_text
        record.script = script
        record.validation = diags
        record.repair_used = True
        return record

    def _validate_text(
        self, text: str, diag_path: Path
    ) -> tuple[Optional[ScenicScript], list]:
        parsed = parse(text)
        if isinstance(parsed, list):
            diags = parsed
            script = None
        else:
            script = parsed
            diags = validate(parsed, self.catalog)
        if not diag_path.exists():
            diag_path.write_text(diagnostics_to_jsonl(diags), encoding="utf-8")
        return script, diags

    def _is_stalled(
        self, record: IterationRecord, previous: Optional[IterationRecord]
    ) -> bool:
        return (
            previous is not None
            and previous.script is not None
            and record.script is not None
            and previous.report is not None
            and previous.sim_features is not None
            and record.script.tree == previous.script.tree
        )

    def _reuse_previous(
        self, record: IterationRecord, previous: IterationRecord, iter_dir: Path
    ) -> None:
        # Unchanged tree: the gate result cannot change either (mock and
        # external runs pin one seed per run), so reuse the previous
        # iteration's artifacts instead of paying for the backend again.
        assert previous.sim is not None and previous.sim_features is not None
        record.reused_previous = True
        record.sim = previous.sim
        record.sim_features = previous.sim_features
        sim_dir = iter_dir / "sim"
        sim_dir.mkdir(parents=True, exist_ok=True)
        if not (sim_dir / "result.json").exists():
            write_json_atomic(sim_dir / "result.json", previous.sim.to_dict())
        if not (iter_dir / "sim_features.json").exists():
            write_json_atomic(iter_dir / "sim_features.json", previous.sim_features.to_dict())

    def _ensure_sim(self, script: ScenicScript, iter_dir: Path) -> SimResult:
        sim_dir = iter_dir / "sim"
        result_path = sim_dir / "result.json"
        if result_path.exists():
            return sim_result_from_dict(_read_json(result_path))
        request = SimRequest(
            script=script, seed=self.state.seed,
            max_sim_seconds=self.config.simulator.max_sim_seconds,
            record=sim_dir,
        )
        result = self.backends.simulator.run(request)
        write_json_atomic(result_path, result.to_dict())
        save_manifest(self.state)
        return result

    def _ensure_sim_features(
        self, sim: SimResult, iter_dir: Path
    ) -> Optional[feat.FeatureVector]:
        path = iter_dir / "sim_features.json"
        if path.exists():
            return feat.load_feature_vector(path)
        assert sim.video is not None
        frames_dir = iter_dir / "sim_frames"
        try:
            if (frames_dir / "manifest.json").exists():
                pack = read_frame_pack(frames_dir)
            else:
                n = min(self.config.frames.count, sim.video.frame_count)
                pack = build_frame_pack(
                    sim.video, n=n, max_dim=self.config.frames.max_dim,
                    tool=self.extractor, jpeg_quality=self.config.frames.jpeg_quality,
                )
                write_frame_pack(pack, frames_dir)
        except FrameError as exc:
            # The simulated video is unusable: record it as a simulation
            # failure rather than crashing the run.
            self.state.outcome = SIMULATION_FAILED
            self.state.error = f"sim video frame prep failed: {exc}"
            return None
        vector = extract_features(
            pack, self.backends.feature,
            examples=self.registry.feature_examples, taxonomy=self.taxonomy,
        )
        write_json_atomic(path, vector.to_dict())
        save_manifest(self.state)
        return vector

    # -- resume support ---------------------------------------------------------

    def _reload_iterations(self) -> None:
        """Rebuild IterationRecords from persisted artifacts (stops at the
        first iteration directory that does not exist)."""
        state = self.state
        state.iterations = []
        index = 0
        while True:
            index += 1
            iter_dir = state.iter_dir(index)
            if not (iter_dir / "script.scenic").exists():
                break
            state.iterations.append(self._load_iteration(index, iter_dir))

    def _load_iteration(self, index: int, iter_dir: Path) -> IterationRecord:
        repair_path = iter_dir / "script_repair.scenic"
        repair_used = repair_path.exists()
        text = _script_path(iter_dir).read_text(encoding="utf-8")
        diag_path = iter_dir / ("diagnostics_repair.jsonl" if repair_used else "diagnostics.jsonl")
        parsed = parse(text)
        script = parsed if isinstance(parsed, ScenicScript) else None
        if diag_path.exists():
            diags = diagnostics_from_jsonl(diag_path.read_text(encoding="utf-8"))
        else:
            # Killed between script and validation: re-validate now.
            if script is None:
                diags = parsed if isinstance(parsed, list) else []
            else:
                diags = validate(script, self.catalog)
            diag_path.write_text(diagnostics_to_jsonl(diags), encoding="utf-8")
        record = IterationRecord(
            index=index, script_text=text, script=script, validation=diags,
            repair_used=repair_used,
        )
        result_path = iter_dir / "sim" / "result.json"
        if result_path.exists():
            record.sim = sim_result_from_dict(_read_json(result_path))
        features_path = iter_dir / "sim_features.json"
        if features_path.exists():
            record.sim_features = feat.load_feature_vector(features_path)
        report_path = iter_dir / "similarity.json"
        if report_path.exists():
            record.report = feat.SimilarityReport.from_dict(_read_json(report_path))
        feedback_path = iter_dir / "feedback.txt"
        if feedback_path.exists():
            record.feedback_out = feedback_path.read_text(encoding="utf-8")
        return record


def _read_json(path: Path) -> dict:
    import json

    return json.loads(path.read_text(encoding="utf-8"))
