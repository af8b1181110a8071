"""Refinement engine: the generate/simulate/compare/feedback control loop
with persisted, resumable run state and aggregate reporting."""

from .loop import (
    Backends, build_backends, resume, run_batch, run_pipeline, run_variations,
)
from .report import AggregateReport, ReportError, report
from .state import (
    ACCEPTED, BUDGET_EXHAUSTED, GATEWAY_FAILED, SIMULATION_FAILED,
    TERMINAL_OUTCOMES, VALIDATION_FAILED, IterationRecord, RunState,
    StateError, load_manifest,
)

__all__ = [
    "ACCEPTED", "AggregateReport", "BUDGET_EXHAUSTED", "Backends",
    "GATEWAY_FAILED", "IterationRecord", "ReportError", "RunState",
    "SIMULATION_FAILED", "StateError", "TERMINAL_OUTCOMES",
    "VALIDATION_FAILED", "build_backends", "load_manifest", "report",
    "resume", "run_batch", "run_pipeline", "run_variations",
]
