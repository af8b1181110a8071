"""Model gateway: few-shot prompt assembly plus pluggable completion
backends (live HTTP or deterministic mocks) for the two roles — video to
scenario script, and video to feature probabilities."""

from __future__ import annotations

from typing import Optional, Protocol, Sequence, Union

from ..dialect import ScenicScript
from ..features import FeatureTaxonomy, FeatureVector, default_taxonomy
from ..frames import FramePack
from .errors import GatewayError
from .fixtures import FixtureRegistry, load_fixtures, load_scripts_by_label
from .http import HttpBackend, HttpEndpointConfig
from .mock import (
    MockFeatureBackend, MockScriptBackend, StaticTextBackend,
    apply_feedback_repairs, fixture_label,
)
from .prompts import (
    FEATURE_ROLE, SCRIPT_ROLE, SCRIPT_SYSTEM_TEXT, BackendCapabilities,
    FewShotExample, PromptPayload, assemble_messages, assemble_request_body,
    feature_system_text, parse_feature_response, strip_fences,
)


class CompletionBackend(Protocol):
    """Anything that turns an assembled prompt into raw completion text.

    `complete` is total over valid payloads: it returns text or raises a
    GatewayError; live implementations bound their own deadline."""

    capabilities: BackendCapabilities

    def complete(self, payload: PromptPayload) -> str: ...


def generate_script(
    frames: FramePack,
    backend: CompletionBackend,
    examples: Sequence[FewShotExample] = (),
    feedback: Optional[str] = None,
    prior: Union[ScenicScript, str, None] = None,
    system_text: str = SCRIPT_SYSTEM_TEXT,
) -> str:
    """Candidate script text for a video (markdown fences stripped; parsing
    and validation are the caller's job). Refinement turns pass the feedback
    plus the prior script being revised; the prior may be raw text when it
    never parsed."""
    if isinstance(prior, ScenicScript):
        prior_text: Optional[str] = prior.source
    else:
        prior_text = prior
    payload = PromptPayload(
        role=SCRIPT_ROLE,
        system_text=system_text,
        examples=tuple(examples),
        query_frames=frames,
        feedback=feedback,
        prior_script=prior_text,
    )
    _check_capabilities(payload, backend)
    return strip_fences(backend.complete(payload))


def extract_features(
    frames: FramePack,
    backend: CompletionBackend,
    examples: Sequence[FewShotExample] = (),
    taxonomy: Optional[FeatureTaxonomy] = None,
) -> FeatureVector:
    """Feature probabilities for a video, parsed leniently from the
    backend's JSON answer (all ten keys required)."""
    taxonomy = taxonomy or default_taxonomy()
    payload = PromptPayload(
        role=FEATURE_ROLE,
        system_text=feature_system_text(taxonomy),
        examples=tuple(examples),
        query_frames=frames,
    )
    _check_capabilities(payload, backend)
    return parse_feature_response(backend.complete(payload), taxonomy)


def _check_capabilities(payload: PromptPayload, backend: CompletionBackend) -> None:
    caps = getattr(backend, "capabilities", BackendCapabilities())
    if len(payload.examples) > caps.max_examples:
        raise ValueError(
            f"{len(payload.examples)} examples exceed backend cap {caps.max_examples}"
        )
    images = len(payload.query_frames.images) + sum(
        len(ex.frames.images) for ex in payload.examples
    )
    if images > caps.max_images:
        raise ValueError(f"{images} images exceed backend cap {caps.max_images}")


__all__ = [
    "BackendCapabilities", "CompletionBackend", "FEATURE_ROLE",
    "FewShotExample", "FixtureRegistry", "GatewayError", "HttpBackend",
    "HttpEndpointConfig", "MockFeatureBackend", "MockScriptBackend",
    "PromptPayload", "SCRIPT_ROLE", "SCRIPT_SYSTEM_TEXT", "StaticTextBackend",
    "apply_feedback_repairs", "assemble_messages", "assemble_request_body",
    "extract_features", "feature_system_text", "fixture_label",
    "generate_script", "load_fixtures", "load_scripts_by_label",
    "parse_feature_response", "strip_fences",
]
