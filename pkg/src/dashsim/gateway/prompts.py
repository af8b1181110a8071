"""Few-shot prompt assembly for the two model roles.

The script role sees paired (frames, scenario script) examples and returns
script text; the feature role sees paired (frames, feature-probability JSON)
examples and returns a JSON object keyed by the ten taxonomy ids. Assembly is
pure and deterministic: equal inputs produce a byte-identical request body.
"""

from __future__ import annotations

import base64
import json
import logging
import re
from dataclasses import dataclass
from json import JSONDecoder
from typing import Optional, Union

from ..features import FeatureTaxonomy, FeatureVector, default_taxonomy
from ..frames import FramePack
from .errors import MALFORMED_RESPONSE, GatewayError

logger = logging.getLogger("dashsim.gateway")

SCRIPT_ROLE = "script"
FEATURE_ROLE = "feature"

SCRIPT_SYSTEM_TEXT = (
    "You convert dashcam driving videos into scenario scripts for a driving "
    "simulator. The video is given as frames sampled in order. Answer with "
    "the script only: parameters (weather, map), a model import, behavior "
    "definitions, object declarations anchored on an `ego` vehicle, and "
    "require/terminate conditions, in the style of the example pairs. Capture "
    "the core driving behaviors; weather and road type may vary when unclear."
)

FEATURE_SYSTEM_TEXT_TEMPLATE = (
    "You rate driving videos against ten predefined categories. The video is "
    "given as frames sampled in order. Answer with a single JSON object whose "
    "keys are exactly: {keys}. Each value is a probability from 0 to 1 that "
    "the category is present; for sunny_rainy and urban_highway, 1 means the "
    "first-named label (sunny, urban) and 0 the second."
)

# Probabilities slightly outside [0, 1] are clamped; beyond this slack the
# response is rejected.
CLAMP_SLACK = 0.05


def feature_system_text(taxonomy: Optional[FeatureTaxonomy] = None) -> str:
    taxonomy = taxonomy or default_taxonomy()
    return FEATURE_SYSTEM_TEXT_TEMPLATE.format(keys=", ".join(taxonomy.ids))


@dataclass(frozen=True)
class FewShotExample:
    frames: FramePack
    payload: Union[str, FeatureVector]  # script text or feature vector
    label: str


@dataclass(frozen=True)
class BackendCapabilities:
    max_examples: int = 32
    max_images: int = 512


@dataclass(frozen=True)
class PromptPayload:
    role: str  # SCRIPT_ROLE or FEATURE_ROLE
    system_text: str
    examples: tuple[FewShotExample, ...]
    query_frames: FramePack
    feedback: Optional[str] = None
    prior_script: Optional[str] = None

    def __post_init__(self) -> None:
        if self.role not in (SCRIPT_ROLE, FEATURE_ROLE):
            raise ValueError(f"unknown prompt role {self.role!r}")
        if self.feedback is not None and self.prior_script is None:
            raise ValueError("refinement feedback requires the prior script")


def _image_parts(pack: FramePack) -> list[dict]:
    parts = []
    for fmt, payload in pack.images:
        encoded = base64.b64encode(payload).decode("ascii")
        parts.append({
            "type": "image_url",
            "image_url": {"url": f"data:image/{fmt};base64,{encoded}"},
        })
    return parts


def _example_answer(example: FewShotExample,
                    taxonomy: FeatureTaxonomy) -> str:
    if isinstance(example.payload, FeatureVector):
        mapping = dict(zip(taxonomy.ids, example.payload.values))
        return json.dumps(mapping)
    return example.payload


def assemble_messages(payload: PromptPayload,
                      taxonomy: Optional[FeatureTaxonomy] = None) -> list[dict]:
    """Chat messages: system, then each example as a user(images) /
    assistant(answer) pair in registration order, then the query."""
    taxonomy = taxonomy or default_taxonomy()
    messages: list[dict] = [{"role": "system", "content": payload.system_text}]
    for example in payload.examples:
        messages.append({"role": "user", "content": _image_parts(example.frames)})
        messages.append({"role": "assistant", "content": _example_answer(example, taxonomy)})

    query_content: list[dict] = list(_image_parts(payload.query_frames))
    if payload.feedback is not None:
        query_content.append({
            "type": "text",
            "text": (
                "Previous script:\n```\n" + (payload.prior_script or "") + "```\n\n"
                "Feedback:\n" + payload.feedback + "\n\n"
                "Revise the previous script to address the feedback and answer "
                "with the full revised script."
            ),
        })
    elif payload.role == SCRIPT_ROLE:
        query_content.append({
            "type": "text",
            "text": "Write the scenario script for this video.",
        })
    else:
        query_content.append({
            "type": "text",
            "text": "Rate this video: answer with the JSON object only.",
        })
    messages.append({"role": "user", "content": query_content})
    return messages


def assemble_request_body(payload: PromptPayload, model: str, temperature: float,
                          taxonomy: Optional[FeatureTaxonomy] = None) -> bytes:
    body = {
        "model": model,
        "messages": assemble_messages(payload, taxonomy),
        "temperature": temperature,
    }
    return json.dumps(body, separators=(",", ":"), ensure_ascii=True).encode("utf-8")


_FENCE_RE = re.compile(r"```[^\n]*\n(.*?)```", re.DOTALL)


def strip_fences(text: str) -> str:
    """Candidate script text from a completion: the first fenced code block
    if present, otherwise the whole response, trimmed."""
    match = _FENCE_RE.search(text)
    if match:
        return match.group(1).strip() + "\n"
    return text.strip() + "\n"


def parse_feature_response(text: str,
                           taxonomy: Optional[FeatureTaxonomy] = None) -> FeatureVector:
    """Lenient feature parse: first JSON object found in the text, all ten
    taxonomy keys required, extra keys ignored with a warning, values clamped
    to [0, 1] when within CLAMP_SLACK outside."""
    taxonomy = taxonomy or default_taxonomy()
    data = _first_json_object(text)
    if data is None:
        raise GatewayError(MALFORMED_RESPONSE, "no JSON object found in response")

    missing = [fid for fid in taxonomy.ids if fid not in data]
    if missing:
        raise GatewayError(MALFORMED_RESPONSE, f"feature response missing keys: {missing}")
    extra = sorted(set(data) - set(taxonomy.ids))
    if extra:
        logger.warning("feature response has extra keys, ignoring: %s", extra)

    values: list[float] = []
    for fid in taxonomy.ids:
        try:
            value = float(data[fid])
        except (TypeError, ValueError) as exc:
            raise GatewayError(
                MALFORMED_RESPONSE, f"feature {fid!r} is not a number: {data[fid]!r}"
            ) from exc
        if value < 0.0 or value > 1.0:
            if -CLAMP_SLACK <= value <= 1.0 + CLAMP_SLACK:
                clamped = min(1.0, max(0.0, value))
                logger.warning("clamping feature %s from %s to %s", fid, value, clamped)
                value = clamped
            else:
                raise GatewayError(
                    MALFORMED_RESPONSE, f"feature {fid!r} out of range: {value}"
                )
        values.append(value)
    return FeatureVector(values=tuple(values))


def _first_json_object(text: str) -> Optional[dict]:
    decoder = JSONDecoder()
    for start, ch in enumerate(text):
        if ch != "{":
            continue
        try:
            parsed, _ = decoder.raw_decode(text[start:])
        except json.JSONDecodeError:
            continue
        if isinstance(parsed, dict):
            return parsed
    return None
