"""Typed gateway failures."""

from __future__ import annotations

TRANSPORT = "transport"
RATE_LIMITED = "rate_limited"
DEADLINE = "deadline"
MALFORMED_RESPONSE = "malformed_response"
REFUSAL = "refusal"

_KINDS = (TRANSPORT, RATE_LIMITED, DEADLINE, MALFORMED_RESPONSE, REFUSAL)

# Transport-level trouble can heal on retry; a malformed or refused answer
# will not.
_DEFAULT_RETRYABLE = {
    TRANSPORT: True,
    RATE_LIMITED: True,
    DEADLINE: True,
    MALFORMED_RESPONSE: False,
    REFUSAL: False,
}


class GatewayError(Exception):
    def __init__(self, kind: str, detail: str, retryable: bool | None = None,
                 attempts: int = 1):
        if kind not in _KINDS:
            raise ValueError(f"unknown gateway error kind {kind!r}")
        super().__init__(f"{kind}: {detail}")
        self.kind = kind
        self.detail = detail
        self.retryable = _DEFAULT_RETRYABLE[kind] if retryable is None else retryable
        self.attempts = attempts
