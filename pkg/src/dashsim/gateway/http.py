"""Live completion backend speaking the chat-completions wire protocol.

One POST per completion. Retryable failures (429, 5xx and other transport
trouble, deadline overruns) are retried with exponential backoff plus jitter
up to the configured cap; the request body itself is byte-stable across
attempts. A process-wide in-flight cap bounds concurrency.
"""

from __future__ import annotations

import json
import logging
import os
import random
import threading
import time
from dataclasses import dataclass, field

import requests

from .errors import (
    DEADLINE, MALFORMED_RESPONSE, RATE_LIMITED, TRANSPORT, GatewayError,
)
from .prompts import BackendCapabilities, PromptPayload, assemble_request_body

logger = logging.getLogger("dashsim.gateway")


@dataclass(frozen=True)
class HttpEndpointConfig:
    url: str
    model: str
    credential_env: str
    temperature: float = 0.0
    retry_cap: int = 3
    deadline_s: float = 60.0
    backoff_base_s: float = 0.5
    max_in_flight: int = 4
    extra_headers: dict = field(default_factory=dict)


class HttpBackend:
    """CompletionBackend over HTTP. The credential is read from the
    configured environment variable at construction time and never persisted."""

    capabilities = BackendCapabilities()

    def __init__(self, cfg: HttpEndpointConfig, session: requests.Session | None = None):
        api_key = os.environ.get(cfg.credential_env, "")
        if not api_key:
            raise ValueError(
                f"credential environment variable {cfg.credential_env!r} is not set"
            )
        self.cfg = cfg
        self._headers = {
            "Authorization": f"Bearer {api_key}",
            "Content-Type": "application/json",
            **cfg.extra_headers,
        }
        self._session = session or requests.Session()
        self._gate = threading.BoundedSemaphore(cfg.max_in_flight)
        self._rng = random.Random()

    def complete(self, payload: PromptPayload) -> str:
        body = assemble_request_body(payload, self.cfg.model, self.cfg.temperature)
        last_error: GatewayError | None = None
        attempts = 0
        while attempts <= self.cfg.retry_cap:
            attempts += 1
            try:
                return self._attempt(body)
            except GatewayError as exc:
                exc.attempts = attempts
                if not exc.retryable:
                    raise
                last_error = exc
                if attempts <= self.cfg.retry_cap:
                    delay = self._backoff(attempts)
                    logger.warning(
                        "gateway %s (attempt %d/%d), retrying in %.2fs: %s",
                        exc.kind, attempts, self.cfg.retry_cap + 1, delay, exc.detail,
                    )
                    time.sleep(delay)
        assert last_error is not None
        raise last_error

    def _attempt(self, body: bytes) -> str:
        with self._gate:
            try:
                response = self._session.post(
                    self.cfg.url, data=body, headers=self._headers,
                    timeout=self.cfg.deadline_s,
                )
            except requests.Timeout as exc:
                raise GatewayError(DEADLINE, f"no response within {self.cfg.deadline_s}s") from exc
            except requests.RequestException as exc:
                raise GatewayError(TRANSPORT, str(exc)) from exc

        if response.status_code == 429:
            raise GatewayError(RATE_LIMITED, "rate limited (429)")
        if response.status_code >= 500:
            raise GatewayError(TRANSPORT, f"server error ({response.status_code})")
        if response.status_code != 200:
            raise GatewayError(TRANSPORT, f"unexpected status {response.status_code}")

        try:
            data = response.json()
            content = data["choices"][0]["message"]["content"]
        except (json.JSONDecodeError, ValueError, KeyError, IndexError, TypeError) as exc:
            raise GatewayError(
                MALFORMED_RESPONSE, f"cannot read completion content: {exc}"
            ) from exc
        if not isinstance(content, str) or not content:
            raise GatewayError(MALFORMED_RESPONSE, "response carried no content")
        return content

    def _backoff(self, attempt: int) -> float:
        base = self.cfg.backoff_base_s * (2 ** (attempt - 1))
        return base * (0.5 + self._rng.random() / 2)
