"""Remote stages of the pipeline: abstractive summarizer and completion polisher.

Wire formats (JSON over HTTP POST)::

    summarizer  -> {"id": str, "text": str,
                    "params": {"length_penalty": float, "num_beams": int,
                               "max_output_tokens": int}}
                <- {"summary": str}
    completion  -> {"engine": str, "prompt": str, "temperature": float, "max_tokens": int}
                <- {"text": str}

A bearer token, when configured, is read from the environment variable
named by ``BackendSpec.auth_env`` at call time and never stored.
"""

from __future__ import annotations

import json
import logging
import os
import random
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import httpx

from .errors import BackendAuthError, BackendError, ConfigError
from .text import Document

log = logging.getLogger(__name__)

KINDS = ("identity", "http_summarizer", "completion_polisher")
REMOTE_KINDS = ("http_summarizer", "completion_polisher")
DEFAULT_TOKEN_ENV = "LONGSUM_API_TOKEN"
PROMPT_PREFIX = "Original "
PROMPT_SUFFIX = ", Polished Sentence:"

INPUT_LIMIT_PRESETS = {"bigbird": 4096, "led": 8192}


@dataclass(frozen=True)
class GenerationParams:
    length_penalty: float = 0.8
    num_beams: int = 5
    max_output_tokens: int = 256
    engine: Optional[str] = "curie"
    temperature: Optional[float] = None

    def __post_init__(self):
        if self.num_beams < 1:
            raise ConfigError("num_beams must be >= 1")
        if self.max_output_tokens < 1:
            raise ConfigError("max_output_tokens must be >= 1")


@dataclass(frozen=True)
class InputLimits:
    max_input_tokens: int

    def __post_init__(self):
        if self.max_input_tokens < 1:
            raise ConfigError("max_input_tokens must be >= 1")

    @classmethod
    def preset(cls, name: str) -> "InputLimits":
        try:
            return cls(INPUT_LIMIT_PRESETS[name.lower()])
        except KeyError:
            raise ConfigError(f"unknown input-limit preset {name!r}") from None


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 3
    base_backoff: float = 1.0
    request_timeout: float = 60.0

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ConfigError("max_attempts must be >= 1")
        if self.base_backoff < 0 or self.request_timeout <= 0:
            raise ConfigError("backoff must be >= 0 and timeout > 0")

    def delay(self, attempt: int) -> float:
        """Jittered exponential backoff before retry number ``attempt`` (1-based)."""
        return self.base_backoff * 2 ** (attempt - 1) * random.uniform(0.5, 1.0)


@dataclass(frozen=True)
class BackendSpec:
    kind: str = "identity"
    endpoint: Optional[str] = None
    generation: GenerationParams = field(default_factory=GenerationParams)
    limits: Optional[InputLimits] = None
    auth_env: Optional[str] = None
    retry: RetryPolicy = field(default_factory=RetryPolicy)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown backend kind {self.kind!r}; expected one of {KINDS}")
        if (self.kind in REMOTE_KINDS) != (self.endpoint is not None):
            raise ConfigError(f"backend kind {self.kind!r} requires an endpoint iff it is remote")

    @property
    def remote(self) -> bool:
        return self.kind in REMOTE_KINDS

    def token(self) -> Optional[str]:
        env = self.auth_env or (DEFAULT_TOKEN_ENV if self.kind == "completion_polisher" else None)
        return os.environ.get(env) if env else None

    def public_dict(self) -> dict:
        """Serializable description; holds the env var *name*, never the token."""
        g = self.generation
        return {
            "kind": self.kind,
            "endpoint": self.endpoint,
            "generation": {
                "length_penalty": g.length_penalty,
                "num_beams": g.num_beams,
                "max_output_tokens": g.max_output_tokens,
                "engine": g.engine,
                "temperature": g.temperature,
            },
            "limits": None if self.limits is None else {"max_input_tokens": self.limits.max_input_tokens},
            "auth_env": self.auth_env,
            "retry": {
                "max_attempts": self.retry.max_attempts,
                "base_backoff": self.retry.base_backoff,
                "request_timeout": self.retry.request_timeout,
            },
        }


class _Limiter:
    """Process-wide cap on in-flight remote requests."""

    def __init__(self, size: int = 4):
        self.resize(size)

    def resize(self, size: int) -> None:
        if size < 1:
            raise ValueError("limiter size must be >= 1")
        self.size = size
        self._sem = threading.BoundedSemaphore(size)

    def __enter__(self):
        self._sem.acquire()
        return self

    def __exit__(self, *exc):
        self._sem.release()


LIMITER = _Limiter(4)


def set_max_in_flight(n: int) -> None:
    LIMITER.resize(n)


_shared_client: Optional[httpx.Client] = None
_client_lock = threading.Lock()


def shared_client() -> httpx.Client:
    global _shared_client
    with _client_lock:
        if _shared_client is None:
            _shared_client = httpx.Client()
        return _shared_client


def _retryable(status: int) -> bool:
    return status == 429 or status >= 500


def post_json(
    spec: BackendSpec,
    body: dict,
    *,
    doc_id=None,
    client: Optional[httpx.Client] = None,
    sleep: Callable[[float], None] = time.sleep,
) -> tuple[object, int]:
    """POST ``body`` to ``spec.endpoint`` with retries.

    Returns the decoded JSON body and the number of attempts used.

    Transport failures, 5xx and 429 responses are retried with backoff;
    other non-2xx statuses fail immediately.
    """
    client = client or shared_client()
    headers = {"Content-Type": "application/json"}
    token = spec.token()
    if token:
        headers["Authorization"] = f"Bearer {token}"
    payload = json.dumps(body, ensure_ascii=False).encode("utf-8")
    policy = spec.retry
    last_status = None
    last_exc = None
    for attempt in range(1, policy.max_attempts + 1):
        retry_after = None
        try:
            with LIMITER:
                resp = client.post(
                    spec.endpoint, content=payload, headers=headers, timeout=policy.request_timeout
                )
        except httpx.TransportError as exc:
            last_exc, last_status = exc, None
            log.warning("backend transport error (attempt %d): %s", attempt, exc)
        else:
            last_status = resp.status_code
            if 200 <= resp.status_code < 300:
                try:
                    return resp.json(), attempt
                except ValueError:
                    raise BackendError(
                        "response is not valid JSON", doc_id=doc_id, attempts=attempt,
                        status=resp.status_code,
                    ) from None
            if not _retryable(resp.status_code):
                raise BackendError(
                    f"backend returned HTTP {resp.status_code}", doc_id=doc_id,
                    attempts=attempt, status=resp.status_code,
                )
            log.warning("backend HTTP %d (attempt %d)", resp.status_code, attempt)
            ra = resp.headers.get("Retry-After")
            if ra is not None:
                try:
                    retry_after = float(ra)
                except ValueError:
                    pass
        if attempt < policy.max_attempts:
            sleep(retry_after if retry_after is not None else policy.delay(attempt))
    if last_status is not None:
        msg = f"backend returned HTTP {last_status}"
    else:
        msg = f"backend unreachable: {last_exc}"
    raise BackendError(msg, doc_id=doc_id, attempts=policy.max_attempts, status=last_status)


def truncate_to_limit(doc: Document, limits: Optional[InputLimits]) -> Document:
    """Keep leading whole sentences while the running token count fits.

    The first sentence is always kept, even when it alone exceeds the limit.
    """
    if limits is None or not doc.sentences:
        return doc
    total = 0
    keep = 0
    for i, s in enumerate(doc.sentences):
        total += len(s.tokens)
        if total > limits.max_input_tokens and i > 0:
            break
        keep = i + 1
    if keep == len(doc.sentences):
        return doc
    src = doc.source_indices
    return Document(
        doc.id,
        doc.sentences[:keep],
        doc.reference,
        None if src is None else src[:keep],
    )


def summarize(
    spec: BackendSpec,
    doc: Document,
    *,
    client: Optional[httpx.Client] = None,
    sleep: Callable[[float], None] = time.sleep,
) -> str:
    if spec.kind == "identity":
        return " ".join(doc.texts)
    if spec.kind != "http_summarizer":
        raise ConfigError(f"backend kind {spec.kind!r} cannot summarize")
    g = spec.generation
    body = {
        "id": doc.id,
        "text": " ".join(doc.texts),
        "params": {
            "length_penalty": g.length_penalty,
            "num_beams": g.num_beams,
            "max_output_tokens": g.max_output_tokens,
        },
    }
    data, attempts = post_json(spec, body, doc_id=doc.id, client=client, sleep=sleep)
    summary = data.get("summary") if isinstance(data, dict) else None
    if not isinstance(summary, str):
        raise BackendError(
            "response lacks a string 'summary' field", doc_id=doc.id, attempts=attempts
        )
    return summary


@dataclass(frozen=True)
class PolishResult:
    text: str
    fallback: bool = False


def build_prompt(summary: str) -> str:
    return PROMPT_PREFIX + summary + PROMPT_SUFFIX


def polish(
    spec: BackendSpec,
    summary: str,
    *,
    doc_id=None,
    client: Optional[httpx.Client] = None,
    sleep: Callable[[float], None] = time.sleep,
) -> PolishResult:
    """Ask a completion endpoint to rewrite ``summary``.

    An empty completion falls back to the input with ``fallback=True``.
    """
    if spec.kind != "completion_polisher":
        raise ConfigError(f"backend kind {spec.kind!r} cannot polish")
    if not summary or not summary.strip():
        raise ValueError("cannot polish an empty summary")
    if not spec.token():
        env = spec.auth_env or DEFAULT_TOKEN_ENV
        raise BackendAuthError(f"no bearer token in ${env}", doc_id=doc_id, attempts=0)
    g = spec.generation
    body = {
        "engine": g.engine or "curie",
        "prompt": build_prompt(summary),
        "temperature": 0.0 if g.temperature is None else g.temperature,
        "max_tokens": g.max_output_tokens,
    }
    data, attempts = post_json(spec, body, doc_id=doc_id, client=client, sleep=sleep)
    text = data.get("text") if isinstance(data, dict) else None
    if not isinstance(text, str):
        raise BackendError("response lacks a string 'text' field", doc_id=doc_id, attempts=attempts)
    text = text.strip()
    if not text:
        return PolishResult(summary, fallback=True)
    return PolishResult(text)
