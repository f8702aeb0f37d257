"""Gateway to chat-completion and embedding endpoints.

Every request is content-addressed: the cache key is a stable hash of all
request fields, and responses are stored one JSON file per key. The same
directory format doubles as the replay store, so CI runs entirely from
committed fixtures with zero network access.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import tempfile
import threading
import time
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import httpx

from .errors import ConfigurationError, ParseError, ReplayMissError, TransportError

log = logging.getLogger(__name__)

_RETRYABLE_STATUS = {408, 409, 429, 500, 502, 503, 504}


@dataclass(frozen=True)
class Message:
    role: str
    content: str

    def to_dict(self) -> dict:
        return {"role": self.role, "content": self.content}


@dataclass(frozen=True)
class PromptRequest:
    """A fully rendered chat-completion call, hashable by content."""

    model: str
    messages: tuple[Message, ...]
    temperature: float = 0.0
    frequency_penalty: float = 0.0
    max_tokens: int = 1024

    def __post_init__(self):
        if not self.messages:
            raise ConfigurationError("a prompt request needs at least one message")
        if self.temperature < 0:
            raise ConfigurationError("temperature must be >= 0")

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "messages": [m.to_dict() for m in self.messages],
            "temperature": self.temperature,
            "frequency_penalty": self.frequency_penalty,
            "max_tokens": self.max_tokens,
        }

    @classmethod
    def from_dict(cls, obj: Mapping) -> "PromptRequest":
        return cls(
            model=obj["model"],
            messages=tuple(Message(m["role"], m["content"]) for m in obj["messages"]),
            temperature=float(obj.get("temperature", 0.0)),
            frequency_penalty=float(obj.get("frequency_penalty", 0.0)),
            max_tokens=int(obj.get("max_tokens", 1024)),
        )

    def cache_key(self) -> str:
        canonical = json.dumps(
            {"kind": "completion", **self.to_dict()},
            sort_keys=True,
            separators=(",", ":"),
            ensure_ascii=False,
        )
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class PromptResponse:
    text: str
    cached: bool = False
    usage: Mapping[str, int] = field(default_factory=dict)


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]
    provider: str

    def __len__(self) -> int:
        return len(self.values)


def embedding_key(model: str, text: str) -> str:
    canonical = json.dumps(
        {"kind": "embedding", "model": model, "text": text},
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class GatewayConfig:
    base_url: str | None = None
    api_key: str | None = None
    embedding_model: str = "text-embedding-3-small"
    max_retries: int = 3
    backoff_base: float = 0.5
    max_concurrency: int = 4
    timeout: float = 60.0

    @classmethod
    def from_file(cls, path: str | Path | None = None) -> "GatewayConfig":
        """Load config from a JSON file, then apply environment overrides
        (INQUEST_BASE_URL, INQUEST_API_KEY, INQUEST_EMBEDDING_MODEL)."""
        obj: dict = {}
        if path is not None:
            with Path(path).open("r", encoding="utf-8") as fh:
                obj = json.load(fh)
        base_url = os.environ.get("INQUEST_BASE_URL", obj.get("base_url"))
        api_key = os.environ.get("INQUEST_API_KEY", obj.get("api_key"))
        embedding_model = os.environ.get(
            "INQUEST_EMBEDDING_MODEL", obj.get("embedding_model", cls.embedding_model)
        )
        return cls(
            base_url=base_url,
            api_key=api_key,
            embedding_model=embedding_model,
            max_retries=int(obj.get("max_retries", cls.max_retries)),
            backoff_base=float(obj.get("backoff_base", cls.backoff_base)),
            max_concurrency=int(obj.get("max_concurrency", cls.max_concurrency)),
            timeout=float(obj.get("timeout", cls.timeout)),
        )


class LLMGateway:
    """Cached, replayable client for OpenAI-compatible endpoints.

    Modes: "online" reads the cache and falls through to HTTP on a miss;
    "replay" never touches the network and raises ReplayMissError instead.
    With no endpoint configured the gateway defaults to replay.
    """

    def __init__(
        self,
        config: GatewayConfig | None = None,
        cache_dir: str | Path | None = None,
        mode: str = "auto",
    ):
        self.config = config or GatewayConfig()
        if cache_dir is None:
            raise ConfigurationError("cache_dir is required (cache doubles as the replay store)")
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        if mode == "auto":
            mode = "online" if self.config.base_url else "replay"
        if mode not in ("online", "replay"):
            raise ConfigurationError(f"unknown gateway mode {mode!r}")
        if mode == "online" and not self.config.base_url:
            raise ConfigurationError("online mode requires a configured base_url")
        self.mode = mode
        self._inflight = threading.BoundedSemaphore(self.config.max_concurrency)
        self._locks: dict[str, threading.Lock] = defaultdict(threading.Lock)
        self._locks_guard = threading.Lock()
        self._dims: dict[str, int] = {}
        self._dims_lock = threading.Lock()

    # -- cache plumbing ----------------------------------------------------

    def _path(self, key: str) -> Path:
        return self.cache_dir / f"{key}.json"

    def _read(self, key: str) -> dict | None:
        path = self._path(key)
        if not path.exists():
            return None
        with path.open("r", encoding="utf-8") as fh:
            return json.load(fh)

    def _write(self, key: str, record: dict) -> None:
        with self._locks_guard:
            lock = self._locks[key]
        with lock:
            fd, tmp = tempfile.mkstemp(dir=self.cache_dir, suffix=".tmp")
            try:
                with os.fdopen(fd, "w", encoding="utf-8") as fh:
                    json.dump(record, fh, ensure_ascii=False, indent=2)
                os.replace(tmp, self._path(key))
            finally:
                if os.path.exists(tmp):
                    os.unlink(tmp)

    # -- HTTP --------------------------------------------------------------

    def _post(self, route: str, payload: dict) -> dict:
        url = self.config.base_url.rstrip("/") + route
        headers = {"Content-Type": "application/json"}
        if self.config.api_key:
            headers["Authorization"] = f"Bearer {self.config.api_key}"
        last_error: Exception | None = None
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                delay = self.config.backoff_base * (2 ** (attempt - 1))
                log.warning("retrying %s in %.1fs (attempt %d)", route, delay, attempt + 1)
                time.sleep(delay)
            try:
                with self._inflight:
                    resp = httpx.post(
                        url, json=payload, headers=headers, timeout=self.config.timeout
                    )
                if resp.status_code in _RETRYABLE_STATUS:
                    last_error = TransportError(f"{route} returned {resp.status_code}")
                    continue
                resp.raise_for_status()
                return resp.json()
            except httpx.TransportError as exc:
                last_error = exc
            except httpx.HTTPStatusError as exc:
                raise TransportError(f"{route} failed: {exc}") from exc
        raise TransportError(
            f"{route} failed after {self.config.max_retries + 1} attempts: {last_error}"
        )

    # -- public surface ----------------------------------------------------

    def complete(self, request: PromptRequest) -> PromptResponse:
        key = request.cache_key()
        record = self._read(key)
        if record is not None:
            resp = record["response"]
            return PromptResponse(text=resp["text"], cached=True, usage=resp.get("usage", {}))
        if self.mode == "replay":
            raise ReplayMissError(key)

        body = self._post("/chat/completions", request.to_dict())
        try:
            text = body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"malformed completion response: {body!r}") from exc
        usage = body.get("usage", {}) or {}
        self._write(
            key,
            {
                "kind": "completion",
                "key": key,
                "request": request.to_dict(),
                "response": {"text": text, "usage": usage},
            },
        )
        return PromptResponse(text=text, cached=False, usage=usage)

    def embed(self, text: str, model: str | None = None) -> EmbeddingVector:
        if not text.strip():
            raise ConfigurationError("cannot embed empty text")
        provider = model or self.config.embedding_model
        key = embedding_key(provider, text)
        record = self._read(key)
        if record is not None:
            values = tuple(float(v) for v in record["response"]["values"])
            return self._checked(EmbeddingVector(values=values, provider=provider))
        if self.mode == "replay":
            raise ReplayMissError(key)

        body = self._post("/embeddings", {"model": provider, "input": text})
        try:
            values = tuple(float(v) for v in body["data"][0]["embedding"])
        except (KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"malformed embedding response: {body!r}") from exc
        self._write(
            key,
            {
                "kind": "embedding",
                "key": key,
                "request": {"model": provider, "text": text},
                "response": {"values": list(values)},
            },
        )
        return self._checked(EmbeddingVector(values=values, provider=provider))

    def _checked(self, vector: EmbeddingVector) -> EmbeddingVector:
        with self._dims_lock:
            seen = self._dims.get(vector.provider)
            if seen is None:
                self._dims[vector.provider] = len(vector)
            elif seen != len(vector):
                raise ConfigurationError(
                    f"embedding dimension changed for provider {vector.provider!r}: "
                    f"{seen} != {len(vector)}"
                )
        return vector


# --------------------------------------------------------------------------
# Fixture recording (used by tests and the fixture-builder script)
# --------------------------------------------------------------------------


def record_completion(cache_dir: str | Path, request: PromptRequest, text: str,
                      usage: Mapping[str, int] | None = None) -> str:
    """Write a canned completion into a replay store; returns the cache key."""
    key = request.cache_key()
    record = {
        "kind": "completion",
        "key": key,
        "request": request.to_dict(),
        "response": {"text": text, "usage": dict(usage or {})},
    }
    path = Path(cache_dir)
    path.mkdir(parents=True, exist_ok=True)
    with (path / f"{key}.json").open("w", encoding="utf-8") as fh:
        json.dump(record, fh, ensure_ascii=False, indent=2)
    return key


def record_embedding(cache_dir: str | Path, model: str, text: str,
                     values: Sequence[float]) -> str:
    key = embedding_key(model, text)
    record = {
        "kind": "embedding",
        "key": key,
        "request": {"model": model, "text": text},
        "response": {"values": [float(v) for v in values]},
    }
    path = Path(cache_dir)
    path.mkdir(parents=True, exist_ok=True)
    with (path / f"{key}.json").open("w", encoding="utf-8") as fh:
        json.dump(record, fh, ensure_ascii=False, indent=2)
    return key


# --------------------------------------------------------------------------
# Likert score extraction
# --------------------------------------------------------------------------

# Standalone integers: not glued to a word, not part of a decimal number.
_INT_RE = re.compile(r"(?<![\w.])(\d+)(?!\.?\d)(?!\w)")


def parse_likert(text: str, lo: int, hi: int) -> int:
    """Extract a Likert verdict from free-form completion text.

    Scans lines bottom-up (chain-of-thought responses end with the verdict)
    and returns the last standalone integer within [lo, hi] on the last line
    that contains one. Raises ParseError when no in-range integer exists.
    """
    if lo > hi:
        raise ValueError("lo must be <= hi")
    for line in reversed(text.splitlines()):
        in_range = [int(m.group(1)) for m in _INT_RE.finditer(line)
                    if lo <= int(m.group(1)) <= hi]
        if in_range:
            return in_range[-1]
    raise ParseError(f"no integer in [{lo}, {hi}] found in completion text")
