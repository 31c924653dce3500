from __future__ import annotations

import logging
import random
import threading
import time
from typing import Callable, Optional, Sequence

from ..errors import DimensionMismatch, MalformedResponse, ProviderUnavailable
from .base import Backend, ChatRequest, ChatResponse, EmbeddingVector, TransientError, chat_key, embed_key
from .cache import ResponseCache

log = logging.getLogger(__name__)


class ProviderClient:
    """Cache-fronted, retrying access to one chat/embedding backend.

    ``attempts`` is the total number of tries per request; a request that
    fails that many times with a transient error raises
    :class:`ProviderUnavailable`. Backoff doubles from ``backoff`` seconds
    with full jitter.
    """

    def __init__(
        self,
        backend: Backend,
        cache: Optional[ResponseCache] = None,
        *,
        attempts: int = 3,
        backoff: float = 1.0,
        max_in_flight: int = 8,
        sleep: Callable[[float], None] = time.sleep,
        seed: Optional[int] = None,
    ):
        if attempts < 1:
            raise ValueError("attempts must be >= 1")
        self.backend = backend
        self.cache = cache
        self.attempts = attempts
        self.backoff = backoff
        self.max_in_flight = max_in_flight
        self._sleep = sleep
        self._rng = random.Random(seed)
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self._lock = threading.Lock()
        self._dims: dict[str, int] = {}
        self.network_calls = 0
        self.cache_hits = 0

    def _call(self, fn, *args):
        last: Exception | None = None
        for attempt in range(self.attempts):
            with self._slots:
                with self._lock:
                    self.network_calls += 1
                try:
                    return fn(*args)
                except TransientError as exc:
                    last = exc
            if attempt + 1 < self.attempts:
                delay = self.backoff * (2**attempt) * (0.5 + self._rng.random() / 2)
                log.warning("transient provider error (%s); retrying in %.2fs", last, delay)
                self._sleep(delay)
        raise ProviderUnavailable(f"gave up after {self.attempts} attempts: {last}") from last

    def chat(self, req: ChatRequest) -> ChatResponse:
        key = chat_key(req)
        if self.cache is not None:
            hit = self.cache.get(key)
            if hit is not None:
                with self._lock:
                    self.cache_hits += 1
                return ChatResponse(hit["text"], req.model, cached=True)
        text = self._call(self.backend.chat, req)
        if not isinstance(text, str) or not text:
            raise MalformedResponse(f"{req.model}: endpoint returned no text")
        if self.cache is not None:
            self.cache.put(key, {"model": req.model, "text": text})
        return ChatResponse(text, req.model, cached=False)

    def _check_dim(self, model: str, values: Sequence[float]) -> None:
        with self._lock:
            dim = self._dims.setdefault(model, len(values))
        if len(values) != dim:
            raise DimensionMismatch(f"{model}: got dimension {len(values)}, expected {dim}")

    def embed(self, model: str, texts: Sequence[str]) -> list[EmbeddingVector]:
        if not texts:
            raise ValueError("embed() needs at least one text")
        found: dict[int, list[float]] = {}
        missing: list[int] = []
        for i, text in enumerate(texts):
            hit = self.cache.get(embed_key(model, text)) if self.cache is not None else None
            if hit is not None:
                found[i] = hit["values"]
                with self._lock:
                    self.cache_hits += 1
            else:
                missing.append(i)
        if missing:
            # duplicate texts in one batch are sent once
            uniq = list(dict.fromkeys(texts[i] for i in missing))
            vectors = self._call(self.backend.embed, model, uniq)
            if len(vectors) != len(uniq):
                raise MalformedResponse(f"{model}: asked for {len(uniq)} embeddings, got {len(vectors)}")
            by_text = dict(zip(uniq, vectors))
            for i in missing:
                found[i] = [float(x) for x in by_text[texts[i]]]
            for text, vec in by_text.items():
                if self.cache is not None:
                    self.cache.put(embed_key(model, text), {"model": model, "values": [float(x) for x in vec]})
        out = []
        for i in range(len(texts)):
            self._check_dim(model, found[i])
            out.append(EmbeddingVector(model, tuple(found[i])))
        return out
