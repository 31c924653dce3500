from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass
from typing import Any, Protocol, Sequence

from ..errors import NoJsonFound, RareError


class TransientError(RareError):
    """Retryable failure (rate limit, 5xx, dropped connection)."""


@dataclass(frozen=True)
class ChatRequest:
    model: str
    system_prompt: str
    user_prompt: str
    temperature: float = 0.0
    max_tokens: int = 1024

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")


@dataclass(frozen=True)
class ChatResponse:
    text: str
    model: str
    cached: bool = False


@dataclass(frozen=True)
class EmbeddingVector:
    model: str
    values: tuple[float, ...]

    @property
    def dimension(self) -> int:
        return len(self.values)


class Backend(Protocol):
    def chat(self, req: ChatRequest) -> str: ...

    def embed(self, model: str, texts: Sequence[str]) -> list[list[float]]: ...


def _digest(payload: list[Any]) -> str:
    blob = json.dumps(payload, ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def chat_key(req: ChatRequest) -> str:
    return _digest(["chat", req.model, req.system_prompt, req.user_prompt, float(req.temperature), req.max_tokens])


def embed_key(model: str, text: str) -> str:
    return _digest(["embed", model, text])


def cosine(a: Sequence[float], b: Sequence[float]) -> float:
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(y * y for y in b))
    if na == 0 or nb == 0:
        return 0.0
    return dot / (na * nb)


_FENCE = re.compile(r"```[a-zA-Z0-9_-]*")


def extract_json(raw: str) -> Any:
    """Return the first syntactically valid JSON object or array in ``raw``."""
    text = _FENCE.sub(" ", raw or "").strip()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        pass
    decoder = json.JSONDecoder()
    for i, ch in enumerate(text):
        if ch not in "{[":
            continue
        try:
            obj, _ = decoder.raw_decode(text, i)
        except json.JSONDecodeError:
            continue
        return obj
    raise NoJsonFound(f"no JSON value in response: {raw[:80]!r}")
