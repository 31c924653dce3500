"""Offline backend: canned chat responses plus a deterministic hashing embedder."""

from __future__ import annotations

import hashlib
import json
import math
import re
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence

from ..errors import ProviderUnavailable
from ..textnorm import fold
from .base import ChatRequest, chat_key

ChatHandler = Callable[[ChatRequest], Optional[str]]

_WORD = re.compile(r"\w+")


class HashEmbedder:
    """Signed feature hashing of words and character trigrams, L2-normalized.

    Identical texts map to identical unit vectors; texts sharing most of their
    surface form land close together, which is what the guards need offline.
    """

    def __init__(self, dim: int = 256):
        self.dim = dim

    def _features(self, text: str) -> list[str]:
        t = fold(text)
        feats = [f"w:{w}" for w in _WORD.findall(t)]
        padded = f" {t} "
        feats += [f"c:{padded[i:i + 3]}" for i in range(len(padded) - 2)]
        return feats or ["<empty>"]

    def __call__(self, model: str, text: str) -> list[float]:
        vec = [0.0] * self.dim
        for feat in self._features(text):
            h = hashlib.blake2b(f"{model}|{feat}".encode("utf-8"), digest_size=8).digest()
            n = int.from_bytes(h, "big")
            vec[n % self.dim] += 1.0 if (n >> 32) & 1 else -1.0
        norm = math.sqrt(sum(v * v for v in vec))
        if norm == 0:
            vec[0], norm = 1.0, 1.0
        return [v / norm for v in vec]


class MockBackend:
    """Serves chat from a digest table (then an optional handler) and
    embeddings from explicit overrides (then the hashing embedder)."""

    def __init__(
        self,
        responses: Optional[Mapping[str, str]] = None,
        handler: Optional[ChatHandler] = None,
        embedder: Optional[Callable[[str, str], list[float]]] = None,
        vectors: Optional[Mapping[str, Sequence[float]]] = None,
    ):
        self.responses: dict[str, str] = dict(responses or {})
        self.handler = handler
        self.embedder = embedder or HashEmbedder()
        self.vectors: dict[str, list[float]] = {k: list(v) for k, v in (vectors or {}).items()}
        self.chat_calls = 0
        self.embed_calls = 0

    @classmethod
    def from_jsonl(cls, path: Path, **kwargs) -> "MockBackend":
        table = {}
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if line.strip():
                row = json.loads(line)
                table[row["digest"]] = row["response"]
        return cls(table, **kwargs)

    def add(self, req: ChatRequest, text: str) -> str:
        key = chat_key(req)
        self.responses[key] = text
        return key

    def chat(self, req: ChatRequest) -> str:
        self.chat_calls += 1
        key = chat_key(req)
        if key in self.responses:
            return self.responses[key]
        if self.handler is not None:
            text = self.handler(req)
            if text is not None:
                return text
        raise ProviderUnavailable(f"mock has no response for digest {key[:12]}")

    def embed(self, model: str, texts: Sequence[str]) -> list[list[float]]:
        self.embed_calls += 1
        out = []
        for text in texts:
            if f"{model}|{text}" in self.vectors:
                out.append(list(self.vectors[f"{model}|{text}"]))
            elif text in self.vectors:
                out.append(list(self.vectors[text]))
            else:
                out.append(self.embedder(model, text))
        return out
