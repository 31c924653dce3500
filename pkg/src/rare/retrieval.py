"""Exact dense retrieval over the chunk corpus, one index per embedding model."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyCorpus
from .ingest import Chunk
from .io import atomic_write_text, from_dict
from .providers import ProviderClient
from .qagen import QAPair
from .textnorm import contains

DEFAULT_K = 3


@dataclass
class VectorIndex:
    model: str
    chunk_ids: list[str]
    vectors: np.ndarray

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2 or len(self.chunk_ids) != self.vectors.shape[0]:
            raise ValueError("one vector per chunk required")
        norms = np.linalg.norm(self.vectors, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        self._unit = self.vectors / norms

    @property
    def dimension(self) -> int:
        return int(self.vectors.shape[1])

    def __len__(self) -> int:
        return len(self.chunk_ids)

    def save(self, path: Path) -> None:
        lines = [
            json.dumps({"chunk_id": cid, "vector": vec.tolist()}) for cid, vec in zip(self.chunk_ids, self.vectors)
        ]
        atomic_write_text(Path(path), "".join(line + "\n" for line in lines))

    @classmethod
    def load(cls, path: Path, model: str) -> "VectorIndex":
        ids, rows = [], []
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if line.strip():
                row = json.loads(line)
                ids.append(row["chunk_id"])
                rows.append(row["vector"])
        if not ids:
            raise EmptyCorpus(f"{path} holds no vectors")
        if len({len(r) for r in rows}) != 1:
            raise DimensionMismatch(f"{path}: vectors of mixed dimension")
        return cls(model, ids, np.array(rows))


@dataclass
class RetrievalSet:
    qa_id: str
    model: str
    chunk_ids: list[str] = field(default_factory=list)
    scores: list[float] = field(default_factory=list)
    answer_available: bool = False

    @classmethod
    def from_dict(cls, row: dict) -> "RetrievalSet":
        return from_dict(cls, row)


def build_index(client: ProviderClient, model: str, chunks: Sequence[Chunk], batch_size: int = 64) -> VectorIndex:
    if not chunks:
        raise EmptyCorpus("cannot index an empty corpus")
    vectors = []
    for start in range(0, len(chunks), batch_size):
        batch = chunks[start : start + batch_size]
        vectors.extend(v.values for v in client.embed(model, [c.text for c in batch]))
    return VectorIndex(model, [c.chunk_id for c in chunks], np.array(vectors))


def retrieve(index: VectorIndex, client: ProviderClient, query: str, k: int = DEFAULT_K, qa_id: str = "") -> RetrievalSet:
    """Top-``k`` chunks by cosine similarity; equal scores fall back to chunk_id order."""
    qv = np.asarray(client.embed(index.model, [query])[0].values, dtype=np.float64)
    if qv.shape[0] != index.dimension:
        raise DimensionMismatch(f"{index.model}: query dim {qv.shape[0]} vs index dim {index.dimension}")
    norm = np.linalg.norm(qv)
    scores = index._unit @ (qv / norm if norm else qv)
    order = sorted(range(len(index)), key=lambda i: (-scores[i], index.chunk_ids[i]))[:k]
    return RetrievalSet(qa_id, index.model, [index.chunk_ids[i] for i in order], [float(scores[i]) for i in order])


def decide_availability(retr: RetrievalSet, qa: QAPair, chunks: Mapping[str, Chunk]) -> bool:
    """True when the retrieved context can answer ``qa``.

    Single-hop needs any ground-truth chunk; multi-hop needs all of them.
    A literal occurrence of the answer in the retrieved text counts either way.
    """
    got = set(retr.chunk_ids)
    gt = set(qa.gt_chunk_ids)
    by_chunk = (gt <= got) if qa.multi_hop else bool(gt & got)
    if by_chunk:
        return True
    joined = "\n".join(chunks[c].text for c in retr.chunk_ids if c in chunks)
    return contains(joined, qa.answer)
