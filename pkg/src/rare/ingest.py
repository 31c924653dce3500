"""Corpus loading and structure-preserving chunking.

Documents are markdown/plain text. A body is first segmented into *units*:
paragraphs, or a pipe table glued to its caption line and the explanation
paragraph that follows it. Units are never split; chunks are formed by greedy
packing of whole units under a token budget.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional

from .errors import EmptyDocument, RareError
from .io import from_dict

log = logging.getLogger(__name__)

DOMAINS = ("finance", "economics", "policy", "other")
DEFAULT_BUDGET = 600
CAPTION_MAX_WORDS = 20

TokenCounter = Callable[[str], int]

_TABLE_ROW = re.compile(r"^\s*\|.*\|\s*$")
_BLANK = re.compile(r"\n[ \t]*\n")


def count_tokens(text: str) -> int:
    """Default estimator: whitespace-delimited word count."""
    return len(text.split())


@dataclass
class DocumentMeta:
    title: str = ""
    year: Optional[int] = None
    country: Optional[str] = None
    company: Optional[str] = None
    file_type: str = ""
    extra: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.year is not None and self.year <= 0:
            raise ValueError(f"year must be positive, got {self.year}")


@dataclass
class SourceDocument:
    doc_id: str
    domain: str
    body: str
    meta: DocumentMeta = field(default_factory=DocumentMeta)

    def __post_init__(self):
        if self.domain not in DOMAINS:
            raise ValueError(f"unknown domain {self.domain!r}")
        if isinstance(self.meta, dict):
            self.meta = from_dict(DocumentMeta, self.meta)

    @classmethod
    def from_dict(cls, row: dict) -> "SourceDocument":
        return cls(row["doc_id"], row["domain"], row["body"], from_dict(DocumentMeta, row.get("meta") or {}))


@dataclass
class Chunk:
    chunk_id: str
    doc_id: str
    ordinal: int
    text: str
    token_count: int
    contains_table: bool

    @classmethod
    def from_dict(cls, row: dict) -> "Chunk":
        return from_dict(cls, row)


@dataclass
class Unit:
    text: str
    token_count: int
    is_table: bool = False


def make_chunk_id(domain: str, doc_id: str, ordinal: int) -> str:
    return f"{domain}_{doc_id}_chunk_{ordinal}"


def domain_of_chunk(chunk_id: str) -> str:
    return chunk_id.split("_", 1)[0]


def _blocks(body: str) -> list[str]:
    return [b.strip("\n") for b in _BLANK.split(body) if b.strip()]


def _split_block(block: str) -> list[tuple[str, str]]:
    """Split one blank-line-delimited block into ('para'|'table', text) pieces.

    Lines directly above a table inside the same block travel with it as its
    caption; lines after the last table travel with that table.
    """
    lines = block.split("\n")
    runs = []
    i = 0
    while i < len(lines):
        if _TABLE_ROW.match(lines[i]):
            j = i
            while j + 1 < len(lines) and _TABLE_ROW.match(lines[j + 1]):
                j += 1
            if j > i:
                runs.append((i, j))
            i = j + 1
        else:
            i += 1
    if not runs:
        return [("para", block)]

    pieces = []
    start = 0
    for k, (_, end) in enumerate(runs):
        stop = len(lines) if k == len(runs) - 1 else end + 1
        pieces.append(("table", "\n".join(lines[start:stop])))
        start = stop
    return pieces


def segment_units(doc: SourceDocument, counter: TokenCounter = count_tokens) -> list[Unit]:
    if not doc.body or not doc.body.strip():
        raise EmptyDocument(f"document {doc.doc_id!r} has no content")

    pieces: list[tuple[str, str]] = []
    for block in _blocks(doc.body):
        pieces.extend(_split_block(block))

    units: list[Unit] = []
    i = 0
    while i < len(pieces):
        kind, text = pieces[i]
        if kind == "table":
            parts = [text]
            # a short one-line paragraph right before a bare table is its caption
            bare = bool(_TABLE_ROW.match(text.split("\n", 1)[0]))
            prev = units[-1] if units else None
            if bare and prev and not prev.is_table and "\n" not in prev.text.strip() and count_tokens(prev.text) <= CAPTION_MAX_WORDS:
                parts.insert(0, units.pop().text)
            if i + 1 < len(pieces) and pieces[i + 1][0] == "para":
                parts.append(pieces[i + 1][1])
                i += 1
            joined = "\n\n".join(parts)
            units.append(Unit(joined, counter(joined), True))
        else:
            units.append(Unit(text, counter(text), False))
        i += 1
    return units


def chunk_document(
    doc: SourceDocument,
    budget: int = DEFAULT_BUDGET,
    counter: TokenCounter = count_tokens,
) -> list[Chunk]:
    if budget < 1:
        raise ValueError("budget must be positive")
    units = segment_units(doc, counter)

    groups: list[list[Unit]] = []
    current: list[Unit] = []
    for unit in units:
        if current and counter("\n\n".join(u.text for u in current + [unit])) > budget:
            groups.append(current)
            current = []
        current.append(unit)
    if current:
        groups.append(current)

    chunks = []
    for ordinal, group in enumerate(groups):
        text = "\n\n".join(u.text for u in group)
        chunks.append(
            Chunk(
                chunk_id=make_chunk_id(doc.domain, doc.doc_id, ordinal),
                doc_id=doc.doc_id,
                ordinal=ordinal,
                text=text,
                token_count=max(1, counter(text)),
                contains_table=any(u.is_table for u in group),
            )
        )
    return chunks


def chunk_corpus(
    docs: Iterable[SourceDocument],
    budget: int = DEFAULT_BUDGET,
    counter: TokenCounter = count_tokens,
) -> list[Chunk]:
    out: list[Chunk] = []
    seen: set[str] = set()
    for doc in docs:
        if doc.doc_id in seen:
            raise RareError(f"duplicate doc_id {doc.doc_id!r}")
        seen.add(doc.doc_id)
        out.extend(chunk_document(doc, budget, counter))
    return out


def load_document(path: Path, default_domain: str = "other") -> SourceDocument:
    path = Path(path)
    doc_id = path.stem
    meta_path = path.with_name(f"{doc_id}.meta.json")
    raw: dict = {}
    if meta_path.exists():
        raw = json.loads(meta_path.read_text(encoding="utf-8"))
    domain = raw.pop("domain", default_domain)
    doc_id = raw.pop("doc_id", doc_id)
    meta = from_dict(DocumentMeta, raw)
    unknown = set(raw) - set(DocumentMeta.__dataclass_fields__)
    if unknown:
        meta.extra.update({k: str(raw[k]) for k in sorted(unknown)})
    return SourceDocument(doc_id, domain, path.read_text(encoding="utf-8"), meta)


def load_corpus(corpus_dir: Path, default_domain: str = "other") -> list[SourceDocument]:
    corpus_dir = Path(corpus_dir)
    paths = sorted(p for p in corpus_dir.iterdir() if p.suffix in (".md", ".txt") and p.is_file())
    if not paths:
        log.warning("no .md/.txt documents under %s", corpus_dir)
    return [load_document(p, default_domain) for p in paths]
