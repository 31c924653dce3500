"""Aggregate per-QA robustness scores into generator x domain x hop tables."""

from __future__ import annotations

import csv
import io
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from ..errors import IncompleteGrid
from ..io import to_jsonable
from ..qagen import QAPair
from .metrics import (
    METRICS,
    JudgeVerdict,
    document_robustness,
    overall_robustness,
    query_robustness,
    retrieval_robustness,
)


@dataclass
class MetricOptions:
    field: str = "f"
    include_original_in_query: bool = False
    fold_retrieval: bool = False


@dataclass
class CellScores:
    generator: str
    domain: str
    hops: str
    overall: Optional[float] = None
    query: Optional[float] = None
    document: Optional[float] = None
    retrieval: Optional[float] = None
    counts: dict[str, int] = field(default_factory=dict)
    breakdown: dict[str, float] = field(default_factory=dict)

    def score(self, metric: str) -> Optional[float]:
        return getattr(self, metric)


@dataclass
class RobustnessReport:
    mode: str
    cells: list[CellScores]
    totals: list[CellScores]
    qa_scores: dict[str, dict[str, dict[str, Optional[float]]]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"mode": self.mode, "totals": to_jsonable(self.totals), "cells": to_jsonable(self.cells), "qa_scores": self.qa_scores}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["generator", "domain", "hops", *METRICS, *(f"n_{m}" for m in METRICS)])
        for c in self.totals + self.cells:
            w.writerow([c.generator, c.domain, c.hops, *(_fmt(c.score(m)) for m in METRICS), *(c.counts.get(m, 0) for m in METRICS)])
        return buf.getvalue()

    def to_markdown(self) -> str:
        lines = [f"Robustness ({self.mode} judge)", "", "| Model | Overall | Query | Document | Retrieval |", "|---|---|---|---|---|"]
        for c in self.totals:
            lines.append(f"| {c.generator} | " + " | ".join(_fmt(c.score(m)) for m in METRICS) + " |")
        lines += ["", "| Model | Domain | Hops | Overall | Query | Document | Retrieval | #QA |", "|---|---|---|---|---|---|---|---|"]
        for c in self.cells:
            lines.append(
                f"| {c.generator} | {c.domain} | {c.hops} | "
                + " | ".join(_fmt(c.score(m)) for m in METRICS)
                + f" | {max(c.counts.values(), default=0)} |"
            )
        return "\n".join(lines) + "\n"


def _fmt(x: Optional[float]) -> str:
    return "" if x is None else f"{x:.3f}"


def qa_metric_scores(verdicts: Sequence[JudgeVerdict], opts: MetricOptions = MetricOptions()) -> dict[str, Optional[float]]:
    """The four scores of one QA; a metric whose cells are incomplete is None."""
    funcs = {
        "overall": lambda: overall_robustness(verdicts, include_retrieval=opts.fold_retrieval, field=opts.field),
        "query": lambda: query_robustness(verdicts, include_original=opts.include_original_in_query, field=opts.field),
        "document": lambda: document_robustness(verdicts, field=opts.field),
        "retrieval": lambda: retrieval_robustness(verdicts, field=opts.field),
    }
    out: dict[str, Optional[float]] = {}
    for name, fn in funcs.items():
        try:
            out[name] = fn()
        except IncompleteGrid:
            out[name] = None
    return out


def _mean(xs: list[float]) -> Optional[float]:
    return sum(xs) / len(xs) if xs else None


def aggregate_report(
    verdicts: Sequence[JudgeVerdict],
    qas: Mapping[str, QAPair],
    opts: MetricOptions = MetricOptions(),
    mode: str = "strict",
) -> RobustnessReport:
    by_qa: dict[tuple[str, str], list[JudgeVerdict]] = defaultdict(list)
    for v in verdicts:
        by_qa[(v.generator, v.qa_id)].append(v)

    per_cell: dict[tuple[str, str, str], dict[str, list[float]]] = defaultdict(lambda: defaultdict(list))
    per_gen: dict[str, dict[str, list[float]]] = defaultdict(lambda: defaultdict(list))
    cell_f: dict[tuple[str, str, str], dict[str, list[int]]] = defaultdict(lambda: defaultdict(list))
    qa_scores: dict[str, dict[str, dict[str, Optional[float]]]] = defaultdict(dict)

    for (gen, qa_id), vs in sorted(by_qa.items()):
        qa = qas[qa_id]
        key = (gen, qa.domain, "multi" if qa.multi_hop else "single")
        scores = qa_metric_scores(vs, opts)
        qa_scores[gen][qa_id] = scores
        # a generator with no complete metric still gets a row
        per_cell.setdefault(key, defaultdict(list))
        per_gen.setdefault(gen, defaultdict(list))
        for m, s in scores.items():
            if s is not None:
                per_cell[key][m].append(s)
                per_gen[gen][m].append(s)
        for v in vs:
            cell_f[key][f"{v.query_kind}|{v.doc_kind}"].append(getattr(v, opts.field))

    cells = []
    for key in sorted(per_cell):
        gen, domain, hops = key
        c = CellScores(gen, domain, hops, counts={m: len(per_cell[key][m]) for m in METRICS})
        for m in METRICS:
            setattr(c, m, _mean(per_cell[key][m]))
        c.breakdown = {k: sum(v) / len(v) for k, v in sorted(cell_f[key].items())}
        cells.append(c)

    totals = []
    for gen in sorted(per_gen):
        # pooled per-QA mean == cell means weighted by their QA counts
        t = CellScores(gen, "all", "all", counts={m: len(per_gen[gen][m]) for m in METRICS})
        for m in METRICS:
            setattr(t, m, _mean(per_gen[gen][m]))
        totals.append(t)
    return RobustnessReport(mode, cells, totals, {g: dict(s) for g, s in qa_scores.items()})
