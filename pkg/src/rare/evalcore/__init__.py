"""Generator evaluation over the perturbation grid and robustness scoring."""

from .generation import CLOSED_BOOK, GenerationRecord, RAGGenerator, parse_generation
from .judge import AnswerMatcher, decide, is_refusal, judge, lexical_match
from .metrics import (
    DOC_KINDS,
    METRICS,
    QUERY_KINDS,
    RETRIEVAL_PREFIX,
    JudgeVerdict,
    document_robustness,
    overall_robustness,
    query_robustness,
    retrieval_robustness,
)
from .report import CellScores, MetricOptions, RobustnessReport, aggregate_report, qa_metric_scores
from .runner import EvalSettings, evaluate, grade

__all__ = [
    "CLOSED_BOOK",
    "DOC_KINDS",
    "METRICS",
    "QUERY_KINDS",
    "RETRIEVAL_PREFIX",
    "AnswerMatcher",
    "CellScores",
    "EvalSettings",
    "GenerationRecord",
    "JudgeVerdict",
    "MetricOptions",
    "RAGGenerator",
    "RobustnessReport",
    "aggregate_report",
    "decide",
    "document_robustness",
    "evaluate",
    "grade",
    "is_refusal",
    "judge",
    "lexical_match",
    "overall_robustness",
    "parse_generation",
    "qa_metric_scores",
    "query_robustness",
    "retrieval_robustness",
]
