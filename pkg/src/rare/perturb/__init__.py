"""Query and document perturbations."""

from .docs import (
    DOC_KINDS,
    DocVariant,
    chunk_guard,
    ground_truth_variant,
    mask_answer,
    perturb_doc_backtranslate,
    perturb_doc_remove_answer,
)
from .llm import SimilarityGuard, missing_protected, perturb_llm
from .surface import (
    QUERY_KINDS,
    QueryVariant,
    load_lexicon,
    numerals,
    perturb_char,
    perturb_word,
    protected_terms,
)

__all__ = [
    "DOC_KINDS",
    "QUERY_KINDS",
    "DocVariant",
    "QueryVariant",
    "SimilarityGuard",
    "chunk_guard",
    "ground_truth_variant",
    "load_lexicon",
    "mask_answer",
    "missing_protected",
    "numerals",
    "perturb_char",
    "perturb_doc_backtranslate",
    "perturb_doc_remove_answer",
    "perturb_llm",
    "perturb_word",
    "protected_terms",
]
