"""Knowledge-graph QA benchmark synthesis and RAG robustness evaluation."""

__version__ = "0.1.0"
