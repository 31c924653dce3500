"""Chat and embedding access: caching, retries, OpenAI-compatible and mock backends."""

from .base import (
    Backend,
    ChatRequest,
    ChatResponse,
    EmbeddingVector,
    TransientError,
    chat_key,
    cosine,
    embed_key,
    extract_json,
)
from .cache import ResponseCache
from .client import ProviderClient
from .mock import HashEmbedder, MockBackend
from .openai_compat import OpenAICompatBackend

__all__ = [
    "Backend",
    "ChatRequest",
    "ChatResponse",
    "EmbeddingVector",
    "HashEmbedder",
    "MockBackend",
    "OpenAICompatBackend",
    "ProviderClient",
    "ResponseCache",
    "TransientError",
    "chat_key",
    "cosine",
    "embed_key",
    "extract_json",
]
