"""Pluggable clients for the three external capabilities.

Chat completion, sentence embedding and pairwise reranking each come in
a remote JSON-over-HTTP flavor and a deterministic mock flavor, wrapped
by a content-addressed disk cache so any stage rerun with a warm cache
performs zero remote calls.
"""

from .bm25 import CorpusStats, bm25_score
from .cache import DiskCache, NullCache, request_digest
from .embedding import (
    EmbeddingClient,
    EmbeddingVector,
    HashEmbedder,
    RemoteEmbedder,
    TokenHashEmbedder,
    cosine_score,
)
from .llm import LlmClient, LlmRequest, MockLlm, RemoteLlm
from .rerank import RemoteReranker, RerankClient, RerankRequest, TokenOverlapReranker
from .tokens import tokenize

__all__ = [
    "CorpusStats",
    "bm25_score",
    "DiskCache",
    "NullCache",
    "request_digest",
    "EmbeddingClient",
    "EmbeddingVector",
    "HashEmbedder",
    "RemoteEmbedder",
    "TokenHashEmbedder",
    "cosine_score",
    "LlmClient",
    "LlmRequest",
    "MockLlm",
    "RemoteLlm",
    "RerankClient",
    "RerankRequest",
    "RemoteReranker",
    "TokenOverlapReranker",
    "tokenize",
]
