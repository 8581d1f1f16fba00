"""Pairwise reranker clients: cached front, remote backend, token-overlap mock."""

from __future__ import annotations

import threading
from dataclasses import dataclass

import requests

from ..errors import ProviderError
from .cache import DiskCache, NullCache, request_digest
from .http import auth_headers, post_json
from .tokens import tokenize

__all__ = ["RerankRequest", "RerankClient", "TokenOverlapReranker", "RemoteReranker"]


@dataclass(frozen=True)
class RerankRequest:
    """One (instruction, query, document) scoring request.

    The instruction may be empty when the no-instruction ablation is
    active; query and document are always required.
    """

    instruction: str
    query: str
    document: str

    def __post_init__(self):
        if not self.query or not self.document:
            raise ValueError("query and document must be non-empty")

    def payload(self) -> dict:
        return {
            "instruction": self.instruction,
            "query": self.query,
            "document": self.document,
        }


class RerankClient:
    """Cached relevance scorer; scores are raw and unbounded (higher =
    more relevant), normalization happens downstream."""

    def __init__(self, backend, cache: DiskCache | NullCache | None = None):
        self.backend = backend
        self.cache = cache if cache is not None else NullCache()
        self._lock = threading.Lock()
        self.backend_calls = 0

    def score(self, req: RerankRequest) -> float:
        digest = request_digest("rerank", req.payload())
        cached = self.cache.get(digest)
        if cached is not None:
            return float(cached)
        with self._lock:
            self.backend_calls += 1
        try:
            value = float(self.backend.score(req))
        except ProviderError:
            raise
        except Exception as e:
            raise ProviderError(f"reranker backend failed: {e}", digest) from e
        self.cache.put(digest, req.payload(), value)
        return value


class TokenOverlapReranker:
    """Deterministic mock: counts query tokens present in the document.

    Each query token (with multiplicity) contributes 1 when it occurs in
    the document's token set, so a query fully contained in the document
    scores exactly its own token count.  The instruction is ignored.
    """

    def score(self, req: RerankRequest) -> float:
        doc_tokens = set(tokenize(req.document))
        return float(sum(1 for t in tokenize(req.query) if t in doc_tokens))


class RemoteReranker:
    """JSON-over-HTTP reranker backend.

    Speaks a ``{model, query, documents[], instruction} ->
    results[].relevance_score`` shape; ``endpoint`` is the full URL of
    the rerank route.
    """

    def __init__(
        self,
        endpoint: str,
        model_id: str,
        retries: int = 3,
        timeout: float = 60.0,
        backoff: float = 0.5,
        token_env: str = "IRIS_RERANK_TOKEN",
        session: requests.Session | None = None,
    ):
        self.endpoint = endpoint
        self.model_id = model_id
        self.retries = max(1, retries)
        self.timeout = timeout
        self.backoff = backoff
        self.token_env = token_env
        self.session = session or requests.Session()

    def score(self, req: RerankRequest) -> float:
        digest = request_digest("rerank", req.payload())
        body = {
            "model": self.model_id,
            "query": req.query,
            "documents": [req.document],
        }
        if req.instruction:
            body["instruction"] = req.instruction
        data = post_json(
            self.session, self.endpoint, body, auth_headers(self.token_env),
            self.retries, self.timeout, self.backoff, digest, "reranker",
        )
        try:
            return float(data["results"][0]["relevance_score"])
        except (KeyError, IndexError, TypeError, ValueError):
            raise ProviderError("reranker response missing relevance score",
                                digest) from None
