"""Sentence-embedding clients plus the cosine similarity scorer."""

from __future__ import annotations

import hashlib
import threading
from dataclasses import dataclass

import numpy as np
import requests

from ..errors import ProviderError
from .cache import DiskCache, NullCache, request_digest
from .http import auth_headers, post_json
from .tokens import tokenize

__all__ = [
    "EmbeddingVector",
    "EmbeddingClient",
    "HashEmbedder",
    "TokenHashEmbedder",
    "RemoteEmbedder",
    "cosine_score",
]


@dataclass(frozen=True)
class EmbeddingVector:
    """A sentence embedding tagged with the model that produced it."""

    values: np.ndarray
    model_id: str

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if not np.all(np.isfinite(v)):
            raise ValueError("embedding contains non-finite entries")
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])


class EmbeddingClient:
    """Cached embedding client with a fixed configured dimension."""

    def __init__(self, backend, dim: int,
                 cache: DiskCache | NullCache | None = None):
        self.backend = backend
        self.dim = dim
        self.cache = cache if cache is not None else NullCache()
        self._lock = threading.Lock()
        self.backend_calls = 0

    def embed(self, text: str) -> EmbeddingVector:
        if not text:
            raise ValueError("cannot embed empty text")
        payload = {"text": text, "model": self.backend.model_id}
        digest = request_digest("embed", payload)
        cached = self.cache.get(digest)
        if cached is not None:
            values = np.asarray(cached, dtype=np.float64)
        else:
            with self._lock:
                self.backend_calls += 1
            values = np.asarray(self.backend.embed(text), dtype=np.float64)
            self.cache.put(digest, payload, [float(x) for x in values])
        if values.shape != (self.dim,):
            raise ProviderError(
                f"embedding dimension {values.shape[0]} does not match "
                f"configured dimension {self.dim}",
                digest,
            )
        return EmbeddingVector(values=values, model_id=self.backend.model_id)

    def embed_many(self, texts: list[str]) -> list[EmbeddingVector]:
        return [self.embed(t) for t in texts]


class HashEmbedder:
    """Deterministic mock: a hash-seeded pseudorandom unit vector per text.

    Distinct texts get independent directions, so two different strings
    are nearly orthogonal in expectation.
    """

    def __init__(self, dim: int = 64, model_id: str = "mock-hash"):
        self.dim = dim
        self.model_id = model_id

    def embed(self, text: str) -> np.ndarray:
        seed = _seed_from(f"{self.model_id}\x00{text}")
        rng = np.random.default_rng(seed)
        v = rng.standard_normal(self.dim)
        return v / np.linalg.norm(v)


class TokenHashEmbedder:
    """Deterministic mock: normalized sum of per-token hash vectors.

    Texts sharing tokens get similar embeddings, which gives synthetic
    class-indicative tokens a real geometric footprint; used by the
    end-to-end fixture.
    """

    def __init__(self, dim: int = 64, model_id: str = "mock-token-hash"):
        self.dim = dim
        self.model_id = model_id

    def _token_vector(self, token: str) -> np.ndarray:
        rng = np.random.default_rng(_seed_from(f"{self.model_id}\x00{token}"))
        v = rng.standard_normal(self.dim)
        return v / np.linalg.norm(v)

    def embed(self, text: str) -> np.ndarray:
        tokens = tokenize(text)
        if not tokens:
            tokens = ["\x00empty"]
        acc = np.zeros(self.dim)
        for t in tokens:
            acc += self._token_vector(t)
        norm = np.linalg.norm(acc)
        if norm == 0.0:
            return self._token_vector("\x00degenerate")
        return acc / norm


def _seed_from(key: str) -> int:
    return int.from_bytes(hashlib.sha256(key.encode("utf-8")).digest()[:8],
                          "little")


class RemoteEmbedder:
    """JSON-over-HTTP embedding backend.

    Speaks the common ``{model, input[]} -> data[].embedding`` shape;
    ``endpoint`` is the full URL of the embeddings route.
    """

    def __init__(
        self,
        endpoint: str,
        model_id: str,
        retries: int = 3,
        timeout: float = 60.0,
        backoff: float = 0.5,
        token_env: str = "IRIS_EMBED_TOKEN",
        session: requests.Session | None = None,
    ):
        self.endpoint = endpoint
        self.model_id = model_id
        self.retries = max(1, retries)
        self.timeout = timeout
        self.backoff = backoff
        self.token_env = token_env
        self.session = session or requests.Session()

    def embed(self, text: str) -> np.ndarray:
        digest = request_digest("embed", {"text": text, "model": self.model_id})
        data = post_json(
            self.session, self.endpoint,
            {"model": self.model_id, "input": [text]},
            auth_headers(self.token_env),
            self.retries, self.timeout, self.backoff, digest, "embedding",
        )
        try:
            return np.asarray(data["data"][0]["embedding"], dtype=np.float64)
        except (KeyError, IndexError, TypeError):
            raise ProviderError("embedding response missing vector",
                                digest) from None


def cosine_score(a: EmbeddingVector | np.ndarray,
                 b: EmbeddingVector | np.ndarray) -> float:
    """Cosine similarity dot(a,b) / (|a| |b|), in [-1, 1].

    Rejects zero vectors and dimension mismatches.
    """
    va = a.values if isinstance(a, EmbeddingVector) else np.asarray(a, dtype=np.float64)
    vb = b.values if isinstance(b, EmbeddingVector) else np.asarray(b, dtype=np.float64)
    if va.shape != vb.shape:
        raise ValueError(f"dimension mismatch: {va.shape} vs {vb.shape}")
    na = np.linalg.norm(va)
    nb = np.linalg.norm(vb)
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity undefined for zero vectors")
    return float(np.dot(va, vb) / (na * nb))
