"""Chat-completion LLM clients: a cached front, a remote backend, mocks."""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Callable

import requests

from ..errors import ProviderError
from .cache import DiskCache, NullCache, request_digest
from .http import auth_headers, post_json

__all__ = ["LlmRequest", "LlmClient", "MockLlm", "RemoteLlm"]


@dataclass(frozen=True)
class LlmRequest:
    """One chat-completion request; temperature defaults to 0 so repeated
    runs are reproducible."""

    model_id: str
    system_prompt: str
    user_prompt: str
    temperature: float = 0.0
    max_tokens: int = 1024

    def __post_init__(self):
        if not self.system_prompt or not self.user_prompt:
            raise ValueError("prompts must be non-empty")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")

    def payload(self) -> dict:
        return {
            "model": self.model_id,
            "system": self.system_prompt,
            "user": self.user_prompt,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }


class LlmClient:
    """Cached chat-completion client.

    The cache serves repeated requests, so ``backend_calls`` counts only
    genuine backend work; a warm cache means zero backend calls.
    """

    def __init__(self, backend, cache: DiskCache | NullCache | None = None):
        self.backend = backend
        self.cache = cache if cache is not None else NullCache()
        self._lock = threading.Lock()
        self.backend_calls = 0

    def complete(self, req: LlmRequest) -> str:
        digest = request_digest("llm", req.payload())
        cached = self.cache.get(digest)
        if cached is not None:
            return cached
        with self._lock:
            self.backend_calls += 1
        try:
            text = self.backend.complete(req)
        except ProviderError:
            raise
        except Exception as e:
            raise ProviderError(f"LLM backend failed: {e}", digest) from e
        if not text:
            raise ProviderError("LLM returned an empty completion", digest)
        self.cache.put(digest, req.payload(), text)
        return text


class MockLlm:
    """Deterministic LLM stand-in.

    Responds from a fixed table keyed by user prompt, falling back to a
    ``rule`` callable on the request or to ``default``.  Raises when no
    source applies, mirroring a failed remote call.
    """

    def __init__(
        self,
        responses: dict[str, str] | None = None,
        default: str | None = None,
        rule: Callable[[LlmRequest], str] | None = None,
    ):
        self.responses = responses or {}
        self.default = default
        self.rule = rule

    def complete(self, req: LlmRequest) -> str:
        if req.user_prompt in self.responses:
            return self.responses[req.user_prompt]
        if self.rule is not None:
            return self.rule(req)
        if self.default is not None:
            return self.default
        raise ProviderError("mock LLM has no response for this prompt")


class RemoteLlm:
    """JSON-over-HTTP chat-completion backend.

    Speaks the widely adopted ``{model, messages[], temperature,
    max_tokens} -> choices[0].message.content`` wire shape; ``endpoint``
    is the full URL of the completion route.
    """

    def __init__(
        self,
        endpoint: str,
        retries: int = 3,
        timeout: float = 60.0,
        backoff: float = 0.5,
        token_env: str = "IRIS_LLM_TOKEN",
        session: requests.Session | None = None,
    ):
        self.endpoint = endpoint
        self.retries = max(1, retries)
        self.timeout = timeout
        self.backoff = backoff
        self.token_env = token_env
        self.session = session or requests.Session()

    def complete(self, req: LlmRequest) -> str:
        body = {
            "model": req.model_id,
            "messages": [
                {"role": "system", "content": req.system_prompt},
                {"role": "user", "content": req.user_prompt},
            ],
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        }
        digest = request_digest("llm", req.payload())
        data = post_json(
            self.session, self.endpoint, body, auth_headers(self.token_env),
            self.retries, self.timeout, self.backoff, digest, "LLM",
        )
        try:
            return data["choices"][0]["message"]["content"] or ""
        except (KeyError, IndexError, TypeError):
            raise ProviderError("LLM response missing completion text",
                                digest) from None
