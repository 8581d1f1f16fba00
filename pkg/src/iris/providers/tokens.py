"""Word tokenization shared by BM25, the mock reranker and mock embedder."""

from __future__ import annotations

import re

_WORD = re.compile(r"\w+")

__all__ = ["tokenize"]


def tokenize(text: str) -> list[str]:
    """Lowercased word tokens in order of appearance."""
    return _WORD.findall(text.lower())
