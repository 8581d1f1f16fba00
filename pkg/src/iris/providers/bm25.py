"""Okapi BM25 over a small reference corpus.

Term statistics are collected once from the corpus (here: the three
stance documents); scoring then evaluates

    score(q, d) = sum over query terms  idf(t) * tf * (k1 + 1)
                                        / (tf + k1 * (1 - b + b * |d| / avgdl))

with idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)).  The smoothed idf is
strictly positive, so scores are non-negative and monotone in term
frequency even on a three-document corpus where every term may appear in
every document.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

from .tokens import tokenize

__all__ = ["CorpusStats", "bm25_score"]


@dataclass(frozen=True)
class CorpusStats:
    """Document frequencies and length statistics for a fixed corpus."""

    n_docs: int
    avg_doc_len: float
    doc_freq: dict[str, int]

    @classmethod
    def from_documents(cls, documents: list[str]) -> "CorpusStats":
        if not documents:
            raise ValueError("corpus must contain at least one document")
        doc_freq: Counter[str] = Counter()
        total_len = 0
        for doc in documents:
            tokens = tokenize(doc)
            total_len += len(tokens)
            doc_freq.update(set(tokens))
        return cls(
            n_docs=len(documents),
            avg_doc_len=total_len / len(documents),
            doc_freq=dict(doc_freq),
        )

    def idf(self, term: str) -> float:
        df = self.doc_freq.get(term, 0)
        return math.log(1.0 + (self.n_docs - df + 0.5) / (df + 0.5))


def bm25_score(
    query: str,
    document: str,
    stats: CorpusStats,
    k1: float = 1.5,
    b: float = 0.75,
) -> float:
    """Okapi BM25 relevance of ``document`` to ``query``.

    Raises if the query has no tokens; returns 0 when no query term
    occurs in the document.
    """
    query_terms = tokenize(query)
    if not query_terms:
        raise ValueError("query is empty after tokenization")
    doc_tokens = tokenize(document)
    tf = Counter(doc_tokens)
    doc_len = len(doc_tokens)
    if stats.avg_doc_len > 0:
        norm = k1 * (1.0 - b + b * doc_len / stats.avg_doc_len)
    else:
        norm = k1
    score = 0.0
    for term in query_terms:
        f = tf.get(term, 0)
        if f == 0:
            continue
        score += stats.idf(term) * f * (k1 + 1.0) / (f + norm)
    return score
