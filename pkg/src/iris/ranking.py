"""Relevance scoring of rationales against the three stance documents.

Each rationale is rendered as a query (instruction first, then the
rationale, then the target behind a separator) and scored against the
favor/against/neutral documents by the configured ranker; the raw triple
is normalized to a probability profile by a numerically stable softmax
with an optional learnable per-class affine calibration.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .docprep import StanceDocuments
from .errors import ConfigError
from .providers import (
    CorpusStats,
    EmbeddingClient,
    LlmClient,
    LlmRequest,
    RerankClient,
    RerankRequest,
    bm25_score,
)

__all__ = [
    "SCORER_KINDS",
    "Calibration",
    "RankingQuery",
    "RelevanceProfile",
    "build_instruction",
    "default_instruction",
    "softmax3",
    "RationaleRanker",
]

SCORER_KINDS = ("reranker", "bm25", "cosine", "llm-rank", "llm-scores")

DEFAULT_TARGET_SEP = " [TGT] "


def default_instruction() -> str:
    return resources.files("iris.templates").joinpath(
        "ranking_instruction.txt").read_text(encoding="utf-8").strip()


def build_instruction(tpl: str, use_instruction: bool = True) -> str:
    """The instruction prepended to every query.

    The no-instruction ablation returns an empty string.
    """
    if not use_instruction:
        return ""
    if not tpl:
        raise ConfigError("instruction template is empty")
    return tpl.strip()


@dataclass(frozen=True)
class RankingQuery:
    """A rationale rendered as a retrieval query.

    ``rendered`` is the full single-string form (instruction, rationale,
    separator, target); ``query_body`` is the same without the
    instruction, for rankers that accept the instruction separately.
    """

    instruction: str
    rationale_text: str
    target: str
    rendered: str
    query_body: str

    @classmethod
    def build(
        cls,
        instruction: str,
        rationale_text: str,
        target: str,
        use_target: bool = True,
        target_sep: str = DEFAULT_TARGET_SEP,
    ) -> "RankingQuery":
        body = rationale_text
        if use_target:
            body = f"{rationale_text}{target_sep}{target}"
        rendered = f"{instruction} {body}" if instruction else body
        return cls(
            instruction=instruction,
            rationale_text=rationale_text,
            target=target,
            rendered=rendered,
            query_body=body,
        )


@dataclass
class Calibration:
    """Per-class affine on raw ranker scores: z_j = w_j * r_j + b_j.

    This is the only trainable parameter of the ranking stage; with the
    identity values (w=1, b=0) the stage behaves exactly like a frozen
    ranker.
    """

    scale: np.ndarray = field(default_factory=lambda: np.ones(3))
    bias: np.ndarray = field(default_factory=lambda: np.zeros(3))
    trainable: bool = True

    def __post_init__(self):
        self.scale = np.asarray(self.scale, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.scale.shape != (3,) or self.bias.shape != (3,):
            raise ValueError("calibration parameters must have shape (3,)")
        if not (np.all(np.isfinite(self.scale)) and np.all(np.isfinite(self.bias))):
            raise ValueError("calibration parameters must be finite")

    @classmethod
    def identity(cls, trainable: bool = True) -> "Calibration":
        return cls(trainable=trainable)

    def apply(self, raw: np.ndarray) -> np.ndarray:
        return self.scale * raw + self.bias

    def copy(self) -> "Calibration":
        return Calibration(scale=self.scale.copy(), bias=self.bias.copy(),
                           trainable=self.trainable)


def softmax3(raw, cal: Calibration | None = None) -> np.ndarray:
    """Stable softmax of a calibrated score triple.

    Shifts by the maximum before exponentiating, so scores up to 1e3 (and
    far beyond) neither overflow nor lose the probability normalization.
    """
    z = np.asarray(raw, dtype=np.float64)
    if z.shape != (3,):
        raise ValueError("expected a score triple")
    if not np.all(np.isfinite(z)):
        raise ValueError(f"non-finite scores: {z}")
    if cal is not None:
        z = cal.apply(z)
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


@dataclass(frozen=True)
class RelevanceProfile:
    """Raw and softmaxed relevance of one rationale toward the stances."""

    rationale_id: str
    raw: tuple[float, float, float]
    probs: tuple[float, float, float]

    @classmethod
    def from_raw(cls, rationale_id: str, raw, cal: Calibration | None = None
                 ) -> "RelevanceProfile":
        probs = softmax3(raw, cal)
        return cls(
            rationale_id=rationale_id,
            raw=tuple(float(x) for x in raw),
            probs=tuple(float(p) for p in probs),
        )

    def to_record(self) -> dict:
        return {"rid": self.rationale_id, "raw": list(self.raw),
                "probs": list(self.probs)}

    @classmethod
    def from_record(cls, rec: dict) -> "RelevanceProfile":
        return cls(rationale_id=rec["rid"], raw=tuple(rec["raw"]),
                   probs=tuple(rec["probs"]))


_NUMBER = re.compile(r"-?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?")


def _load_llm_ranker_template() -> tuple[str, str]:
    raw = resources.files("iris.templates").joinpath("llm_ranker.txt").read_text(
        encoding="utf-8")
    system, user = raw.split("\n---\n", 1)
    return system.strip(), user.strip()


class RationaleRanker:
    """Scores queries against a fixed set of stance documents.

    ``kind`` selects the backend: the pairwise reranker, BM25 over the
    three documents, cosine similarity of embeddings, the LLM prompted as
    a ranker, or the LLM-reported stance scores stored alongside the
    rationales.
    """

    def __init__(
        self,
        kind: str,
        docs: StanceDocuments,
        reranker: RerankClient | None = None,
        embedder: EmbeddingClient | None = None,
        llm: LlmClient | None = None,
        llm_model: str = "mock",
        bm25_k1: float = 1.5,
        bm25_b: float = 0.75,
    ):
        if kind not in SCORER_KINDS:
            raise ConfigError(
                f"unknown scorer {kind!r}; expected one of {SCORER_KINDS}")
        self.kind = kind
        self.docs = docs
        self.reranker = reranker
        self.embedder = embedder
        self.llm = llm
        self.llm_model = llm_model
        self.bm25_k1 = bm25_k1
        self.bm25_b = bm25_b
        self._stats: CorpusStats | None = None
        self._doc_vectors: list[np.ndarray] | None = None
        if kind == "reranker" and reranker is None:
            raise ConfigError("scorer 'reranker' requires a reranker client")
        if kind == "cosine" and embedder is None:
            raise ConfigError("scorer 'cosine' requires an embedding client")
        if kind == "llm-rank" and llm is None:
            raise ConfigError("scorer 'llm-rank' requires an LLM client")

    def score_rationale(
        self,
        q: RankingQuery,
        llm_scores: tuple[float, float, float] | None = None,
    ) -> tuple[float, float, float]:
        """Raw (favor, against, neutral) relevance scores for one query."""
        if self.kind == "llm-scores":
            if llm_scores is None:
                raise ValueError(
                    "llm-scores mode requires stored stance scores for "
                    f"rationale query {q.rationale_text!r}")
            return tuple(float(x) for x in llm_scores)
        documents = self.docs.by_label()
        if self.kind == "reranker":
            return tuple(
                self.reranker.score(RerankRequest(
                    instruction=q.instruction, query=q.query_body, document=d))
                for d in documents
            )
        if self.kind == "bm25":
            if self._stats is None:
                self._stats = CorpusStats.from_documents(list(documents))
            return tuple(
                bm25_score(q.rendered, d, self._stats, self.bm25_k1, self.bm25_b)
                for d in documents
            )
        if self.kind == "cosine":
            if self._doc_vectors is None:
                self._doc_vectors = [
                    self.embedder.embed(d).values for d in documents]
            qv = self.embedder.embed(q.rendered).values
            qn = np.linalg.norm(qv)
            out = []
            for dv in self._doc_vectors:
                dn = np.linalg.norm(dv)
                out.append(float(qv @ dv / (qn * dn)) if qn > 0 and dn > 0 else 0.0)
            return tuple(out)
        # llm-rank: prompt the LLM for a numeric relevance per document,
        # falling back to 0 when the reply is not parseable.
        system, user_tpl = _load_llm_ranker_template()
        scores = []
        for d in documents:
            user = (user_tpl
                    .replace("{instruction}", q.instruction or "Judge relevance.")
                    .replace("{query}", q.query_body)
                    .replace("{document}", d))
            try:
                reply = self.llm.complete(LlmRequest(
                    model_id=self.llm_model, system_prompt=system,
                    user_prompt=user))
                match = _NUMBER.search(reply)
                scores.append(float(match.group()) if match else 0.0)
            except Exception:
                scores.append(0.0)
        return tuple(scores)
