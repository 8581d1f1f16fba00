"""Construction of the three unlabeled stance reference documents.

Statements come from a foreign dataset (its gold stances steer bucketing
but never appear in the text); anything too similar to the evaluation
data is filtered out to preserve the zero-shot setting.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import Dataset, Sample, StanceLabel
from .errors import EmptyBucketError
from .providers import EmbeddingClient

__all__ = ["StanceDocuments", "build_documents", "statement_text"]

DEFAULT_SEPARATOR = " [SEP] "


@dataclass(frozen=True)
class StanceDocuments:
    """The favor/against/neutral reference documents plus provenance.

    Documents are newline-joined "text [SEP] target" entries; the builder
    inserts no stance-label tokens anywhere.
    """

    favor_doc: str
    against_doc: str
    neutral_doc: str
    provenance: tuple[tuple[str, str], ...]

    def by_label(self) -> tuple[str, str, str]:
        """Documents in StanceLabel index order."""
        return (self.favor_doc, self.against_doc, self.neutral_doc)

    def save(self, directory: str | Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for name, doc in zip(("favor", "against", "neutral"), self.by_label()):
            (directory / f"{name}.txt").write_text(doc, encoding="utf-8")
        manifest = [{"source_id": sid, "bucket": bucket}
                    for sid, bucket in self.provenance]
        (directory / "provenance.json").write_text(
            json.dumps(manifest, ensure_ascii=False, sort_keys=True, indent=1),
            encoding="utf-8",
        )

    @classmethod
    def load(cls, directory: str | Path) -> "StanceDocuments":
        directory = Path(directory)
        docs = [
            (directory / f"{name}.txt").read_text(encoding="utf-8")
            for name in ("favor", "against", "neutral")
        ]
        manifest = json.loads(
            (directory / "provenance.json").read_text(encoding="utf-8"))
        provenance = tuple((m["source_id"], m["bucket"]) for m in manifest)
        return cls(docs[0], docs[1], docs[2], provenance)


def statement_text(sample: Sample, separator: str = DEFAULT_SEPARATOR) -> str:
    """The representation used both for filtering and inside documents."""
    return f"{sample.text}{separator}{sample.target}"


def _embed_matrix(
    texts: list[str], embedder: EmbeddingClient, workers: int
) -> np.ndarray:
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            vectors = list(pool.map(lambda t: embedder.embed(t).values, texts))
    else:
        vectors = [embedder.embed(t).values for t in texts]
    mat = np.stack(vectors)
    norms = np.linalg.norm(mat, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return mat / norms


def build_documents(
    source: Dataset,
    eval_train: Dataset,
    eval_test: Dataset,
    embedder: EmbeddingClient,
    sim_threshold: float = 0.05,
    max_per_bucket: int = 200,
    separator: str = DEFAULT_SEPARATOR,
    workers: int = 1,
) -> StanceDocuments:
    """Filter foreign statements against the evaluation data and bucket them.

    A statement is admitted only when its maximum cosine similarity over
    every train and test embedding is strictly below ``sim_threshold``.
    Buckets are capped at ``max_per_bucket`` statements, most novel
    (lowest maximum similarity) first.  An empty bucket aborts the build,
    since a ranker cannot score against a missing document.
    """
    labeled = [s for s in source.samples if s.gold is not None]
    if not labeled:
        raise EmptyBucketError("source dataset has no labeled statements")
    eval_samples = list(eval_train.samples) + list(eval_test.samples)
    if not eval_samples:
        raise EmptyBucketError("evaluation datasets are empty")

    source_texts = [statement_text(s, separator) for s in labeled]
    eval_texts = [statement_text(s, separator) for s in eval_samples]
    src_mat = _embed_matrix(source_texts, embedder, workers)
    eval_mat = _embed_matrix(eval_texts, embedder, workers)

    # rows: source statements; max similarity against any eval sample
    max_sim = (src_mat @ eval_mat.T).max(axis=1)

    buckets: dict[StanceLabel, list[tuple[float, int]]] = {
        label: [] for label in StanceLabel
    }
    for idx, sample in enumerate(labeled):
        if max_sim[idx] < sim_threshold:
            buckets[sample.gold].append((float(max_sim[idx]), idx))

    for label, entries in buckets.items():
        if not entries:
            raise EmptyBucketError(
                f"no {label.to_string()} statements survived the similarity "
                f"filter (threshold {sim_threshold}); raise the threshold or "
                f"use a different source dataset"
            )

    docs: dict[StanceLabel, str] = {}
    provenance: list[tuple[str, str]] = []
    for label in StanceLabel:
        entries = sorted(buckets[label])[:max_per_bucket]
        lines = [source_texts[idx] for _, idx in entries]
        docs[label] = "\n".join(lines)
        provenance.extend(
            (labeled[idx].id, label.to_string()) for _, idx in entries)

    return StanceDocuments(
        favor_doc=docs[StanceLabel.FAVOR],
        against_doc=docs[StanceLabel.AGAINST],
        neutral_doc=docs[StanceLabel.NEUTRAL],
        provenance=tuple(provenance),
    )
