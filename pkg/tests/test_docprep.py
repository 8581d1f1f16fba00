"""Stance-document construction and the similarity leakage filter."""

import numpy as np
import pytest

from oracles import pairwise_max_cosine
from iris.core import Dataset, Sample, Split, StanceLabel
from iris.docprep import build_documents, statement_text
from iris.errors import EmptyBucketError
from iris.providers import DiskCache, EmbeddingClient, HashEmbedder


def _dataset(rows, name="d", split=Split.TRAIN):
    samples = tuple(
        Sample(id=f"{name}-{i}", text=text, target=target, gold=gold)
        for i, (text, target, gold) in enumerate(rows)
    )
    return Dataset(name=name, split=split, samples=samples)


@pytest.fixture()
def embedder(tmp_path):
    return EmbeddingClient(HashEmbedder(dim=64), dim=64,
                           cache=DiskCache(tmp_path / "cache"))


EVAL_TRAIN = _dataset([
    ("the levy deserves support", "levy", StanceLabel.FAVOR),
    ("the levy must be stopped", "levy", StanceLabel.AGAINST),
], name="ev-train")

EVAL_TEST = _dataset([
    ("a report summarized the levy", "levy", StanceLabel.NEUTRAL),
], name="ev-test", split=Split.TEST)


class TestFilter:
    def test_exact_duplicate_excluded(self, embedder):
        dup = EVAL_TRAIN.samples[0]
        source = _dataset(
            [(dup.text, dup.target, StanceLabel.FAVOR)] + [
                (f"unrelated sentence number {i}", f"topic {i}",
                 StanceLabel(i % 3))
                for i in range(9)
            ],
            name="src",
        )
        docs = build_documents(source, EVAL_TRAIN, EVAL_TEST, embedder,
                               sim_threshold=0.9)
        included = {sid for sid, _ in docs.provenance}
        assert "src-0" not in included       # cosine 1.0 with an eval sample
        assert len(included) == 9

    def test_orthogonal_statement_included(self, embedder):
        # hash embeddings of distinct strings are independent directions;
        # with a generous threshold everything non-identical is admitted
        source = _dataset([
            (f"statement {i}", f"topic {i}", StanceLabel(i % 3))
            for i in range(6)
        ], name="src")
        docs = build_documents(source, EVAL_TRAIN, EVAL_TEST, embedder,
                               sim_threshold=0.999)
        assert len(docs.provenance) == 6

    def test_filter_agrees_with_exhaustive_pairwise_oracle(self, embedder):
        source = _dataset([
            (f"source text {i}", f"target {i}", StanceLabel(i % 3))
            for i in range(6)
        ], name="src")
        threshold = 0.18
        eval_samples = list(EVAL_TRAIN.samples) + list(EVAL_TEST.samples)
        src_vecs = [embedder.embed(statement_text(s)).values
                    for s in source.samples]
        eval_vecs = [embedder.embed(statement_text(s)).values
                     for s in eval_samples]
        max_sims = pairwise_max_cosine(src_vecs, eval_vecs)
        expected = {s.id for s, m in zip(source.samples, max_sims)
                    if m < threshold}
        assert expected, "fixture must admit at least one statement"
        try:
            docs = build_documents(source, EVAL_TRAIN, EVAL_TEST, embedder,
                                   sim_threshold=threshold)
            included = {sid for sid, _ in docs.provenance}
        except EmptyBucketError:
            # legitimate when some class lost all its statements; the
            # oracle must then agree that a bucket went empty
            by_class = {label: 0 for label in StanceLabel}
            for s, m in zip(source.samples, max_sims):
                if m < threshold:
                    by_class[s.gold] += 1
            assert min(by_class.values()) == 0
            return
        assert included == expected

    def test_included_statements_verified_below_threshold(self, embedder):
        source = _dataset([
            (f"completely different wording {i}", f"subject {i}",
             StanceLabel(i % 3))
            for i in range(9)
        ], name="src")
        threshold = 0.5
        docs = build_documents(source, EVAL_TRAIN, EVAL_TEST, embedder,
                               sim_threshold=threshold)
        included_ids = {sid for sid, _ in docs.provenance}
        eval_vecs = [embedder.embed(statement_text(s)).values
                     for s in list(EVAL_TRAIN.samples) + list(EVAL_TEST.samples)]
        for sample in source.samples:
            if sample.id in included_ids:
                vec = embedder.embed(statement_text(sample)).values
                assert max(pairwise_max_cosine([vec], eval_vecs)) < threshold

    def test_empty_bucket_is_instructive_error(self, embedder):
        source = _dataset([
            ("only favor statement", "x", StanceLabel.FAVOR),
            ("only against statement", "y", StanceLabel.AGAINST),
        ], name="src")
        with pytest.raises(EmptyBucketError, match="neutral"):
            build_documents(source, EVAL_TRAIN, EVAL_TEST, embedder,
                            sim_threshold=0.99)


class TestDocuments:
    def _docs(self, embedder, **kwargs):
        source = _dataset([
            (f"statement number {i} about things", f"topic {i}",
             StanceLabel(i % 3))
            for i in range(12)
        ], name="src")
        return build_documents(source, EVAL_TRAIN, EVAL_TEST, embedder,
                               sim_threshold=0.999, **kwargs)

    def test_builder_adds_no_label_tokens(self, embedder):
        docs = self._docs(embedder)
        for doc in docs.by_label():
            for line in doc.splitlines():
                # entries are exactly "text [SEP] target"; the builder
                # itself never writes a stance word anywhere
                assert " [SEP] " in line
                text_part, target_part = line.split(" [SEP] ")
                assert text_part.startswith("statement number")
                assert target_part.startswith("topic")

    def test_entries_use_separator_and_bucket_by_gold(self, embedder):
        docs = self._docs(embedder)
        assert all(sid.startswith("src-") for sid, _ in docs.provenance)
        buckets = {b for _, b in docs.provenance}
        assert buckets == {"favor", "against", "neutral"}
        # 12 statements, one class each third
        assert len(docs.favor_doc.splitlines()) == 4
        assert len(docs.against_doc.splitlines()) == 4
        assert len(docs.neutral_doc.splitlines()) == 4

    def test_bucket_cap_keeps_most_novel(self, embedder):
        docs = self._docs(embedder, max_per_bucket=2)
        assert len(docs.favor_doc.splitlines()) == 2
        assert len(docs.provenance) == 6

    def test_deterministic_bytes(self, embedder, tmp_path):
        a = self._docs(embedder)
        b = self._docs(embedder)
        assert a == b
        a.save(tmp_path / "docs")
        from iris.docprep import StanceDocuments

        again = StanceDocuments.load(tmp_path / "docs")
        assert again.by_label() == a.by_label()
        assert again.provenance == a.provenance
