"""Synthetic three-class corpus and rule-based mock LLM for end-to-end
exercises.

Texts are built from class-indicative lexicons over disjoint target
vocabularies, so the token-overlap mock reranker and the token-hash mock
embedder give the pipeline a real (if artificial) signal to learn from.
The mock LLM parses the post back out of the prompt and emits one
rationale line per clause, scored by lexicon overlap.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .core import Dataset, Sample, Split, StanceLabel, save_canonical
from .errors import ProviderError
from .providers import LlmRequest, tokenize

__all__ = ["Lexicon", "SyntheticStanceLlm", "make_samples", "make_fixture"]

_DEFAULT_LEXICON = {
    "favor": ["praise", "backing", "hopeful", "thrive", "embrace",
              "champion", "uplift", "glowing"],
    "against": ["oppose", "reject", "harmful", "condemn", "failure",
                "resist", "dreadful", "blight"],
    "neutral": ["reportedly", "overview", "records", "timeline", "update",
                "catalog", "digest", "bulletin"],
}

_FILLER = ["the", "city", "council", "plan", "residents", "about", "this",
           "measure", "proposal", "local"]

_EVAL_TARGETS = ["transit levy", "river park", "library funding",
                 "zoning reform", "school bond", "bike lanes"]

_SOURCE_TARGETS = ["harbor dredging", "night market", "water tariff",
                   "museum annex", "festival permit", "orchard grant"]


@dataclass(frozen=True)
class Lexicon:
    """Class-indicative token lists, one per stance."""

    favor: tuple[str, ...]
    against: tuple[str, ...]
    neutral: tuple[str, ...]

    @classmethod
    def default(cls) -> "Lexicon":
        return cls(
            favor=tuple(_DEFAULT_LEXICON["favor"]),
            against=tuple(_DEFAULT_LEXICON["against"]),
            neutral=tuple(_DEFAULT_LEXICON["neutral"]),
        )

    def by_label(self) -> tuple[tuple[str, ...], ...]:
        return (self.favor, self.against, self.neutral)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps({
            "favor": list(self.favor),
            "against": list(self.against),
            "neutral": list(self.neutral),
        }, sort_keys=True, indent=1), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Lexicon":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(favor=tuple(data["favor"]), against=tuple(data["against"]),
                   neutral=tuple(data["neutral"]))


def _stance_clause(rng: np.random.Generator, lexicon_words: tuple[str, ...],
                   fillers: list[str]) -> str:
    words = list(rng.choice(lexicon_words, size=3, replace=False))
    words += list(rng.choice(fillers, size=2, replace=False))
    rng.shuffle(words)
    return " ".join(words)


def _filler_clause(rng: np.random.Generator) -> str:
    return " ".join(rng.choice(_FILLER, size=4, replace=False))


def make_samples(
    n: int,
    split: Split,
    seed: int,
    targets: list[str] | None = None,
    lexicon: Lexicon | None = None,
    prefix: str = "syn",
    noise_rate: float = 0.1,
) -> Dataset:
    """Balanced synthetic samples: two stance clauses, one filler clause,
    and occasionally one off-class clause as noise."""
    lexicon = lexicon or Lexicon.default()
    targets = targets if targets is not None else _EVAL_TARGETS
    rng = np.random.default_rng(seed)
    samples = []
    for i in range(n):
        gold = StanceLabel(i % 3)
        words = lexicon.by_label()[int(gold)]
        clauses = [
            _stance_clause(rng, words, _FILLER),
            _stance_clause(rng, words, _FILLER),
            _filler_clause(rng),
        ]
        if rng.random() < noise_rate:
            other = StanceLabel((int(gold) + 1 + int(rng.integers(2))) % 3)
            clauses.append(
                _stance_clause(rng, lexicon.by_label()[int(other)], _FILLER))
        rng.shuffle(clauses)
        samples.append(Sample(
            id=f"{prefix}-{split.value}-{i:04d}",
            text=". ".join(clauses) + ".",
            target=str(rng.choice(targets)),
            gold=gold,
        ))
    return Dataset(name=prefix, split=split, samples=tuple(samples))


_PROMPT_TAIL = re.compile(r"Target:\s*(?P<target>.*?)\s*\nPost:\s*(?P<post>.*)\Z",
                          re.DOTALL)


class SyntheticStanceLlm:
    """Rule-based LLM stand-in for the packaged prompt templates.

    It recovers the post from the prompt's trailing ``Target:``/``Post:``
    lines, splits it into clauses, and labels each clause by lexicon
    overlap; clauses without stance tokens come back with near-uniform
    scores.  Prompts without the expected trailer are rejected the same
    way a broken remote endpoint would be.
    """

    def __init__(self, lexicon: Lexicon | None = None):
        self.lexicon = lexicon or Lexicon.default()
        self._sets = tuple(frozenset(words) for words in self.lexicon.by_label())

    def _clause_counts(self, clause: str) -> np.ndarray:
        tokens = tokenize(clause)
        return np.array([
            float(sum(1 for t in tokens if t in s)) for s in self._sets
        ])

    def complete(self, req: LlmRequest) -> str:
        match = _PROMPT_TAIL.search(req.user_prompt)
        if match is None:
            raise ProviderError("synthetic LLM cannot locate Target:/Post: "
                                "lines in the prompt")
        post = match.group("post").strip()
        if "favor score" in req.user_prompt:
            return self._implicit_response(post)
        return self._explicit_response(post)

    def _implicit_response(self, post: str) -> str:
        clauses = [c.strip() for c in post.split(".") if c.strip()]
        lines = []
        for clause in clauses:
            counts = self._clause_counts(clause)
            if counts.sum() == 0:
                scores = np.array([0.34, 0.33, 0.33])
                label = "neutral"
            else:
                scores = (counts + 0.05) / (counts + 0.05).sum()
                label = StanceLabel(int(counts.argmax())).to_string()
            score_txt = ",".join(repr(round(float(s), 6)) for s in scores)
            lines.append(f"{label} | {score_txt} | {clause}")
        return "\n".join(lines) if lines else "NONE"

    def _explicit_response(self, post: str) -> str:
        counts = self._clause_counts(post)
        tokens = tokenize(post)
        tones = ["an embracing, communal tone",
                 "a condemning, absolutist tone",
                 "a detached, record-keeping tone"]
        dominant = int(counts.argmax()) if counts.sum() > 0 else 2
        cue_set = self._sets[dominant]
        cues = sorted({t for t in tokens if t in cue_set})[:3]
        cue_txt = " ".join(cues) if cues else "plain wording"
        return (f"The post carries {tones[dominant]}; its agency and "
                f"concreteness show through words like {cue_txt}.")


@dataclass(frozen=True)
class FixturePaths:
    root: Path
    train: Path
    dev: Path
    test: Path
    source: Path
    lexicon: Path
    config: Path


def make_fixture(
    out_dir: str | Path,
    n_train: int = 300,
    n_dev: int = 60,
    n_test: int = 100,
    n_source: int = 120,
    seed: int = 13,
    epochs: int = 30,
    lr: float = 0.01,
    k: int = 3,
    beta: float = 0.1,
    q: float = 0.5,
    workers: int = 1,
) -> FixturePaths:
    """Write a complete synthetic corpus plus a ready-to-run config.

    The document-prep similarity threshold is set high (0.95): mock hash
    embeddings are not semantic, so the filter's job here is to drop the
    exact duplicates planted in the source set.
    """
    out_dir = Path(out_dir)
    data_dir = out_dir / "data"
    data_dir.mkdir(parents=True, exist_ok=True)
    lexicon = Lexicon.default()

    train = make_samples(n_train, Split.TRAIN, seed, lexicon=lexicon)
    dev = make_samples(n_dev, Split.DEV, seed + 1, lexicon=lexicon)
    test = make_samples(n_test, Split.TEST, seed + 2, lexicon=lexicon)
    source = make_samples(n_source, Split.TRAIN, seed + 3,
                          targets=_SOURCE_TARGETS, lexicon=lexicon,
                          prefix="src", noise_rate=0.0)
    # plant duplicates of eval samples; the similarity filter must drop them
    dup_samples = [
        Sample(id=f"src-dup-{i}", text=s.text, target=s.target, gold=s.gold)
        for i, s in enumerate(train.samples[:3])
    ]
    source = Dataset(name=source.name, split=source.split,
                     samples=source.samples + tuple(dup_samples))

    paths = FixturePaths(
        root=out_dir,
        train=data_dir / "train.jsonl",
        dev=data_dir / "dev.jsonl",
        test=data_dir / "test.jsonl",
        source=data_dir / "source.jsonl",
        lexicon=data_dir / "lexicon.json",
        config=out_dir / "config.yaml",
    )
    save_canonical(train, paths.train)
    save_canonical(dev, paths.dev)
    save_canonical(test, paths.test)
    save_canonical(source, paths.source)
    lexicon.save(paths.lexicon)

    config = {
        "run": {
            "out_dir": str(out_dir / "run"),
            "seed": seed,
            "train_fraction": 1.0,
            "error_policy": "strict",
            "workers": workers,
        },
        "data": {
            "train": str(paths.train),
            "dev": str(paths.dev),
            "test": str(paths.test),
            "source": str(paths.source),
        },
        "llm": {"kind": "synthetic", "model": "synthetic-stance",
                "lexicon": str(paths.lexicon)},
        "embed": {"kind": "token-hash", "model": "mock-token-hash",
                  "dim": 64},
        "rerank": {"kind": "token-overlap", "model": "mock-overlap"},
        "cache": {"dir": str(out_dir / "cache")},
        "net": {"max_concurrency": workers, "retries": 3},
        "docprep": {"threshold": 0.95, "max_per_bucket": 200},
        "rank": {"scorer": "reranker"},
        "select": {"threshold": 0.3, "k": k, "epsilon": 1e-6},
        "train": {
            "lr": lr, "batch_size": 32, "beta": beta, "q": q,
            "epochs": epochs, "vote_mode": "relevant-explicit",
            "dense_dim": 32,
        },
    }
    paths.config.write_text(yaml.safe_dump(config, sort_keys=True),
                            encoding="utf-8")
    return paths
