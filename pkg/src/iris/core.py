"""Domain types, the canonical dataset format, and dataset adapters.

The canonical interchange format is JSON Lines: one record per line with
fields ``id``, ``text``, ``target`` and optional ``stance``.  Adapters
normalize the published VAST / EZ-STANCE CSV layouts into it once, up
front, so every later stage works from a single stable contract.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from enum import Enum, IntEnum
from pathlib import Path

from .errors import DatasetFormatError

__all__ = [
    "StanceLabel",
    "Split",
    "Sample",
    "Dataset",
    "ImplicitRationale",
    "ExplicitRationale",
    "load_canonical",
    "save_canonical",
    "adapt_vast",
    "adapt_ez",
]


class StanceLabel(IntEnum):
    """The three stance classes, ordered for vector indexing."""

    FAVOR = 0
    AGAINST = 1
    NEUTRAL = 2

    @classmethod
    def from_string(cls, s: str) -> "StanceLabel":
        """Map a label string to a StanceLabel, case-insensitively.

        Accepts the canonical names plus the aliases used by the public
        datasets (``pro``/``con`` and ``none``).
        """
        key = s.strip().lower()
        try:
            return _LABEL_ALIASES[key]
        except KeyError:
            raise DatasetFormatError(f"unknown stance label: {s!r}") from None

    def to_string(self) -> str:
        return self.name.lower()


_LABEL_ALIASES = {
    "favor": StanceLabel.FAVOR,
    "pro": StanceLabel.FAVOR,
    "against": StanceLabel.AGAINST,
    "con": StanceLabel.AGAINST,
    "neutral": StanceLabel.NEUTRAL,
    "none": StanceLabel.NEUTRAL,
}


class Split(Enum):
    TRAIN = "train"
    DEV = "dev"
    TEST = "test"


@dataclass(frozen=True)
class Sample:
    """One (text, target, optional gold stance) record."""

    id: str
    text: str
    target: str
    gold: StanceLabel | None = None

    def __post_init__(self):
        if not self.text:
            raise DatasetFormatError(f"sample {self.id!r}: empty text")
        if not self.target:
            raise DatasetFormatError(f"sample {self.id!r}: empty target")


@dataclass(frozen=True)
class Dataset:
    """An ordered, immutable collection of samples for one split."""

    name: str
    split: Split
    samples: tuple[Sample, ...]

    def __post_init__(self):
        ids = [s.id for s in self.samples]
        if len(set(ids)) != len(ids):
            dup = next(i for i in ids if ids.count(i) > 1)
            raise DatasetFormatError(
                f"dataset {self.name!r}: duplicate sample id {dup!r}"
            )

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)


@dataclass(frozen=True)
class ImplicitRationale:
    """A text span evidencing a stance, extracted from one sample.

    ``verbatim`` is False when the span is not a literal substring of the
    source text (LLMs paraphrase); such rationales are kept but flagged.
    """

    rationale_id: str
    text: str
    source_sample: str
    verbatim: bool = True

    def __post_init__(self):
        if not self.text:
            raise DatasetFormatError(
                f"rationale {self.rationale_id!r}: empty text"
            )


@dataclass(frozen=True)
class ExplicitRationale:
    """The single free-text linguistic assessment of one sample.

    Empty text is permitted only under the "degrade" error policy, when
    the LLM provider failed for this sample.
    """

    text: str
    source_sample: str


def load_canonical(path: str | Path, name: str = "", split: Split = Split.TRAIN) -> Dataset:
    """Load a canonical JSONL dataset.

    Every line must be a JSON object with non-empty ``id``, ``text`` and
    ``target``; ``stance`` may be absent or null for unlabeled data.
    Malformed lines are reported with their 1-based line number.
    """
    path = Path(path)
    samples: list[Sample] = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise DatasetFormatError(
                    f"{path}:{lineno}: invalid JSON ({e.msg})"
                ) from None
            for key in ("id", "text", "target"):
                if key not in rec or not rec[key]:
                    raise DatasetFormatError(
                        f"{path}:{lineno}: missing or empty field {key!r}"
                    )
            stance = rec.get("stance")
            gold = StanceLabel.from_string(stance) if stance is not None else None
            try:
                samples.append(
                    Sample(id=str(rec["id"]), text=rec["text"],
                           target=rec["target"], gold=gold)
                )
            except DatasetFormatError as e:
                raise DatasetFormatError(f"{path}:{lineno}: {e}") from None
    return Dataset(name=name or path.stem, split=split, samples=tuple(samples))


def save_canonical(dataset: Dataset, path: str | Path) -> None:
    """Write a dataset in the canonical JSONL format (stable byte output)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for s in dataset.samples:
            rec = {
                "id": s.id,
                "text": s.text,
                "target": s.target,
                "stance": s.gold.to_string() if s.gold is not None else None,
            }
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True))
            fh.write("\n")


# The public VAST release encodes stances as integers; the convention below
# is a property of the dataset files, not of this package, and can be
# overridden if a future release drifts.
VAST_LABEL_MAP = {1: StanceLabel.FAVOR, 0: StanceLabel.AGAINST, 2: StanceLabel.NEUTRAL}

_VAST_TEXT_COLS = ("post", "text")
_VAST_TARGET_COLS = ("new_topic", "topic_str", "topic", "target")
_VAST_LABEL_COLS = ("label", "stance")


def _pick_column(fieldnames, candidates, path, kind):
    for c in candidates:
        if c in fieldnames:
            return c
    raise DatasetFormatError(
        f"{path}: no {kind} column found (looked for {', '.join(candidates)})"
    )


def adapt_vast(
    path: str | Path,
    split: Split,
    label_map: dict[int, StanceLabel] | None = None,
) -> Dataset:
    """Normalize a VAST CSV into the canonical dataset.

    Integer labels map 1 -> favor (pro), 0 -> against (con), 2 -> neutral
    by default; ids are synthesized from the row index so ordering is
    stable across loads.
    """
    path = Path(path)
    label_map = label_map or VAST_LABEL_MAP
    samples: list[Sample] = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DatasetFormatError(f"{path}: empty CSV")
        text_col = _pick_column(reader.fieldnames, _VAST_TEXT_COLS, path, "text")
        target_col = _pick_column(reader.fieldnames, _VAST_TARGET_COLS, path, "target")
        label_col = _pick_column(reader.fieldnames, _VAST_LABEL_COLS, path, "label")
        for idx, row in enumerate(reader):
            try:
                label = int(row[label_col])
            except (TypeError, ValueError):
                raise DatasetFormatError(
                    f"{path}: row {idx}: non-integer label {row[label_col]!r}"
                ) from None
            if label not in label_map:
                raise DatasetFormatError(
                    f"{path}: row {idx}: label {label} outside "
                    f"{sorted(label_map)}"
                )
            samples.append(
                Sample(
                    id=f"vast-{split.value}-{idx}",
                    text=row[text_col],
                    target=row[target_col],
                    gold=label_map[label],
                )
            )
    return Dataset(name="vast", split=split, samples=tuple(samples))


_EZ_TEXT_COLS = ("Text", "text")
_EZ_TARGET_COLS = ("Target 1", "Target", "target")
_EZ_LABEL_COLS = ("Stance 1", "Stance", "stance")


def adapt_ez(path: str | Path, split: Split) -> Dataset:
    """Normalize an EZ-STANCE subtask-A (noun-phrase target) CSV.

    String labels are mapped case-insensitively; ``NONE`` is accepted as
    an alias for neutral.  Empty target cells are rejected.
    """
    path = Path(path)
    samples: list[Sample] = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DatasetFormatError(f"{path}: empty CSV")
        text_col = _pick_column(reader.fieldnames, _EZ_TEXT_COLS, path, "text")
        target_col = _pick_column(reader.fieldnames, _EZ_TARGET_COLS, path, "target")
        label_col = _pick_column(reader.fieldnames, _EZ_LABEL_COLS, path, "label")
        for idx, row in enumerate(reader):
            try:
                gold = StanceLabel.from_string(row[label_col] or "")
                sample = Sample(
                    id=f"ez-{split.value}-{idx}",
                    text=row[text_col],
                    target=row[target_col],
                    gold=gold,
                )
            except DatasetFormatError as e:
                raise DatasetFormatError(f"{path}: row {idx}: {e}") from None
            samples.append(sample)
    return Dataset(name="ez", split=split, samples=tuple(samples))
