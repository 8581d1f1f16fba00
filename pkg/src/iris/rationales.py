"""Prompt construction, LLM calls and response parsing for rationale
generation.

The implicit prompt instructs the model to emit one rationale per line as
``<label> | <favor>,<against>,<neutral> | <text>`` (scores optional), or
the single marker line ``NONE`` when the post carries no attitude.  The
explicit prompt asks for one free-text linguistic assessment.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .core import ExplicitRationale, ImplicitRationale, Sample
from .errors import ConfigError, ProviderError, ResponseParseError
from .providers import LlmClient, LlmRequest

__all__ = [
    "PromptTemplate",
    "RationaleSet",
    "ParsedSpan",
    "EMPTY_MARKER",
    "default_template",
    "parse_implicit_response",
    "format_implicit_response",
    "gen_implicit",
    "gen_explicit",
    "generate_rationales",
]

EMPTY_MARKER = "NONE"

_LABELS = ("favor", "against", "neutral")


@dataclass(frozen=True)
class PromptTemplate:
    """A named (system, user) prompt pair with {text}/{target} placeholders."""

    name: str
    system: str
    user: str

    def __post_init__(self):
        for placeholder in ("{text}", "{target}"):
            if placeholder not in self.user:
                raise ConfigError(
                    f"template {self.name!r}: user prompt lacks {placeholder}"
                )

    @classmethod
    def from_file(cls, path: str | Path, name: str | None = None) -> "PromptTemplate":
        """Load a template file: system prompt, a ``---`` line, user prompt."""
        path = Path(path)
        return cls._from_text(path.read_text(encoding="utf-8"),
                              name or path.stem)

    @classmethod
    def _from_text(cls, raw: str, name: str) -> "PromptTemplate":
        if "\n---\n" in raw:
            system, user = raw.split("\n---\n", 1)
        else:
            system, user = "You are a helpful assistant.", raw
        return cls(name=name, system=system.strip(), user=user.strip())

    def render(self, sample: Sample) -> tuple[str, str]:
        """Fill the placeholders; plain replacement so braces in post text
        are preserved verbatim."""
        user = self.user.replace("{text}", sample.text)
        user = user.replace("{target}", sample.target)
        return self.system, user


def default_template(name: str) -> PromptTemplate:
    """Load one of the packaged templates (``implicit`` or ``explicit``)."""
    raw = resources.files("iris.templates").joinpath(f"{name}.txt").read_text(
        encoding="utf-8")
    return PromptTemplate._from_text(raw, name)


@dataclass(frozen=True)
class ParsedSpan:
    """One line of a parsed implicit-rationale response."""

    label: str
    scores: tuple[float, float, float] | None
    text: str


@dataclass(frozen=True)
class RationaleSet:
    """All rationales generated for one sample.

    ``llm_stance_scores``, when present, holds one normalized
    favor/against/neutral triple per implicit rationale.
    """

    sample_id: str
    implicit: tuple[ImplicitRationale, ...]
    explicit: ExplicitRationale
    llm_stance_scores: tuple[tuple[float, float, float], ...] | None = None

    def __post_init__(self):
        if self.llm_stance_scores is not None:
            if len(self.llm_stance_scores) != len(self.implicit):
                raise ValueError(
                    "llm_stance_scores must have one triple per rationale")
            for triple in self.llm_stance_scores:
                if abs(sum(triple) - 1.0) > 1e-6:
                    raise ValueError(f"stance score triple {triple} not normalized")

    def to_record(self) -> dict:
        rec = {
            "sample_id": self.sample_id,
            "implicit": [
                {"rid": r.rationale_id, "text": r.text, "verbatim": r.verbatim}
                for r in self.implicit
            ],
            "explicit": self.explicit.text,
            "llm_scores": (
                [list(t) for t in self.llm_stance_scores]
                if self.llm_stance_scores is not None else None
            ),
        }
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "RationaleSet":
        sid = rec["sample_id"]
        implicit = tuple(
            ImplicitRationale(rationale_id=r["rid"], text=r["text"],
                              source_sample=sid, verbatim=r["verbatim"])
            for r in rec["implicit"]
        )
        scores = rec.get("llm_scores")
        return cls(
            sample_id=sid,
            implicit=implicit,
            explicit=ExplicitRationale(text=rec["explicit"], source_sample=sid),
            llm_stance_scores=(
                tuple(tuple(t) for t in scores) if scores is not None else None
            ),
        )


def parse_implicit_response(raw: str) -> list[ParsedSpan]:
    """Parse a delimited implicit-rationale response into spans.

    Raises ResponseParseError (carrying the raw text) on any malformed
    line; the ``NONE`` marker yields an empty list.
    """
    stripped = raw.strip()
    if not stripped or stripped.upper() == EMPTY_MARKER:
        return []
    spans: list[ParsedSpan] = []
    for line in stripped.splitlines():
        line = line.strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split("|")]
        if len(parts) == 3:
            label_part, score_part, text_part = parts
            scores = _parse_scores(score_part, raw)
        elif len(parts) == 2:
            label_part, text_part = parts
            scores = None
        else:
            raise ResponseParseError(
                f"cannot parse rationale line: {line!r}", raw)
        label = label_part.lower()
        if label not in _LABELS:
            raise ResponseParseError(
                f"unknown stance label {label_part!r} in line: {line!r}", raw)
        if not text_part:
            raise ResponseParseError(
                f"empty rationale text in line: {line!r}", raw)
        spans.append(ParsedSpan(label=label, scores=scores, text=text_part))
    return spans


def _parse_scores(score_part: str, raw: str) -> tuple[float, float, float]:
    pieces = score_part.split(",")
    if len(pieces) != 3:
        raise ResponseParseError(
            f"expected three comma-separated scores, got {score_part!r}", raw)
    try:
        values = tuple(float(p) for p in pieces)
    except ValueError:
        raise ResponseParseError(
            f"non-numeric score in {score_part!r}", raw) from None
    if any(v < 0 for v in values) or sum(values) <= 0:
        raise ResponseParseError(
            f"scores must be non-negative with positive sum: {score_part!r}",
            raw)
    return values


def format_implicit_response(spans: list[ParsedSpan]) -> str:
    """Render spans in the wire format; inverse of parse_implicit_response."""
    if not spans:
        return EMPTY_MARKER
    lines = []
    for s in spans:
        if s.scores is not None:
            score_txt = ",".join(repr(v) for v in s.scores)
            lines.append(f"{s.label} | {score_txt} | {s.text}")
        else:
            lines.append(f"{s.label} | {s.text}")
    return "\n".join(lines)


def gen_implicit(
    sample: Sample,
    tpl: PromptTemplate,
    llm: LlmClient,
    model_id: str = "mock",
    error_policy: str = "strict",
) -> tuple[list[ImplicitRationale], list[tuple[float, float, float]] | None]:
    """Generate and parse the implicit rationales for one sample.

    Rationales that are not literal substrings of the post are kept but
    flagged (``verbatim=False``).  Stance score triples are normalized to
    sum 1; they are returned only when every span carried scores.
    """
    system, user = tpl.render(sample)
    req = LlmRequest(model_id=model_id, system_prompt=system, user_prompt=user)
    try:
        raw = llm.complete(req)
        spans = parse_implicit_response(raw)
    except (ResponseParseError, ProviderError):
        if error_policy == "degrade":
            return [], None
        raise
    rationales = []
    for idx, span in enumerate(spans):
        rationales.append(
            ImplicitRationale(
                rationale_id=f"{sample.id}#r{idx:03d}",
                text=span.text,
                source_sample=sample.id,
                verbatim=span.text in sample.text,
            )
        )
    scores = None
    if spans and all(s.scores is not None for s in spans):
        scores = [
            tuple(v / sum(s.scores) for v in s.scores)  # type: ignore[union-attr]
            for s in spans
        ]
    return rationales, scores


def gen_explicit(
    sample: Sample,
    tpl: PromptTemplate,
    llm: LlmClient,
    model_id: str = "mock",
    error_policy: str = "strict",
) -> ExplicitRationale:
    """Generate the single linguistic assessment for one sample."""
    system, user = tpl.render(sample)
    req = LlmRequest(model_id=model_id, system_prompt=system, user_prompt=user)
    try:
        raw = llm.complete(req)
    except ProviderError:
        if error_policy == "degrade":
            return ExplicitRationale(text="", source_sample=sample.id)
        raise
    return ExplicitRationale(text=raw.strip(), source_sample=sample.id)


def generate_rationales(
    sample: Sample,
    implicit_tpl: PromptTemplate,
    explicit_tpl: PromptTemplate,
    llm: LlmClient,
    model_id: str = "mock",
    error_policy: str = "strict",
) -> RationaleSet:
    """Run both prompts for a sample and assemble the RationaleSet."""
    implicit, scores = gen_implicit(sample, implicit_tpl, llm, model_id,
                                    error_policy)
    explicit = gen_explicit(sample, explicit_tpl, llm, model_id, error_policy)
    return RationaleSet(
        sample_id=sample.id,
        implicit=tuple(implicit),
        explicit=explicit,
        llm_stance_scores=tuple(scores) if scores is not None else None,
    )
