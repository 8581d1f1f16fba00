"""Grouping and selection: the relevance determiner and the
KL-divergence greedy diverse selection with subgroup fallback.

A rationale is relevant to its argmax stance when that probability beats
the best of the other two by more than a threshold (strictly).  Within
each of the relevant/irrelevant groups, selection greedily picks the
candidate whose addition brings the running subgroup distribution
closest (in KL divergence) to the group's own availability distribution;
when a subgroup runs dry the greedy step simply keeps choosing among
whatever subgroups remain.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import StanceLabel
from .ranking import RelevanceProfile

__all__ = [
    "RelevanceGroup",
    "RelevanceVerdict",
    "TargetDistribution",
    "SelectionStep",
    "SelectionResult",
    "determine_relevance",
    "target_distribution",
    "select_diverse",
    "group_and_select",
]

DEFAULT_THRESHOLD = 0.3
DEFAULT_EPSILON = 1e-6

# Margins this close to the threshold count as equal, not exceeding it;
# keeps decimal-specified profiles (margin exactly 0.30 vs threshold 0.30)
# on the irrelevant side despite binary floating-point rounding.
THRESHOLD_TOLERANCE = 1e-12


class RelevanceGroup(Enum):
    RELEVANT = "relevant"
    IRRELEVANT = "irrelevant"


@dataclass(frozen=True)
class RelevanceVerdict:
    """Relevance decision for one rationale.

    ``subgroup`` is the argmax stance in both branches (an irrelevant
    rationale still belongs to its argmax subgroup); ``order`` is the
    rationale's position in its sample's rationale list and makes
    tie-breaking independent of candidate list order.
    """

    rationale_id: str
    group: RelevanceGroup
    subgroup: StanceLabel
    margin: float
    order: int = 0

    def to_record(self) -> dict:
        return {
            "rid": self.rationale_id,
            "group": self.group.value,
            "subgroup": self.subgroup.to_string(),
            "margin": self.margin,
            "order": self.order,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "RelevanceVerdict":
        return cls(
            rationale_id=rec["rid"],
            group=RelevanceGroup(rec["group"]),
            subgroup=StanceLabel.from_string(rec["subgroup"]),
            margin=rec["margin"],
            order=rec["order"],
        )


@dataclass(frozen=True)
class TargetDistribution:
    """Subgroup availability ratios (favor, against, neutral)."""

    v: tuple[float, float, float]

    def smoothed(self, epsilon: float = DEFAULT_EPSILON) -> np.ndarray:
        arr = np.asarray(self.v, dtype=np.float64) + epsilon
        return arr / arr.sum()


@dataclass(frozen=True)
class SelectionStep:
    """One greedy choice: which rationale was taken and at what KL value."""

    rationale_id: str
    subgroup: StanceLabel
    kl: float


@dataclass(frozen=True)
class SelectionResult:
    """Ordered greedy selection plus the trace that reconstructs it."""

    selected: tuple[RelevanceVerdict, ...]
    trace: tuple[SelectionStep, ...]

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(v.rationale_id for v in self.selected)

    def to_record(self) -> dict:
        return {
            "selected": [v.rationale_id for v in self.selected],
            "trace": [
                {"rid": s.rationale_id, "subgroup": s.subgroup.to_string(),
                 "kl": s.kl}
                for s in self.trace
            ],
        }


def determine_relevance(
    profile: RelevanceProfile,
    threshold: float = DEFAULT_THRESHOLD,
    order: int = 0,
) -> RelevanceVerdict:
    """Apply the threshold rule to one relevance profile.

    The winning stance is the argmax of the probabilities (ties resolved
    in favor/against/neutral order); the rationale is relevant only when
    the win margin strictly exceeds the threshold.
    """
    probs = np.asarray(profile.probs, dtype=np.float64)
    j = int(np.argmax(probs))  # first max wins, matching StanceLabel order
    others = np.delete(probs, j)
    margin = float(probs[j] - others.max())
    group = (RelevanceGroup.RELEVANT
             if margin > threshold + THRESHOLD_TOLERANCE
             else RelevanceGroup.IRRELEVANT)
    return RelevanceVerdict(
        rationale_id=profile.rationale_id,
        group=group,
        subgroup=StanceLabel(j),
        margin=margin,
        order=order,
    )


def target_distribution(group: list[RelevanceVerdict]) -> TargetDistribution:
    """Subgroup counts normalized by the group total."""
    if not group:
        raise ValueError("cannot compute a target distribution of an "
                         "empty group")
    counts = [0, 0, 0]
    for verdict in group:
        counts[int(verdict.subgroup)] += 1
    total = sum(counts)
    return TargetDistribution(v=tuple(c / total for c in counts))


def _kl_after_adding(
    counts: np.ndarray, subgroup: int, v_smoothed: np.ndarray
) -> float:
    """KL(U_new || V) where U_new is the normalized running count vector
    (epsilon-initialized) after a hypothetical addition to ``subgroup``."""
    u = counts.copy()
    u[subgroup] += 1.0
    u = u / u.sum()
    return float(np.sum(u * np.log(u / v_smoothed)))


def select_diverse(
    group: list[RelevanceVerdict],
    k: int,
    v: TargetDistribution,
    epsilon: float = DEFAULT_EPSILON,
) -> SelectionResult:
    """Greedy KL-divergence selection of up to ``k`` diverse rationales.

    The running distribution starts at (eps, eps, eps) so the KL is
    always defined.  Each iteration evaluates every remaining candidate,
    picks the one minimizing the divergence to the smoothed target
    distribution, and repeats; candidates tying on KL are resolved by
    higher relevance margin, then original rationale order.  Exhausted
    subgroups drop out naturally and selection continues from whatever
    remains, so fewer than ``k`` picks happen only when the whole group
    runs out.
    """
    if k <= 0:
        raise ValueError(f"k must be positive, got {k}")
    if not group:
        return SelectionResult(selected=(), trace=())

    v_smoothed = v.smoothed(epsilon)
    counts = np.full(3, epsilon, dtype=np.float64)
    remaining = list(group)
    selected: list[RelevanceVerdict] = []
    trace: list[SelectionStep] = []

    while len(selected) < k and remaining:
        best = None
        best_key = None
        for candidate in remaining:
            kl = _kl_after_adding(counts, int(candidate.subgroup), v_smoothed)
            key = (kl, -candidate.margin, candidate.order)
            if best_key is None or key < best_key:
                best, best_key = candidate, key
        counts[int(best.subgroup)] += 1.0
        remaining.remove(best)
        selected.append(best)
        trace.append(SelectionStep(
            rationale_id=best.rationale_id,
            subgroup=best.subgroup,
            kl=best_key[0],
        ))
    return SelectionResult(selected=tuple(selected), trace=tuple(trace))


def group_and_select(
    profiles: list[RelevanceProfile],
    threshold: float = DEFAULT_THRESHOLD,
    k: int = 3,
    epsilon: float = DEFAULT_EPSILON,
) -> tuple[list[RelevanceVerdict], SelectionResult, SelectionResult]:
    """Determine relevance for every profile, then run the diverse
    selection independently on the relevant and irrelevant groups.

    Returns (all verdicts, relevant selection, irrelevant selection).
    Each group uses its own availability distribution; an empty group
    yields an empty selection.
    """
    if not profiles:
        raise ValueError("no rationales to group: profile list is empty")
    verdicts = [
        determine_relevance(p, threshold, order=i)
        for i, p in enumerate(profiles)
    ]
    results = {}
    for group_kind in RelevanceGroup:
        members = [v for v in verdicts if v.group is group_kind]
        if not members:
            results[group_kind] = SelectionResult(selected=(), trace=())
            continue
        v = target_distribution(members)
        results[group_kind] = select_diverse(members, k, v, epsilon)
    return (
        verdicts,
        results[RelevanceGroup.RELEVANT],
        results[RelevanceGroup.IRRELEVANT],
    )
