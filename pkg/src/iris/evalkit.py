"""Metrics, multi-run aggregation, stratified subsampling and parameter
sweeps."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Dataset, StanceLabel

__all__ = [
    "ConfusionMatrix",
    "EvalReport",
    "macro_f1",
    "aggregate_runs",
    "stratified_subsample",
    "SweepRow",
    "sweep",
    "sweep_table",
]


@dataclass(frozen=True)
class ConfusionMatrix:
    """3x3 counts; rows are gold labels, columns are predictions."""

    counts: np.ndarray

    @classmethod
    def from_pairs(cls, preds: list[StanceLabel], golds: list[StanceLabel]
                   ) -> "ConfusionMatrix":
        counts = np.zeros((3, 3), dtype=np.int64)
        for p, g in zip(preds, golds):
            counts[int(g), int(p)] += 1
        return cls(counts=counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class EvalReport:
    """Per-class F1 and their unweighted mean for one run."""

    per_class_f1: tuple[float, float, float]
    macro_f1: float
    n: int
    run_seed: int

    def to_record(self) -> dict:
        return {
            "per_class_f1": {
                "favor": self.per_class_f1[0],
                "against": self.per_class_f1[1],
                "neutral": self.per_class_f1[2],
            },
            "macro_f1": self.macro_f1,
            "n": self.n,
            "run_seed": self.run_seed,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "EvalReport":
        pc = rec["per_class_f1"]
        return cls(
            per_class_f1=(pc["favor"], pc["against"], pc["neutral"]),
            macro_f1=rec["macro_f1"],
            n=rec["n"],
            run_seed=rec["run_seed"],
        )


def macro_f1(preds: list[StanceLabel], golds: list[StanceLabel],
             run_seed: int = 0) -> EvalReport:
    """Per-class precision/recall/F1 and their unweighted mean.

    A class with zero precision + recall (including one absent from both
    predictions and golds) scores F1 = 0.
    """
    if len(preds) != len(golds):
        raise ValueError(
            f"length mismatch: {len(preds)} predictions vs {len(golds)} golds")
    if not preds:
        raise ValueError("cannot evaluate an empty prediction list")
    cm = ConfusionMatrix.from_pairs(preds, golds).counts
    f1s = []
    for c in range(3):
        tp = cm[c, c]
        pred_c = cm[:, c].sum()
        gold_c = cm[c, :].sum()
        precision = tp / pred_c if pred_c > 0 else 0.0
        recall = tp / gold_c if gold_c > 0 else 0.0
        f1s.append(2 * precision * recall / (precision + recall)
                   if precision + recall > 0 else 0.0)
    return EvalReport(
        per_class_f1=tuple(float(f) for f in f1s),
        macro_f1=float(np.mean(f1s)),
        n=len(preds),
        run_seed=run_seed,
    )


def aggregate_runs(reports: list[EvalReport]) -> dict:
    """Mean and sample standard deviation of every metric across runs."""
    if not reports:
        raise ValueError("no reports to aggregate")

    def mean_std(values: list[float]) -> dict:
        arr = np.asarray(values, dtype=np.float64)
        std = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
        return {"mean": float(arr.mean()), "std": std}

    return {
        "n_runs": len(reports),
        "macro_f1": mean_std([r.macro_f1 for r in reports]),
        "f1_favor": mean_std([r.per_class_f1[0] for r in reports]),
        "f1_against": mean_std([r.per_class_f1[1] for r in reports]),
        "f1_neutral": mean_std([r.per_class_f1[2] for r in reports]),
        "seeds": [r.run_seed for r in reports],
    }


def stratified_subsample(dataset: Dataset, fraction: float, seed: int
                         ) -> Dataset:
    """Seeded stratified sample of ceil(fraction * N) samples.

    Per-class quotas follow the class ratios (largest-remainder
    apportionment), so reduced-data training regimes keep the original
    label balance.  Sample order is preserved.
    """
    if not 0 < fraction <= 1:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    if fraction == 1.0:
        return dataset
    n_total = len(dataset.samples)
    target = int(np.ceil(fraction * n_total))
    by_class: dict[int, list[int]] = {}
    for idx, sample in enumerate(dataset.samples):
        key = int(sample.gold) if sample.gold is not None else -1
        by_class.setdefault(key, []).append(idx)

    quotas = {}
    remainders = []
    assigned = 0
    for key, indices in sorted(by_class.items()):
        exact = target * len(indices) / n_total
        quotas[key] = int(exact)
        assigned += quotas[key]
        remainders.append((-(exact - int(exact)), key))
    for _, key in sorted(remainders):
        if assigned >= target:
            break
        if quotas[key] < len(by_class[key]):
            quotas[key] += 1
            assigned += 1

    rng = np.random.default_rng(seed)
    chosen: list[int] = []
    for key, indices in sorted(by_class.items()):
        take = min(quotas[key], len(indices))
        picked = rng.choice(len(indices), size=take, replace=False)
        chosen.extend(indices[i] for i in picked)
    chosen.sort()
    return Dataset(
        name=dataset.name,
        split=dataset.split,
        samples=tuple(dataset.samples[i] for i in chosen),
    )


@dataclass(frozen=True)
class SweepRow:
    value: float
    macro_f1: float | None
    status: str  # "ok" or the error message


def sweep(parameter: str, values: list, run_one) -> list[SweepRow]:
    """Run ``run_one(parameter, value) -> EvalReport`` per value.

    Failures are recorded in the row and the sweep continues.
    """
    if parameter not in ("k", "beta"):
        raise ValueError(f"sweep parameter must be 'k' or 'beta', got "
                         f"{parameter!r}")
    if not values:
        raise ValueError("sweep needs at least one value")
    rows: list[SweepRow] = []
    for value in values:
        try:
            report = run_one(parameter, value)
            rows.append(SweepRow(value=float(value),
                                 macro_f1=report.macro_f1, status="ok"))
        except Exception as e:  # per-value isolation is the contract
            rows.append(SweepRow(value=float(value), macro_f1=None,
                                 status=f"error: {e}"))
    return rows


def sweep_table(rows: list[SweepRow], parameter: str) -> str:
    """Tab-separated sweep table with a header, ready for plotting."""
    lines = [f"{parameter}\tmacro_f1\tstatus"]
    for row in rows:
        f1 = f"{row.macro_f1:.6f}" if row.macro_f1 is not None else "NA"
        lines.append(f"{row.value:g}\t{f1}\t{row.status}")
    return "\n".join(lines) + "\n"
