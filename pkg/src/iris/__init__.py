"""Interpretable rationale-based zero-shot stance detection.

The pipeline extracts implicit and explicit rationales for a
(text, target) pair with a pluggable LLM, ranks each implicit rationale's
relevance to favor/against/neutral reference documents, selects diverse
relevant and irrelevant rationales by greedy KL divergence, and
classifies the stance with a small trainable head plus majority voting.
"""

from .core import (
    Dataset,
    ExplicitRationale,
    ImplicitRationale,
    Sample,
    Split,
    StanceLabel,
    adapt_ez,
    adapt_vast,
    load_canonical,
    save_canonical,
)
from .evalkit import EvalReport, aggregate_runs, macro_f1

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "ExplicitRationale",
    "ImplicitRationale",
    "Sample",
    "Split",
    "StanceLabel",
    "adapt_ez",
    "adapt_vast",
    "load_canonical",
    "save_canonical",
    "EvalReport",
    "aggregate_runs",
    "macro_f1",
    "__version__",
]
