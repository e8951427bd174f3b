"""Confusion-count bookkeeping and the six detection metrics.

Metrics with a zero denominator are surfaced as None ("undefined"), never
coerced to 0 — silent zeros would corrupt fold averages. Aggregation excludes
undefined values pairwise and reports how many were excluded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

METRIC_NAMES = ("fpr", "frr", "accuracy", "precision", "recall", "f_measure")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def positives(self) -> int:
        return self.tp + self.fn

    @property
    def negatives(self) -> int:
        return self.fp + self.tn


def confusion(labels, predictions, threshold: float = 0.5) -> ConfusionCounts:
    """Tally counts with positive = attack = 1; predicted positive iff
    probability >= threshold (ties predicted positive)."""
    labs = np.asarray(labels, dtype=np.int64)
    probs = np.asarray(predictions, dtype=np.float64)
    if labs.shape != probs.shape or labs.ndim != 1:
        raise ValueError("labels and predictions must be equal-length vectors")
    if labs.size == 0:
        raise ValueError("cannot tally an empty prediction set")
    pred = probs >= threshold
    actual = labs == 1
    tp = int(np.sum(pred & actual))
    fp = int(np.sum(pred & ~actual))
    fn = int(np.sum(~pred & actual))
    tn = int(np.sum(~pred & ~actual))
    return ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn)


def fpr(c: ConfusionCounts) -> float | None:
    """False-positive rate FP / (FP + TN); None when there are no negatives."""
    if c.negatives == 0:
        return None
    return c.fp / c.negatives


def frr(c: ConfusionCounts) -> float | None:
    """False-rejection rate FN / (TP + FN); the complement of recall."""
    if c.positives == 0:
        return None
    return c.fn / c.positives


def accuracy(c: ConfusionCounts) -> float | None:
    if c.total == 0:
        return None
    return (c.tp + c.tn) / c.total


def precision(c: ConfusionCounts) -> float | None:
    if c.tp + c.fp == 0:
        return None
    return c.tp / (c.tp + c.fp)


def recall(c: ConfusionCounts) -> float | None:
    if c.positives == 0:
        return None
    return c.tp / c.positives


def f_measure(c: ConfusionCounts) -> float | None:
    """Harmonic mean of precision and recall (undefined if either is, or
    if both are zero)."""
    p = precision(c)
    r = recall(c)
    if p is None or r is None or p + r == 0:
        return None
    return 2.0 * p * r / (p + r)


@dataclass(frozen=True)
class MetricsReport:
    fpr: float | None
    frr: float | None
    accuracy: float | None
    precision: float | None
    recall: float | None
    f_measure: float | None
    counts: ConfusionCounts
    threshold: float

    @classmethod
    def from_counts(cls, counts: ConfusionCounts, threshold: float) -> "MetricsReport":
        return cls(
            fpr=fpr(counts),
            frr=frr(counts),
            accuracy=accuracy(counts),
            precision=precision(counts),
            recall=recall(counts),
            f_measure=f_measure(counts),
            counts=counts,
            threshold=threshold,
        )

    def to_json_dict(self) -> dict:
        """Fixed key order for golden-file comparisons."""
        return {
            "fpr": self.fpr,
            "frr": self.frr,
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f_measure": self.f_measure,
            "counts": {
                "tp": self.counts.tp,
                "fp": self.counts.fp,
                "tn": self.counts.tn,
                "fn": self.counts.fn,
            },
            "threshold": self.threshold,
        }


def evaluate(labels, predictions, threshold: float = 0.5) -> MetricsReport:
    return MetricsReport.from_counts(confusion(labels, predictions, threshold), threshold)


@dataclass(frozen=True)
class FoldSummary:
    """Mean and sample std per metric over folds, with exclusion counts for
    undefined values."""

    reports: tuple[MetricsReport, ...]
    mean: dict[str, float | None]
    std: dict[str, float | None]
    excluded: dict[str, int]

    def to_json_dict(self) -> dict:
        return {
            "mean": {m: self.mean[m] for m in METRIC_NAMES},
            "std": {m: self.std[m] for m in METRIC_NAMES},
            "excluded": {m: self.excluded[m] for m in METRIC_NAMES},
        }


def aggregate(reports) -> FoldSummary:
    """Arithmetic mean and sample std per metric; single values get std 0."""
    reps = tuple(reports)
    if not reps:
        raise ValueError("cannot aggregate an empty report list")
    mean: dict[str, float | None] = {}
    std: dict[str, float | None] = {}
    excluded: dict[str, int] = {}
    for m in METRIC_NAMES:
        values = [getattr(r, m) for r in reps if getattr(r, m) is not None]
        excluded[m] = len(reps) - len(values)
        if not values:
            mean[m] = None
            std[m] = None
            continue
        mean[m] = float(np.mean(values))
        if len(values) < 2 or all(v == values[0] for v in values):
            std[m] = 0.0  # single or identical folds: zero by convention
        else:
            std[m] = float(np.std(values, ddof=1))
    return FoldSummary(reports=reps, mean=mean, std=std, excluded=excluded)
