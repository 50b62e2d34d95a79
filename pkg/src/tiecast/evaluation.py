"""Accuracy metrics and distribution diagnostics for predicted tie strengths."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import IO, Sequence

import numpy as np

from .errors import DomainError
from .graph import WeightedGraph, WeightSpace
from .model import build_feature_matrix

__all__ = [
    "EvalReport",
    "DistributionSummary",
    "rmse",
    "pcc",
    "w_diff",
    "h_diff",
    "categorical_entropy",
    "summarize",
    "weight_distribution",
    "inclination_distributions",
]

DEFAULT_BINS = 50


def _pair(actual, predicted):
    a = np.asarray(actual, dtype=float).ravel()
    p = np.asarray(predicted, dtype=float).ravel()
    if len(a) != len(p):
        raise DomainError(f"length mismatch: {len(a)} actual vs {len(p)} predicted")
    if len(a) == 0:
        raise DomainError("cannot score an empty prediction set")
    return a, p


def rmse(actual, predicted) -> float:
    a, p = _pair(actual, predicted)
    d = a - p
    return math.sqrt(float(d @ d) / len(d))


def pcc(actual, predicted) -> float:
    """Pearson correlation; raises when either side is constant."""
    a, p = _pair(actual, predicted)
    if len(a) < 2:
        raise DomainError("correlation needs at least two points")
    da, dp = a - a.mean(), p - p.mean()
    sa, sp = float(da @ da), float(dp @ dp)
    if sa == 0.0 or sp == 0.0:
        raise DomainError("correlation undefined for zero variance")
    return max(-1.0, min(1.0, float(da @ dp) / math.sqrt(sa * sp)))


def w_diff(per_partition) -> float:
    """Mean over partitions of ``mean(actual) - mean(predicted)``."""
    gaps = []
    for actual, predicted in per_partition:
        a, p = _pair(actual, predicted)
        gaps.append(math.fsum(a) / len(a) - math.fsum(p) / len(p))
    if not gaps:
        raise DomainError("need at least one partition")
    return math.fsum(gaps) / len(gaps)


def categorical_entropy(freqs) -> float:
    """``sum p log p`` (natural log, no negation; zero-probability terms vanish)."""
    return math.fsum(p * math.log(p) for p in freqs if p > 0)


def _assign(categories: np.ndarray, values: np.ndarray) -> np.ndarray:
    # Nearest category value; exact ties go to the smaller category.
    if len(categories) == 1:
        return np.zeros(len(values), dtype=int)
    idx = np.clip(np.searchsorted(categories, values), 1, len(categories) - 1)
    lo, hi = categories[idx - 1], categories[idx]
    return np.where(hi - values < values - lo, idx, idx - 1)


def _h_gap(actual: np.ndarray, predicted: np.ndarray) -> float:
    cats, counts = np.unique(actual, return_counts=True)
    n = len(actual)
    h_actual = categorical_entropy(counts / n)
    pred_counts = np.bincount(_assign(cats, predicted), minlength=len(cats))
    h_pred = categorical_entropy(pred_counts / len(predicted))
    return h_actual - h_pred


def h_diff(per_partition) -> float:
    """Mean over partitions of the entropy-score gap between actual and
    predicted weights.

    Categories are the distinct actual weights of a partition; each predicted
    value is counted in its nearest category.
    """
    gaps = []
    for actual, predicted in per_partition:
        a, p = _pair(actual, predicted)
        gaps.append(_h_gap(a, p))
    if not gaps:
        raise DomainError("need at least one partition")
    return math.fsum(gaps) / len(gaps)


# -- reports ----------------------------------------------------------------

@dataclass
class EvalReport:
    method: str
    rmse_values: list[float]
    weight_space: WeightSpace
    w_diff: float | None = None
    h_diff: float | None = None
    pcc_values: list[float] | None = None
    extra: dict = field(default_factory=dict)

    @property
    def mean(self) -> float:
        return math.fsum(self.rmse_values) / len(self.rmse_values)

    @property
    def std(self) -> float | None:
        """Sample (n - 1) standard deviation; ``None`` with a single partition."""
        if len(self.rmse_values) < 2:
            return None
        m = self.mean
        return math.sqrt(math.fsum((v - m) ** 2 for v in self.rmse_values) / (len(self.rmse_values) - 1))

    def to_dict(self) -> dict:
        doc = {
            "method": self.method,
            "weight_space": WeightSpace(self.weight_space).value,
            "rmse": list(self.rmse_values),
            "rmse_mean": self.mean,
            "rmse_std": self.std,
            "w_diff": self.w_diff,
            "h_diff (sum p log p convention)": self.h_diff,
        }
        if self.pcc_values is not None:
            doc["pcc"] = list(self.pcc_values)
        doc.update(self.extra)
        return doc

    def to_json(self, dest: IO[str]) -> None:
        json.dump(self.to_dict(), dest, indent=2, sort_keys=True)
        dest.write("\n")


@dataclass
class DistributionSummary:
    edges: np.ndarray
    counts: np.ndarray
    mean: float
    small_fraction: float
    large_fraction: float

    @property
    def size(self) -> int:
        return int(self.counts.sum())

    def write_csv(self, dest: IO[str]) -> None:
        writer = csv.writer(dest, lineterminator="\n")
        writer.writerow(["bin_left", "bin_right", "count"])
        for left, right, c in zip(self.edges[:-1], self.edges[1:], self.counts):
            writer.writerow([repr(float(left)), repr(float(right)), int(c)])


def summarize(values, bins: int = DEFAULT_BINS) -> DistributionSummary:
    """Histogram plus the share of values below the mean ("small") and at or
    above it ("large")."""
    v = np.asarray(values, dtype=float).ravel()
    if len(v) == 0:
        raise DomainError("cannot summarize an empty sample")
    lo, hi = float(v.min()), float(v.max())
    # Clamp so a constant sample has mean exactly equal to its value.
    mean = min(max(math.fsum(v) / len(v), lo), hi)
    counts, edges = np.histogram(v, bins=bins, range=(lo, hi) if hi > lo else (lo - 0.5, lo + 0.5))
    small = int(np.count_nonzero(v < mean))
    return DistributionSummary(edges, counts, mean, small / len(v), (len(v) - small) / len(v))


def weight_distribution(g: WeightedGraph, bins: int = DEFAULT_BINS) -> DistributionSummary:
    return summarize([w for _, _, w in g.edges()], bins)


def inclination_distributions(g: WeightedGraph, bins: int = DEFAULT_BINS) -> tuple[DistributionSummary, DistributionSummary]:
    """Summaries of ``r_x`` and ``r_y`` over every edge, ``x`` being the
    lower-indexed endpoint."""
    rows = build_feature_matrix(g, g.pairs())
    return summarize(rows[:, 0], bins), summarize(rows[:, 1], bins)
