"""Confusion-matrix metrics, pipeline efficiency ratios, and the
nonparametric tests used to compare campaign arms.

Undefined ratios (zero denominators) surface as None, never as 0 or NaN,
so cross-operator aggregation can skip them deliberately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np


class DegenerateSampleError(Exception):
    pass


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(
            self.tp + other.tp,
            self.fp + other.fp,
            self.tn + other.tn,
            self.fn + other.fn,
        )


@dataclass(frozen=True)
class EvalReport:
    confusion: ConfusionMatrix
    precision: Optional[float]
    recall: Optional[float]
    accuracy: Optional[float]
    f1: Optional[float]
    positives_in_eval: int

    def to_dict(self) -> dict:
        return {
            "tp": self.confusion.tp,
            "fp": self.confusion.fp,
            "tn": self.confusion.tn,
            "fn": self.confusion.fn,
            "precision": self.precision,
            "recall": self.recall,
            "accuracy": self.accuracy,
            "f1": self.f1,
            "positives_in_eval": self.positives_in_eval,
        }


@dataclass(frozen=True)
class StatResult:
    statistic: float
    p_value: float
    method: str


def confusion(predicted: Sequence[int], truth: Sequence[int]) -> ConfusionMatrix:
    """Positive class is `valid` (label 1)."""
    p = np.asarray(predicted, dtype=bool)
    t = np.asarray(truth, dtype=bool)
    if p.shape != t.shape:
        raise ValueError("predicted and truth must have equal lengths")
    return ConfusionMatrix(
        tp=int(np.sum(p & t)),
        fp=int(np.sum(p & ~t)),
        tn=int(np.sum(~p & ~t)),
        fn=int(np.sum(~p & t)),
    )


def _ratio(num: int, den: int) -> Optional[float]:
    return num / den if den > 0 else None


def precision_recall(cm: ConfusionMatrix) -> EvalReport:
    precision = _ratio(cm.tp, cm.tp + cm.fp)
    recall = _ratio(cm.tp, cm.tp + cm.fn)
    accuracy = _ratio(cm.tp + cm.tn, cm.total)
    f1 = None
    if precision is not None and recall is not None and precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    elif precision is not None and recall is not None:
        f1 = 0.0
    return EvalReport(cm, precision, recall, accuracy, f1, cm.tp + cm.fn)


def pass_rate(valid_executed: int, total_executed: int) -> Optional[float]:
    if total_executed < valid_executed:
        raise ValueError("total must be >= valid count")
    return _ratio(valid_executed, total_executed)


# ---------------------------------------------------------------------------
# Statistical tests


def _norm_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def _kolmogorov_sf(lam: float) -> float:
    """Asymptotic Kolmogorov survival function Q(lambda) via its
    alternating series."""
    if lam <= 0:
        return 1.0
    total = 0.0
    for k in range(1, 101):
        term = (-1) ** (k - 1) * math.exp(-2.0 * k * k * lam * lam)
        total += term
        if abs(term) < 1e-12:
            break
    return min(1.0, max(0.0, 2.0 * total))


def ks_normal(sample: Sequence[float]) -> StatResult:
    """One-sample KS test against a normal fitted to the sample's own mean
    and (ddof=1) standard deviation.

    Caveat: with estimated parameters the asymptotic p-value is known to be
    anti-conservative; it is reported as-is.
    """
    x = np.sort(np.asarray(sample, dtype=np.float64))
    n = len(x)
    if n < 5:
        raise ValueError("ks_normal needs at least 5 observations")
    mu = float(np.mean(x))
    sd = float(np.std(x, ddof=1))
    if sd == 0.0:
        raise DegenerateSampleError("zero-variance sample")
    cdf = np.array([_norm_cdf((v - mu) / sd) for v in x])
    ecdf_hi = np.arange(1, n + 1) / n
    ecdf_lo = np.arange(0, n) / n
    d = float(max(np.max(ecdf_hi - cdf), np.max(cdf - ecdf_lo)))
    lam = (math.sqrt(n) + 0.12 + 0.11 / math.sqrt(n)) * d
    return StatResult(d, _kolmogorov_sf(lam), "ks-normal")


def _midranks(pooled: np.ndarray) -> np.ndarray:
    order = np.argsort(pooled, kind="stable")
    ranks = np.empty(len(pooled), dtype=np.float64)
    sorted_vals = pooled[order]
    i = 0
    while i < len(pooled):
        j = i
        while j + 1 < len(pooled) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def wilcoxon_rank_sum(a: Sequence[float], b: Sequence[float]) -> StatResult:
    """Two-sided rank-sum test, midrank ties, normal approximation with tie
    and continuity corrections. The statistic is the z-score of sample a's
    rank sum (antisymmetric under swapping the samples)."""
    xa = np.asarray(a, dtype=np.float64)
    xb = np.asarray(b, dtype=np.float64)
    if len(xa) == 0 or len(xb) == 0:
        raise ValueError("both samples must be non-empty")
    n1, n2 = len(xa), len(xb)
    n = n1 + n2
    pooled = np.concatenate([xa, xb])
    ranks = _midranks(pooled)
    w = float(np.sum(ranks[:n1]))
    mu = n1 * (n + 1) / 2.0
    # Tie correction on the rank variance.
    _, counts = np.unique(pooled, return_counts=True)
    tie_term = float(np.sum(counts**3 - counts))
    var = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if var <= 0:
        return StatResult(0.0, 1.0, "wilcoxon-rank-sum")
    diff = w - mu
    cc = 0.5 if diff != 0 else 0.0
    z = (diff - math.copysign(cc, diff)) / math.sqrt(var)
    p = 2.0 * (1.0 - _norm_cdf(abs(z)))
    return StatResult(z, min(1.0, p), "wilcoxon-rank-sum")


def cohens_d(a: Sequence[float], b: Sequence[float]) -> float:
    """(mean(a) - mean(b)) / pooled (n-1 weighted) standard deviation."""
    xa = np.asarray(a, dtype=np.float64)
    xb = np.asarray(b, dtype=np.float64)
    if len(xa) < 2 or len(xb) < 2:
        raise ValueError("cohens_d needs at least 2 observations per sample")
    va = float(np.var(xa, ddof=1))
    vb = float(np.var(xb, ddof=1))
    pooled = ((len(xa) - 1) * va + (len(xb) - 1) * vb) / (len(xa) + len(xb) - 2)
    if pooled == 0.0:
        raise DegenerateSampleError("zero pooled variance")
    return (float(np.mean(xa)) - float(np.mean(xb))) / math.sqrt(pooled)


def effect_size_label(d: float) -> str:
    m = abs(d)
    if m < 0.2:
        return "negligible"
    if m < 0.5:
        return "small"
    if m < 0.8:
        return "medium"
    return "large"
