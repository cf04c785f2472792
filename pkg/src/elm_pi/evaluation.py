"""Interval quality metrics and confidence-filtered classification."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, ShapeError

__all__ = [
    "IntervalReport",
    "CoveragePoint",
    "picp",
    "nmpiw",
    "interval_report",
    "uniform_pi_curve",
    "coverage_threshold",
    "confidence_scores",
    "confusion_at_coverage",
    "DEFAULT_COVERAGES",
]

DEFAULT_COVERAGES = (1.0, 0.7, 0.5, 0.3, 0.1, 0.03, 0.01)


def _bounds(intervals):
    if hasattr(intervals, "lower"):
        lower, upper = intervals.lower, intervals.upper
    else:
        lower, upper = intervals
    return np.asarray(lower, dtype=np.float64), np.asarray(upper, dtype=np.float64)


def _aligned(intervals, y):
    lower, upper = _bounds(intervals)
    y = np.asarray(y, dtype=np.float64)
    if not (lower.shape == upper.shape == y.shape) or y.ndim != 1:
        raise ShapeError(
            f"bounds {lower.shape}/{upper.shape} and targets {y.shape} must be equal-length vectors"
        )
    if y.size == 0:
        raise DomainError("no samples to evaluate")
    return lower, upper, y


def picp(intervals, y) -> float:
    """Fraction of targets inside their interval, boundaries inclusive.

    ``intervals`` is anything with ``lower``/``upper`` attributes or a
    ``(lower, upper)`` pair.
    """
    lower, upper, y = _aligned(intervals, y)
    return float(np.mean((lower <= y) & (y <= upper)))


def nmpiw(intervals, y) -> float:
    """Mean interval width divided by the range of the targets."""
    lower, upper, y = _aligned(intervals, y)
    span = y.max() - y.min()
    if not span > 0:
        raise DomainError("targets have zero range")
    return float(np.mean(upper - lower) / span)


@dataclass(frozen=True)
class IntervalReport:
    picp: float
    nmpiw: float
    alpha: float
    n: int

    def as_record(self) -> str:
        return (f"picp={self.picp!r} nmpiw={self.nmpiw!r} "
                f"alpha={self.alpha!r} n={self.n}")


def interval_report(intervals, y, alpha: float) -> IntervalReport:
    return IntervalReport(picp(intervals, y), nmpiw(intervals, y), float(alpha), len(y))


def uniform_pi_curve(y_hat, y, n_points: int = 101) -> np.ndarray:
    """NMPIW/PICP trade-off of constant-width intervals ``y_hat +- w``.

    Widths are taken at the sorted absolute residuals, where the coverage
    jumps; the first point is ``w = 0`` and the last is ``w = max|y - y_hat|``.

    Returns an ``(n_points, 3)`` array of ``(nmpiw, picp, w)``.
    """
    y_hat = np.asarray(y_hat, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if y.size == 0:
        raise DomainError("no samples to evaluate")
    if y_hat.shape != y.shape:
        raise ShapeError(f"predictions {y_hat.shape} and targets {y.shape} differ")
    if n_points < 2:
        raise DomainError(f"n_points must be >= 2, got {n_points}")
    span = y.max() - y.min()
    if not span > 0:
        raise DomainError("targets have zero range")
    res = np.sort(np.abs(y - y_hat))
    idx = np.round(np.linspace(0, res.size - 1, n_points - 1)).astype(int)
    w = np.concatenate([[0.0], res[idx]])
    cover = np.searchsorted(res, w, side="right") / res.size
    return np.column_stack([2.0 * w / span, cover, w])


def coverage_threshold(scores, coverage: float) -> float:
    """Smallest-retention threshold keeping at least ``coverage`` of samples.

    Samples with ``score >= theta`` are retained; ties at ``theta`` are all
    kept, so the retained fraction may exceed the request.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        raise DomainError("no scores")
    if not 0.0 < coverage <= 1.0:
        raise DomainError(f"coverage must lie in (0, 1], got {coverage}")
    k = max(1, math.ceil(coverage * scores.size - 1e-9))
    return float(-np.partition(-scores, k - 1)[k - 1])


def confidence_scores(y_hat, s=None, mode: str = "mse") -> np.ndarray:
    """``|y_hat|`` for a uniform threshold, ``|y_hat| / s`` per sample."""
    y_hat = np.asarray(y_hat, dtype=np.float64)
    if mode == "mse":
        return np.abs(y_hat)
    if mode == "per_sample":
        if s is None:
            raise DomainError("per_sample mode needs interval widths")
        s = np.asarray(getattr(s, "s", s), dtype=np.float64)
        if s.shape != y_hat.shape:
            raise ShapeError(f"widths {s.shape} and predictions {y_hat.shape} differ")
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.abs(y_hat) / s
        # zero width: certain unless the prediction itself is zero
        out[s == 0] = np.where(y_hat[s == 0] == 0, 0.0, np.inf)
        return out
    raise DomainError(f"unknown mode {mode!r}; expected 'mse' or 'per_sample'")


@dataclass(frozen=True)
class CoveragePoint:
    """Rates among retained samples; NaN marks a class with no retained samples."""

    coverage: float
    theta: float
    tp_rate: float
    fp_rate: float
    retained: int


def confusion_at_coverage(y_hat, intervals, labels, coverages: Sequence[float] = DEFAULT_COVERAGES,
                          mode: str = "mse") -> list[CoveragePoint]:
    """True/false positive rates of ``sign(y_hat)`` on the most confident
    fraction of samples, for each requested coverage.
    """
    y_hat = np.asarray(y_hat, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if labels.shape != y_hat.shape:
        raise ShapeError(f"labels {labels.shape} and predictions {y_hat.shape} differ")
    if not np.all(np.isin(labels, (-1.0, 1.0))):
        raise DomainError("labels must be -1 or +1")
    scores = confidence_scores(y_hat, intervals if mode == "per_sample" else None, mode)
    pos_pred = y_hat > 0
    out = []
    for c in coverages:
        theta = coverage_threshold(scores, c)
        keep = scores >= theta
        pos = keep & (labels > 0)
        neg = keep & (labels < 0)
        n_pos, n_neg = int(pos.sum()), int(neg.sum())
        tp = np.count_nonzero(pos & pos_pred) / n_pos if n_pos else math.nan
        fp = np.count_nonzero(neg & pos_pred) / n_neg if n_neg else math.nan
        out.append(CoveragePoint(float(c), theta, tp, fp, int(keep.sum())))
    return out
