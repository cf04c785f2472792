"""Weighted Jackknife covariance of ELM output weights, computed over row
batches so that only one block of the hidden-layer matrix is in memory.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .elm import DEFAULT_BATCH_ROWS
from .errors import ShapeError

__all__ = [
    "LEVERAGE_EPS",
    "WeightCovariance",
    "JackknifeAccumulator",
    "jackknife_covariance",
    "prediction_variance",
]

LEVERAGE_EPS = 1e-8


@dataclass(frozen=True, eq=False)
class WeightCovariance:
    sigma: np.ndarray
    leverage_clamp_count: int = 0


class JackknifeAccumulator:
    """Accumulates ``A = sum_j H'^j.T @ S^j`` one batch at a time.

    Partial accumulators over disjoint row ranges can be combined with
    :meth:`merge` before :meth:`finalize`.
    """

    def __init__(self, P, eps: float = LEVERAGE_EPS):
        P = np.asarray(P, dtype=np.float64)
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise ShapeError(f"P must be square, got shape {P.shape}")
        self.P = P
        self.eps = eps
        self.A = np.zeros_like(P)
        self.rows = 0
        self.clamped = 0

    def update(self, H, r) -> np.ndarray:
        """Add one batch; returns the batch leverages ``h_i P h_i^T``."""
        H = np.asarray(H, dtype=np.float64)
        r = np.asarray(r, dtype=np.float64)
        if H.ndim != 2 or H.shape[1] != self.P.shape[0]:
            raise ShapeError(f"batch has shape {H.shape}, expected (n, {self.P.shape[0]})")
        if r.shape != (H.shape[0],):
            raise ShapeError(f"residual batch has shape {r.shape}, expected ({H.shape[0]},)")
        S = H @ self.P
        lev = np.einsum("ij,ij->i", S, H)
        denom = 1.0 - lev
        low = denom < self.eps
        self.clamped += int(np.count_nonzero(low))
        denom[low] = self.eps
        Hw = H * (r * r / denom)[:, None]
        self.A += Hw.T @ S
        self.rows += H.shape[0]
        return lev

    def merge(self, other: "JackknifeAccumulator"):
        self.A += other.A
        self.rows += other.rows
        self.clamped += other.clamped
        return self

    def finalize(self) -> WeightCovariance:
        sigma = self.P @ self.A
        return WeightCovariance(0.5 * (sigma + sigma.T), self.clamped)


def jackknife_covariance(H_stream: Iterable[np.ndarray], r, P,
                         eps: float = LEVERAGE_EPS) -> WeightCovariance:
    """Heteroscedasticity-robust covariance ``P H^T diag(w) H P`` of the
    output weights, with ``w_i = r_i^2 / (1 - h_i P h_i^T)``.

    ``H_stream`` yields consecutive row blocks whose concatenation lines up
    with ``r``. Leverages within ``eps`` of one have their denominator
    clamped to ``eps``; the number of such rows is reported.
    """
    r = np.asarray(r, dtype=np.float64)
    if r.ndim != 1:
        raise ShapeError(f"residuals must be 1-d, got shape {r.shape}")
    acc = JackknifeAccumulator(P, eps)
    for H in H_stream:
        start = acc.rows
        if start + len(H) > len(r):
            raise ShapeError(f"stream has more rows than the {len(r)} residuals")
        acc.update(H, r[start:start + len(H)])
    if acc.rows != len(r):
        raise ShapeError(f"stream has {acc.rows} rows but {len(r)} residuals were given")
    return acc.finalize()


def prediction_variance(H, sigma, batch_rows: int = DEFAULT_BATCH_ROWS) -> np.ndarray:
    """Per-row quadratic form ``h_i Sigma h_i^T``, clamped at zero."""
    H = np.asarray(H, dtype=np.float64)
    sigma = getattr(sigma, "sigma", sigma)
    sigma = np.asarray(sigma, dtype=np.float64)
    if H.ndim != 2 or sigma.shape != (H.shape[1], H.shape[1]):
        raise ShapeError(f"cannot form quadratic forms of H {H.shape} with Sigma {sigma.shape}")
    out = np.empty(H.shape[0])
    for start in range(0, H.shape[0], batch_rows):
        h = H[start:start + batch_rows]
        out[start:start + len(h)] = np.einsum("ij,ij->i", h @ sigma, h)
    np.maximum(out, 0.0, out=out)
    return out
