"""Dense linear-algebra kernels: streaming Gram accumulation, SPD solves and
the standard-normal quantile.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve
from scipy.linalg.lapack import dpotrf

from .errors import DomainError, ShapeError, SingularMatrixError

__all__ = [
    "GramState",
    "SpdFactor",
    "gram_accumulate",
    "merge_gram",
    "spd_factor",
    "spd_solve",
    "normal_ppf",
    "std_normal_quantile",
]


@dataclass
class GramState:
    """Running sums ``H^T H`` and ``H^T y`` over a stream of row batches."""

    gram: np.ndarray
    moment: np.ndarray
    count: int = 0

    @classmethod
    def zeros(cls, dim: int) -> "GramState":
        return cls(np.zeros((dim, dim)), np.zeros(dim), 0)

    @property
    def dim(self) -> int:
        return self.moment.shape[0]


def gram_accumulate(state: GramState, batch, targets) -> GramState:
    """Add one batch of rows to ``state`` in place and return it."""
    batch = np.asarray(batch, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if batch.ndim != 2 or batch.shape[1] != state.dim:
        raise ShapeError(
            f"batch has shape {batch.shape}, expected (n, {state.dim})"
        )
    if targets.shape != (batch.shape[0],):
        raise ShapeError(
            f"targets have shape {targets.shape}, expected ({batch.shape[0]},)"
        )
    state.gram += batch.T @ batch
    state.moment += batch.T @ targets
    state.count += batch.shape[0]
    return state


def merge_gram(*states: GramState) -> GramState:
    """Sum partial states accumulated over disjoint row ranges."""
    if not states:
        raise ShapeError("nothing to merge")
    dim = states[0].dim
    out = GramState.zeros(dim)
    for s in states:
        if s.dim != dim:
            raise ShapeError(f"cannot merge states of width {dim} and {s.dim}")
        out.gram += s.gram
        out.moment += s.moment
        out.count += s.count
    return out


@dataclass(frozen=True)
class SpdFactor:
    """Lower Cholesky factor of ``gram + gamma*I``."""

    lower: np.ndarray
    gamma: float

    def reconstruct(self) -> np.ndarray:
        return self.lower @ self.lower.T


def spd_factor(gram, gamma: float) -> SpdFactor:
    gram = np.asarray(gram, dtype=np.float64)
    if gamma < 0 or not np.isfinite(gamma):
        raise DomainError(f"gamma must be a nonnegative finite number, got {gamma}")
    a = gram + gamma * np.eye(gram.shape[0])
    c, info = dpotrf(a, lower=1, clean=1, overwrite_a=0)
    if info > 0:
        raise SingularMatrixError(info - 1)
    if info < 0:
        raise DomainError(f"invalid argument {-info} passed to dpotrf")
    return SpdFactor(c, float(gamma))


def spd_solve(state: GramState, gamma: float):
    """Solve the regularized normal equations.

    Returns ``(beta, P)`` where ``(gram + gamma*I) beta = moment`` and
    ``P = (gram + gamma*I)^-1``. P is kept because the Jackknife step reuses it.
    """
    f = spd_factor(state.gram, gamma)
    cf = (f.lower, True)
    beta = cho_solve(cf, state.moment)
    P = cho_solve(cf, np.eye(state.dim))
    P = 0.5 * (P + P.T)
    return beta, P


# Acklam's rational approximation to the inverse normal CDF,
# relative error below 1.15e-9 over (0, 1).
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _tail(q: float) -> float:
    num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
    den = (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
    return num / den


def normal_ppf(p: float) -> float:
    """Inverse CDF of the standard normal distribution for ``0 < p < 1``."""
    p = float(p)
    if not 0.0 < p < 1.0:
        raise DomainError(f"probability must lie in (0, 1), got {p}")
    if p < _P_LOW:
        return _tail(math.sqrt(-2.0 * math.log(p)))
    if p > 1.0 - _P_LOW:
        return -_tail(math.sqrt(-2.0 * math.log1p(-p)))
    q = p - 0.5
    r = q * q
    num = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
    den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
    return num / den


def std_normal_quantile(coverage: float) -> float:
    """Two-sided z-value: a centred interval of half-width ``z*sigma`` holds
    a normal variate with probability ``coverage`` (0.95 -> 1.959964).
    """
    coverage = float(coverage)
    if not 0.0 < coverage < 1.0:
        raise DomainError(f"coverage must lie in (0, 1), got {coverage}")
    return normal_ppf(0.5 + 0.5 * coverage)
