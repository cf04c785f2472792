"""Datasets: CSV loading, seeded splits, standardization and synthetic
generators with known noise structure.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from scipy import integrate
from scipy.special import ndtr

from .errors import ConfigurationError, ParseError, SchemaError, ShapeError

__all__ = [
    "Dataset",
    "GeneratorSpec",
    "GeneratorTruth",
    "StandardizationParams",
    "MEAN_FUNCTIONS",
    "NOISE_CURVES",
    "load_csv",
    "write_csv",
    "synth",
    "true_mean",
    "true_sd",
    "synth_skinlike",
    "skinlike_bayes_accuracy",
    "split",
    "fit_standardizer",
    "apply_standardizer",
    "unapply_standardizer",
]


@dataclass(frozen=True, eq=False)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    feature_names: Optional[tuple[str, ...]] = None
    task: str = "regression"

    def __post_init__(self):
        if self.X.ndim != 2 or self.y.shape != (self.X.shape[0],):
            raise ShapeError(f"X {self.X.shape} and y {self.y.shape} do not line up")
        if self.task not in ("regression", "binary"):
            raise ConfigurationError(f"unknown task {self.task!r}")
        if self.task == "binary" and not np.all(np.isin(self.y, (-1.0, 1.0))):
            raise ConfigurationError("binary task requires labels in {-1, +1}")

    def __len__(self):
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def subset(self, idx) -> "Dataset":
        return Dataset(self.X[idx], self.y[idx], self.feature_names, self.task)


# ---------------------------------------------------------------------------
# CSV

def _parse_float(cell, row, col):
    try:
        value = float(cell)
    except ValueError:
        raise ParseError(f"non-numeric cell {cell!r}", row=row, column=col) from None
    if not np.isfinite(value):
        raise ParseError(f"non-finite cell {cell!r}", row=row, column=col)
    return value


def load_csv(path, target_column: Union[str, int, None] = -1,
             has_header: bool = True) -> Dataset:
    """Read a numeric comma-separated file.

    ``target_column`` is a header name or a column index (negative counts
    from the end); ``None`` loads every column as a feature and sets ``y``
    to zeros. Rows and columns in error messages are 1-based file positions.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    header = None
    first_line = 1
    if has_header:
        if not rows:
            raise ParseError("file has no header row")
        header = [h.strip() for h in rows[0]]
        rows = rows[1:]
        first_line = 2
    if not rows:
        raise ParseError("file has no data rows")
    ncol = len(header) if header is not None else len(rows[0])

    if target_column is None:
        t = None
    elif isinstance(target_column, str):
        if header is None or target_column not in header:
            raise SchemaError(f"target column {target_column!r} not found")
        t = header.index(target_column)
    else:
        t = int(target_column)
        if not -ncol <= t < ncol:
            raise SchemaError(f"target column index {t} out of range for {ncol} columns")
        t %= ncol

    values = np.empty((len(rows), ncol))
    for i, r in enumerate(rows):
        line = first_line + i
        if len(r) != ncol:
            raise ParseError(f"expected {ncol} cells, found {len(r)}", row=line)
        for j, cell in enumerate(r):
            values[i, j] = _parse_float(cell.strip(), line, j + 1)

    feat = [j for j in range(ncol) if j != t]
    names = tuple(header[j] for j in feat) if header is not None else None
    y = values[:, t] if t is not None else np.zeros(len(rows))
    return Dataset(values[:, feat], y, names)


def write_csv(path, columns: dict):
    """Write equal-length 1-d arrays as named CSV columns.

    Floats use their shortest exact representation.
    """
    names = list(columns)
    arrays = [np.asarray(columns[k]) for k in names]
    n = len(arrays[0]) if arrays else 0
    with open(path, "w", newline="") as fh:
        fh.write(",".join(names) + "\n")
        for i in range(n):
            fh.write(",".join(
                repr(float(a[i])) if np.issubdtype(a.dtype, np.floating) else str(a[i])
                for a in arrays
            ) + "\n")


# ---------------------------------------------------------------------------
# Synthetic regression data: y = f(x) + sigma(x) * z

def _sine_trend(x):
    return np.sin(x) + 0.3 * x


def _sine_fast(x):
    return np.sin(2.0 * x) + 0.3 * x


MEAN_FUNCTIONS = {"sine_trend": _sine_trend, "sine_fast": _sine_fast}


def _widening(t):
    # t in [0, 1] across x_range; 0.1 -> 0.5
    return 0.1 + 0.4 * t ** 2


def _bump(t):
    return 0.1 + 0.4 * np.exp(-((t - 0.5) / 0.15) ** 2)


NOISE_CURVES = {"widening": _widening, "bump": _bump}


@dataclass(frozen=True)
class GeneratorSpec:
    """1-d heteroscedastic (``sigma`` a curve name) or homoscedastic
    (``sigma`` a constant) regression problem.

    Built-ins, with ``t = (x - lo) / (hi - lo)``:

    * ``sine_trend``: ``f(x) = sin(x) + 0.3 x``
    * ``sine_fast``: ``f(x) = sin(2x) + 0.3 x``
    * ``widening``: ``sigma = 0.1 + 0.4 t^2``
    * ``bump``: ``sigma = 0.1 + 0.4 exp(-((t - 0.5)/0.15)^2)``
    """

    f: str = "sine_trend"
    sigma: Union[str, float] = "widening"
    x_range: tuple[float, float] = (-3.0, 3.0)
    n: int = 1000
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.x_range
        if not (np.isfinite(lo) and np.isfinite(hi) and hi > lo):
            raise ConfigurationError(f"invalid x_range {self.x_range}")
        if self.f not in MEAN_FUNCTIONS:
            raise ConfigurationError(f"unknown mean function {self.f!r}")
        if isinstance(self.sigma, str):
            if self.sigma not in NOISE_CURVES:
                raise ConfigurationError(f"unknown noise curve {self.sigma!r}")
        elif not (np.isfinite(self.sigma) and self.sigma >= 0):
            raise ConfigurationError(f"noise level must be >= 0, got {self.sigma}")
        if self.n < 1:
            raise ConfigurationError(f"sample count must be >= 1, got {self.n}")

    @property
    def heteroscedastic(self) -> bool:
        return isinstance(self.sigma, str)

    def with_(self, **changes) -> "GeneratorSpec":
        from dataclasses import replace
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class GeneratorTruth:
    """Noise-free mean and true noise deviation for each generated sample."""

    f: np.ndarray
    sigma: np.ndarray


def _x_of(X):
    X = np.asarray(X, dtype=np.float64)
    return X[:, 0] if X.ndim == 2 else X


def true_mean(spec: GeneratorSpec, X) -> np.ndarray:
    return MEAN_FUNCTIONS[spec.f](_x_of(X))


def true_sd(spec: GeneratorSpec, X) -> np.ndarray:
    x = _x_of(X)
    if not spec.heteroscedastic:
        return np.full(x.shape, float(spec.sigma))
    lo, hi = spec.x_range
    return NOISE_CURVES[spec.sigma]((x - lo) / (hi - lo))


def synth(spec: GeneratorSpec):
    """Draw ``spec.n`` samples; returns ``(Dataset, GeneratorTruth)``.

    The truth is returned separately so it never travels with training data.
    """
    rng = np.random.default_rng(spec.seed)
    lo, hi = spec.x_range
    x = rng.uniform(lo, hi, spec.n)
    z = rng.standard_normal(spec.n)
    f = true_mean(spec, x)
    s = true_sd(spec, x)
    y = f + s * z
    return Dataset(x[:, None], y, ("x",)), GeneratorTruth(f, s)


# ---------------------------------------------------------------------------
# Binary task with input-dependent class overlap

def _separation(u):
    return 0.25 + 2.75 * u


def synth_skinlike(n: int, d_features: int = 8, seed: int = 0,
                   overlap: float = 1.0) -> Dataset:
    """Balanced +-1 labels whose ambiguity depends on the inputs.

    Feature 0 is a region coordinate ``v = 2u - 1`` with ``u ~ U(0, 1)``.
    Feature 1 carries the class, ``c * (0.25 + 2.75 u) + overlap * z``, so
    classes overlap heavily at low ``u`` and barely at high ``u``. The
    remaining features are nuisance copies of ``u`` plus noise, independent
    of the label given ``u``. ``overlap=0`` makes the classes separable by
    the sign of feature 1.
    """
    if n < 2 or n % 2:
        raise ConfigurationError(f"n must be a positive even number, got {n}")
    if d_features < 2:
        raise ConfigurationError(f"d_features must be >= 2, got {d_features}")
    if overlap < 0:
        raise ConfigurationError(f"overlap must be >= 0, got {overlap}")
    rng = np.random.default_rng(seed)
    c = np.repeat([1.0, -1.0], n // 2)
    rng.shuffle(c)
    u = rng.uniform(0.0, 1.0, n)
    X = np.empty((n, d_features))
    X[:, 0] = 2.0 * u - 1.0
    X[:, 1] = c * _separation(u) + overlap * rng.standard_normal(n)
    if d_features > 2:
        X[:, 2:] = u[:, None] + 0.5 * rng.standard_normal((n, d_features - 2))
    names = ("region", "signal") + tuple(f"nuisance{k}" for k in range(d_features - 2))
    return Dataset(X, c, names, task="binary")


def skinlike_bayes_accuracy(overlap: float = 1.0) -> float:
    """Accuracy of the optimal rule ``sign(feature 1)`` for equal priors:
    the integral over ``u`` of ``Phi(separation(u) / overlap)``.
    """
    if overlap == 0:
        return 1.0
    val, _ = integrate.quad(lambda u: ndtr(_separation(u) / overlap), 0.0, 1.0)
    return float(val)


# ---------------------------------------------------------------------------
# Splitting and standardization

def split(dataset: Dataset, train_fraction: float, seed: int):
    """Seeded random partition; the training side gets ``floor(N*fraction)`` rows."""
    n = len(dataset)
    if not 0.0 < train_fraction < 1.0:
        raise ConfigurationError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    n_train = int(np.floor(n * train_fraction + 1e-9))
    if n_train < 1 or n_train >= n:
        raise ConfigurationError(
            f"splitting {n} samples at {train_fraction} leaves an empty side"
        )
    perm = np.random.default_rng(seed).permutation(n)
    return dataset.subset(perm[:n_train]), dataset.subset(perm[n_train:])


@dataclass(frozen=True, eq=False)
class StandardizationParams:
    mean: np.ndarray
    std: np.ndarray
    constant: np.ndarray  # bool mask of features with zero spread

    @property
    def any_constant(self) -> bool:
        return bool(self.constant.any())


def fit_standardizer(X) -> StandardizationParams:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ShapeError(f"cannot standardize array of shape {X.shape}")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    constant = ~(std > 0)
    if constant.any():
        warnings.warn(
            f"constant feature(s) {np.flatnonzero(constant).tolist()} get unit deviation",
            RuntimeWarning,
            stacklevel=2,
        )
        std = np.where(constant, 1.0, std)
    return StandardizationParams(mean, std, constant)


def apply_standardizer(params: StandardizationParams, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != params.mean.shape[0]:
        raise ShapeError(f"X has shape {X.shape}, expected (n, {params.mean.shape[0]})")
    return (X - params.mean) / params.std


def unapply_standardizer(params: StandardizationParams, Z) -> np.ndarray:
    return np.asarray(Z, dtype=np.float64) * params.std + params.mean
