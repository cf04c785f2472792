"""Extreme Learning Machine with an L2-regularized output layer.

The hidden layer is a frozen random projection; only the linear output
weights are fitted, by streaming row batches through a Gram accumulator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy.special import expit

from .errors import ConfigurationError, EmptyDataError, ShapeError
from .linalg import GramState, gram_accumulate, spd_solve

__all__ = [
    "KINDS",
    "DEFAULT_BATCH_ROWS",
    "NeuronSpec",
    "HiddenLayer",
    "ElmModel",
    "parse_specs",
    "format_specs",
    "init_hidden_layer",
    "hidden_transform",
    "iter_hidden",
    "train",
    "train_gram",
    "predict",
    "select_gamma",
    "validation_split",
]

KINDS = ("linear", "tanh", "sigmoid")
DEFAULT_BATCH_ROWS = 4096


@dataclass(frozen=True)
class NeuronSpec:
    kind: str
    count: int

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(
                f"unknown neuron kind {self.kind!r}; expected one of {KINDS}"
            )
        if int(self.count) < 1:
            raise ConfigurationError(f"neuron count must be >= 1, got {self.count}")
        object.__setattr__(self, "count", int(self.count))


def parse_specs(text: str) -> tuple[NeuronSpec, ...]:
    """Parse ``"linear:1,tanh:10"`` into neuron specs."""
    specs = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        kind, sep, count = part.partition(":")
        if not sep:
            raise ConfigurationError(f"neuron spec {part!r} is not of the form kind:count")
        try:
            n = int(count)
        except ValueError:
            raise ConfigurationError(f"neuron count {count!r} is not an integer") from None
        specs.append(NeuronSpec(kind.strip(), n))
    if not specs:
        raise ConfigurationError("empty neuron specification")
    return tuple(specs)


def format_specs(specs: Sequence[NeuronSpec]) -> str:
    return ",".join(f"{s.kind}:{s.count}" for s in specs)


_ACTIVATIONS = {"linear": None, "tanh": np.tanh, "sigmoid": expit}


@dataclass(frozen=True, eq=False)
class HiddenLayer:
    """Frozen random projection ``(d+1) -> L``; the last weight row is the bias."""

    weights: np.ndarray
    specs: tuple[NeuronSpec, ...]
    seed: int
    d: int

    def __post_init__(self):
        self.weights.setflags(write=False)

    @property
    def width(self) -> int:
        return self.weights.shape[1]

    @property
    def kinds(self) -> tuple[str, ...]:
        return tuple(k for s in self.specs for k in [s.kind] * s.count)

    def blocks(self):
        start = 0
        for s in self.specs:
            yield s.kind, slice(start, start + s.count)
            start += s.count


def init_hidden_layer(d: int, specs: Sequence[NeuronSpec], seed: int) -> HiddenLayer:
    """Draw standard-normal weights scaled by ``1/sqrt(d+1)``.

    Identical ``(d, specs, seed)`` give bit-identical layers.
    """
    if d < 1:
        raise ConfigurationError(f"input dimension must be >= 1, got {d}")
    specs = tuple(specs)
    if not specs:
        raise ConfigurationError("at least one neuron spec is required")
    L = sum(s.count for s in specs)
    rng = np.random.default_rng(seed)
    W = rng.standard_normal((d + 1, L)) / np.sqrt(d + 1.0)
    return HiddenLayer(W, specs, int(seed), int(d))


def hidden_transform(layer: HiddenLayer, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != layer.d:
        raise ShapeError(f"X has shape {X.shape}, expected (n, {layer.d})")
    W = layer.weights
    H = X @ W[:-1] + W[-1]
    for kind, cols in layer.blocks():
        fn = _ACTIVATIONS[kind]
        if fn is not None:
            H[:, cols] = fn(H[:, cols])
    return H


def iter_hidden(layer: HiddenLayer, X, batch_rows: int = DEFAULT_BATCH_ROWS) -> Iterator[np.ndarray]:
    """Yield hidden outputs for consecutive row batches of ``X``."""
    if batch_rows < 1:
        raise ConfigurationError(f"batch_rows must be >= 1, got {batch_rows}")
    n = len(X)
    for start in range(0, n, batch_rows):
        yield hidden_transform(layer, X[start:start + batch_rows])


@dataclass(frozen=True, eq=False)
class ElmModel:
    layer: HiddenLayer
    beta: np.ndarray
    gamma: float
    P: np.ndarray = field(repr=False)


def _check_xy(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeError(f"X must be 2-d, got shape {X.shape}")
    if y.shape != (X.shape[0],):
        raise ShapeError(f"y has shape {y.shape}, expected ({X.shape[0]},)")
    if X.shape[0] == 0:
        raise EmptyDataError("no training samples")
    return X, y


def train_gram(X, y, layer: HiddenLayer, batch_rows: int = DEFAULT_BATCH_ROWS) -> GramState:
    """Accumulate ``H^T H`` and ``H^T y`` batch by batch."""
    X, y = _check_xy(X, y)
    state = GramState.zeros(layer.width)
    for start, H in zip(range(0, len(X), batch_rows), iter_hidden(layer, X, batch_rows)):
        gram_accumulate(state, H, y[start:start + len(H)])
    return state


def train(X, y, layer: HiddenLayer, gamma: float, batch_rows: int = DEFAULT_BATCH_ROWS) -> ElmModel:
    state = train_gram(X, y, layer, batch_rows)
    beta, P = spd_solve(state, gamma)
    return ElmModel(layer, beta, float(gamma), P)


def predict(model: ElmModel, X, batch_rows: int = DEFAULT_BATCH_ROWS) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.layer.d:
        raise ShapeError(f"X has shape {X.shape}, expected (n, {model.layer.d})")
    out = np.empty(X.shape[0])
    for start, H in zip(range(0, len(X), batch_rows), iter_hidden(model.layer, X, batch_rows)):
        out[start:start + len(H)] = H @ model.beta
    return out


def validation_split(n: int, val_fraction: float, seed: int):
    """Seeded (train_idx, val_idx) with ``floor(n*val_fraction)`` held out."""
    if not 0.0 < val_fraction < 1.0:
        raise ConfigurationError(f"val_fraction must lie in (0, 1), got {val_fraction}")
    n_val = int(np.floor(n * val_fraction + 1e-9))
    if n_val < 1 or n - n_val < 1:
        raise ConfigurationError(
            f"validation split of {n} samples at fraction {val_fraction} leaves an empty side"
        )
    perm = np.random.default_rng(seed).permutation(n)
    return np.sort(perm[n_val:]), np.sort(perm[:n_val])


def select_gamma(X, y, layer: HiddenLayer, gamma_grid: Sequence[float],
                 val_fraction: float = 0.2, seed: int = 0,
                 batch_rows: int = DEFAULT_BATCH_ROWS):
    """Pick the regularization strength with the lowest validation MSE.

    The training-side Gram matrix is accumulated once and re-solved for
    each grid point. Ties go to the larger gamma.

    Returns
    -------
    gamma : float
    val_mse : ndarray, aligned with ``gamma_grid``
    """
    grid = np.asarray(list(gamma_grid), dtype=np.float64)
    if grid.size == 0:
        raise ConfigurationError("gamma grid is empty")
    if np.any(grid <= 0) or not np.all(np.isfinite(grid)):
        raise ConfigurationError("gamma grid values must be positive and finite")
    X, y = _check_xy(X, y)
    if grid.size == 1:
        return float(grid[0]), np.array([np.nan])

    tr, va = validation_split(len(X), val_fraction, seed)
    state = train_gram(X[tr], y[tr], layer, batch_rows)
    H_val = np.concatenate(list(iter_hidden(layer, X[va], batch_rows)))
    mse = np.empty(grid.size)
    for i, g in enumerate(grid):
        beta, _ = spd_solve(state, g)
        mse[i] = np.mean((H_val @ beta - y[va]) ** 2)

    best = None
    for i in np.argsort(grid, kind="stable"):
        if best is None or mse[i] <= mse[best]:
            best = i
    return float(grid[best]), mse
