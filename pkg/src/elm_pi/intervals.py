"""Per-sample prediction intervals from a pair of ELMs.

A data model predicts the output; a variance model, trained on the data
model's squared training residuals, predicts the noise variance. Weighted
Jackknife covariances of both output layers add the model uncertainty:

    PI = y_hat +- z(alpha) * sqrt(max(r2_hat, 0) + var_r + var_y)
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import elm
from .data import (
    GeneratorSpec,
    StandardizationParams,
    apply_standardizer,
    fit_standardizer,
    synth,
)
from .elm import DEFAULT_BATCH_ROWS, ElmModel, NeuronSpec
from .errors import DomainError, InsufficientDataError, ShapeError
from .jackknife import JackknifeAccumulator, WeightCovariance, prediction_variance
from .linalg import std_normal_quantile

__all__ = [
    "DEFAULT_SPECS",
    "DEFAULT_GAMMA_GRID",
    "PiConfig",
    "PiModel",
    "IntervalPrediction",
    "fit_pi",
    "predict_pi",
    "uncertainty_decay_curve",
]

# one linear and ten tanh neurons, used for the 1-d artificial problems
DEFAULT_SPECS = (NeuronSpec("linear", 1), NeuronSpec("tanh", 10))
DEFAULT_GAMMA_GRID = tuple(10.0 ** k for k in range(-6, 4))


@dataclass(frozen=True)
class PiConfig:
    specs_data: tuple[NeuronSpec, ...] = DEFAULT_SPECS
    specs_var: tuple[NeuronSpec, ...] = DEFAULT_SPECS
    gamma_grid: tuple[float, ...] = DEFAULT_GAMMA_GRID
    seed_data: int = 0
    seed_var: int = 1
    val_seed: int = 2
    val_fraction: float = 0.2
    batch_rows: int = DEFAULT_BATCH_ROWS
    # Train the variance model on leave-one-out residuals r/(1-leverage)
    # instead of in-sample residuals. Off by default.
    leave_out: bool = False


@dataclass(frozen=True, eq=False)
class PiModel:
    m_data: ElmModel
    cov_data: WeightCovariance
    m_var: ElmModel
    cov_var: WeightCovariance
    standardizer: StandardizationParams
    n_train: int
    leave_out: bool = False
    timings: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def d(self) -> int:
        return self.m_data.layer.d


@dataclass(frozen=True, eq=False)
class IntervalPrediction:
    """Column-wise interval predictions for ``n`` samples.

    ``r2_raw`` is the variance model output before clamping at zero.
    """

    y_hat: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    s: np.ndarray
    r2_raw: np.ndarray
    var_r: np.ndarray
    var_y: np.ndarray
    alpha: float

    def __len__(self):
        return self.y_hat.shape[0]

    @property
    def r2(self) -> np.ndarray:
        return np.maximum(self.r2_raw, 0.0)

    @property
    def half_width(self) -> np.ndarray:
        return 0.5 * (self.upper - self.lower)

    def columns(self) -> dict:
        return {
            "y_hat": self.y_hat, "lower": self.lower, "upper": self.upper,
            "s": self.s, "r2_raw": self.r2_raw, "var_r": self.var_r,
            "var_y": self.var_y,
        }


def _fit_one(Z, t, specs, seed, config):
    layer = elm.init_hidden_layer(Z.shape[1], specs, seed)
    gamma, _ = elm.select_gamma(Z, t, layer, config.gamma_grid,
                                config.val_fraction, config.val_seed,
                                config.batch_rows)
    return elm.train(Z, t, layer, gamma, config.batch_rows)


def _residual_pass(model: ElmModel, Z, t, batch_rows):
    """One pass over the data: residuals, leverages and Jackknife sums."""
    acc = JackknifeAccumulator(model.P)
    r = np.empty(len(t))
    lev = np.empty(len(t))
    for start, H in zip(range(0, len(Z), batch_rows),
                        elm.iter_hidden(model.layer, Z, batch_rows)):
        sl = slice(start, start + len(H))
        r[sl] = t[sl] - H @ model.beta
        lev[sl] = acc.update(H, r[sl])
    return r, lev, acc.finalize()


def fit_pi(X, y, config: Optional[PiConfig] = None) -> PiModel:
    """Train the data and variance models and their weight covariances.

    Inputs are standardized with statistics of ``X``; targets stay in their
    original units. Regularization of each model is chosen independently
    on a seeded validation split.
    """
    config = config or PiConfig()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ShapeError(f"X {X.shape} and y {y.shape} do not line up")
    if X.shape[0] < 2:
        raise InsufficientDataError(f"need at least 2 training samples, got {X.shape[0]}")

    timings = {}
    clock = time.perf_counter
    std = fit_standardizer(X)
    Z = apply_standardizer(std, X)

    t0 = clock()
    m_data = _fit_one(Z, y, config.specs_data, config.seed_data, config)
    t1 = clock()
    r, lev, cov_data = _residual_pass(m_data, Z, y, config.batch_rows)
    t2 = clock()

    if config.leave_out:
        r = r / np.maximum(1.0 - lev, 1e-8)
    m_var = _fit_one(Z, r * r, config.specs_var, config.seed_var, config)
    t3 = clock()
    _, _, cov_var = _residual_pass(m_var, Z, r * r, config.batch_rows)
    t4 = clock()

    timings.update(elm_data=t1 - t0, jackknife_data=t2 - t1,
                   elm_var=t3 - t2, jackknife_var=t4 - t3)
    return PiModel(m_data, cov_data, m_var, cov_var, std, X.shape[0],
                   config.leave_out, timings)


def predict_pi(model: PiModel, X, alpha: float = 0.95,
               batch_rows: int = DEFAULT_BATCH_ROWS) -> IntervalPrediction:
    """Intervals at coverage level ``alpha`` for each row of ``X``."""
    z = std_normal_quantile(alpha)
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.d:
        raise ShapeError(f"X has shape {X.shape}, expected (n, {model.d})")
    Z = apply_standardizer(model.standardizer, X)
    n = Z.shape[0]
    y_hat, r2_raw = np.empty(n), np.empty(n)
    var_y, var_r = np.empty(n), np.empty(n)
    for start in range(0, n, batch_rows):
        sl = slice(start, start + batch_rows)
        Hd = elm.hidden_transform(model.m_data.layer, Z[sl])
        Hv = elm.hidden_transform(model.m_var.layer, Z[sl])
        y_hat[sl] = Hd @ model.m_data.beta
        var_y[sl] = prediction_variance(Hd, model.cov_data.sigma, batch_rows)
        r2_raw[sl] = Hv @ model.m_var.beta
        var_r[sl] = prediction_variance(Hv, model.cov_var.sigma, batch_rows)
    s = np.sqrt(np.maximum(r2_raw, 0.0) + var_r + var_y)
    half = z * s
    return IntervalPrediction(y_hat, y_hat - half, y_hat + half, s,
                              r2_raw, var_r, var_y, float(alpha))


def uncertainty_decay_curve(generator: GeneratorSpec, n_values: Sequence[int],
                            alpha: float = 0.95, trials: int = 10,
                            config: Optional[PiConfig] = None,
                            grid_points: int = 200) -> dict:
    """Mean variance components on a fixed test grid as training size grows.

    Each trial draws fresh data and fresh hidden layers from seeds derived
    from ``generator.seed``, the trial index and ``n``.

    Returns a dict of arrays keyed ``n``, ``var_y``, ``var_r``, ``r2``.
    """
    n_values = [int(n) for n in n_values]
    if any(b <= a for a, b in zip(n_values, n_values[1:])):
        raise DomainError("n_values must be strictly increasing")
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    config = config or PiConfig()
    lo, hi = generator.x_range
    grid = np.linspace(lo, hi, grid_points)[:, None]
    out = {k: np.zeros(len(n_values)) for k in ("var_y", "var_r", "r2")}
    for i, n in enumerate(n_values):
        for t in range(trials):
            seed = generator.seed + 7919 * t + n
            ds, _ = synth(generator.with_(n=n, seed=seed))
            cfg = _reseed(config, seed)
            pred = predict_pi(fit_pi(ds.X, ds.y, cfg), grid, alpha)
            out["var_y"][i] += pred.var_y.mean() / trials
            out["var_r"][i] += pred.var_r.mean() / trials
            out["r2"][i] += pred.r2.mean() / trials
    out["n"] = np.array(n_values)
    return out


def _reseed(config: PiConfig, seed: int) -> PiConfig:
    from dataclasses import replace
    return replace(config, seed_data=config.seed_data + 3 * seed,
                   seed_var=config.seed_var + 3 * seed,
                   val_seed=config.val_seed + 3 * seed)
