"""Extreme Learning Machines with per-sample prediction intervals."""

__version__ = "0.1.0"

from .data import (
    Dataset,
    GeneratorSpec,
    fit_standardizer,
    apply_standardizer,
    load_csv,
    split,
    synth,
    synth_skinlike,
)
from .elm import (
    ElmModel,
    HiddenLayer,
    NeuronSpec,
    hidden_transform,
    init_hidden_layer,
    parse_specs,
    predict,
    select_gamma,
    train,
)
from .evaluation import (
    confusion_at_coverage,
    coverage_threshold,
    nmpiw,
    picp,
    uniform_pi_curve,
)
from .intervals import (
    IntervalPrediction,
    PiConfig,
    PiModel,
    fit_pi,
    predict_pi,
    uncertainty_decay_curve,
)
from .jackknife import WeightCovariance, jackknife_covariance, prediction_variance
from .linalg import GramState, gram_accumulate, spd_solve, std_normal_quantile
from .persistence import load_model, save_model
