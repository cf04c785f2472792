"""Command-line front end: ``elm-pi {fit,predict,eval,experiment}``.

Reports are ``key=value`` lines; tabular outputs are CSV. Failures print a
single ``error=...`` record to stderr, remove any files already written and
exit with status 2 (bad input or configuration) or 1 (anything else).
"""

from __future__ import annotations

import argparse
import errno
import json
import os
import sys
import time
from contextlib import nullcontext
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .data import (
    GeneratorSpec,
    load_csv,
    split,
    synth,
    synth_skinlike,
    true_mean,
    true_sd,
    write_csv,
)
from .elm import parse_specs
from .errors import ConfigurationError, ElmPiError, SchemaError
from .evaluation import DEFAULT_COVERAGES, confusion_at_coverage, interval_report, uniform_pi_curve
from .intervals import DEFAULT_GAMMA_GRID, PiConfig, fit_pi, predict_pi, uncertainty_decay_curve
from .linalg import std_normal_quantile
from .persistence import load_model, save_model

EXPERIMENTS = ("artificial", "decay", "boundary", "fp-coverage")
EXIT_INPUT = 2
EXIT_FAILURE = 1


class _Outputs:
    """Tracks written files so a failed run leaves nothing behind."""

    def __init__(self):
        self.paths = []

    def add(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.paths.append(path)
        return path

    def rollback(self):
        for p in reversed(self.paths):
            p.unlink(missing_ok=True)


def _floats(text):
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise ConfigurationError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text):
    return tuple(int(v) for v in _floats(text))


def _target(text):
    if text is None:
        return None
    try:
        return int(text)
    except ValueError:
        return text


def _write_record(path, record: dict, outputs: _Outputs):
    with outputs.add(path).open("w") as fh:
        for k, v in record.items():
            fh.write(f"{k}={v}\n")


def _echo_config(args, path, outputs):
    cfg = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    cfg["version"] = __version__
    _write_record(path, cfg, outputs)


def _pi_config(args) -> PiConfig:
    return PiConfig(
        specs_data=parse_specs(args.neurons_data),
        specs_var=parse_specs(args.neurons_var),
        gamma_grid=_floats(args.gamma_grid),
        seed_data=args.seed,
        seed_var=args.seed + 1,
        val_seed=args.seed + 2,
        val_fraction=args.val_fraction,
        batch_rows=args.batch_rows,
        leave_out=args.leave_out,
    )


def _require_file(path):
    if not Path(path).is_file():
        raise FileNotFoundError(errno.ENOENT, "input file not found", str(path))
    return path


# ---------------------------------------------------------------------------
# fit

def _fit_source(args):
    if args.data:
        return load_csv(_require_file(args.data), _target(args.target), not args.no_header)
    noise = args.noise if args.noise is not None else "widening"
    sigma = noise if noise in ("widening", "bump") else float(noise)
    ds, _ = synth(GeneratorSpec(sigma=sigma, n=args.n, seed=args.seed))
    return ds


def cmd_fit(args, outputs):
    out = Path(args.out)
    ds = _fit_source(args)
    if args.train_fraction is not None:
        train, test = split(ds, args.train_fraction, args.seed)
        names = list(ds.feature_names or [f"x{j}" for j in range(ds.d)])
        for part, name in ((train, "train.csv"), (test, "test.csv")):
            cols = {n: part.X[:, j] for j, n in enumerate(names)}
            cols["y"] = part.y
            write_csv(outputs.add(out / name), cols)
    else:
        train = ds

    t0 = time.perf_counter()
    model = fit_pi(train.X, train.y, _pi_config(args))
    total = time.perf_counter() - t0
    save_model(model, outputs.add(out / "model.elmpi"))
    report = {
        "n_train": model.n_train,
        "d": model.d,
        "neurons_data": args.neurons_data,
        "neurons_var": args.neurons_var,
        "L_data": model.m_data.layer.width,
        "L_var": model.m_var.layer.width,
        "gamma_data": repr(model.m_data.gamma),
        "gamma_var": repr(model.m_var.gamma),
        "leverage_clamps_data": model.cov_data.leverage_clamp_count,
        "leverage_clamps_var": model.cov_var.leverage_clamp_count,
    }
    report.update({f"time_{k}": f"{v:.6f}" for k, v in model.timings.items()})
    report["time_total"] = f"{total:.6f}"
    _write_record(out / "fit_report.txt", report, outputs)
    _echo_config(args, out / "config.txt", outputs)
    for k, v in report.items():
        print(f"{k}={v}")


# ---------------------------------------------------------------------------
# predict

def cmd_predict(args, outputs):
    model = load_model(_require_file(args.model))
    ds = load_csv(_require_file(args.data), _target(args.target), not args.no_header)
    if ds.d != model.d:
        raise SchemaError(f"data has {ds.d} features but the model expects {model.d}")
    t0 = time.perf_counter()
    pred = predict_pi(model, ds.X, args.alpha, args.batch_rows)
    elapsed = time.perf_counter() - t0
    out = Path(args.out)
    write_csv(outputs.add(out), pred.columns())
    _echo_config(args, out.with_name(out.stem + ".config.txt"), outputs)
    print(f"n={len(pred)}")
    print(f"alpha={args.alpha!r}")
    print(f"time_predict={elapsed:.6f}")


# ---------------------------------------------------------------------------
# eval

def cmd_eval(args, outputs):
    iv = load_csv(_require_file(args.intervals), None, True)
    names = list(iv.feature_names)
    for col in ("lower", "upper"):
        if col not in names:
            raise SchemaError(f"intervals file lacks a {col!r} column")
    truth = load_csv(_require_file(args.truth), _target(args.target), not args.no_header)
    if len(truth) != len(iv):
        raise SchemaError(f"{len(iv)} intervals but {len(truth)} targets")
    lower = iv.X[:, names.index("lower")]
    upper = iv.X[:, names.index("upper")]
    rep = interval_report((lower, upper), truth.y, args.alpha)
    record = {"picp": repr(rep.picp), "nmpiw": repr(rep.nmpiw),
              "alpha": repr(rep.alpha), "n": rep.n}
    if args.out:
        _write_record(args.out, record, outputs)
    if args.curve:
        if "y_hat" not in names:
            raise SchemaError("intervals file lacks a 'y_hat' column needed for the curve")
        curve = uniform_pi_curve(iv.X[:, names.index("y_hat")], truth.y, args.curve_points)
        write_csv(outputs.add(args.curve),
                  {"nmpiw": curve[:, 0], "picp": curve[:, 1], "half_width": curve[:, 2]})
    for k, v in record.items():
        print(f"{k}={v}")


# ---------------------------------------------------------------------------
# experiments

def _exp_artificial(args, out, outputs):
    cfg = _pi_config(args)
    sizes = _ints(args.n_values) if args.n_values else (30, 100, 1000)
    noises = ["widening", 0.1, 0.3]
    z = std_normal_quantile(args.alpha)
    for noise in noises:
        base = GeneratorSpec(sigma=noise, seed=args.seed)
        grid = np.linspace(*base.x_range, args.grid_points)[:, None]
        tag = noise if isinstance(noise, str) else f"const{noise:g}"
        for n in sizes:
            ds, _ = synth(base.with_(n=n, seed=args.seed + n))
            pred = predict_pi(fit_pi(ds.X, ds.y, cfg), grid, args.alpha)
            f, sd = true_mean(base, grid), true_sd(base, grid)
            cols = {"x": grid[:, 0], "f": f, "sigma": sd,
                    "true_lower": f - z * sd, "true_upper": f + z * sd}
            cols.update(pred.columns())
            write_csv(outputs.add(out / f"artificial_{tag}_n{n}_grid.csv"), cols)
            write_csv(outputs.add(out / f"artificial_{tag}_n{n}_train.csv"),
                      {"x": ds.X[:, 0], "y": ds.y})


def _exp_decay(args, out, outputs):
    sizes = _ints(args.n_values) if args.n_values else (100, 200, 400, 800, 1600, 3200)
    noise = args.noise if args.noise is not None else "widening"
    sigma = noise if noise in ("widening", "bump") else float(noise)
    table = uncertainty_decay_curve(GeneratorSpec(sigma=sigma, seed=args.seed), sizes,
                                    args.alpha, args.trials, _pi_config(args))
    table["var_y_plus_var_r"] = table["var_y"] + table["var_r"]
    write_csv(outputs.add(out / "decay.csv"),
              {k: table[k] for k in ("n", "var_y", "var_r", "r2", "var_y_plus_var_r")})


def _exp_boundary(args, out, outputs):
    if args.data:
        ds = load_csv(_require_file(args.data), _target(args.target), not args.no_header)
    else:
        ds, _ = synth(GeneratorSpec(n=args.n, seed=args.seed))
    train, test = split(ds, args.train_fraction or 0.7, args.seed)
    pred = predict_pi(fit_pi(train.X, train.y, _pi_config(args)), test.X, args.alpha)
    curve = uniform_pi_curve(pred.y_hat, test.y, args.curve_points)
    write_csv(outputs.add(out / "boundary_curve.csv"),
              {"nmpiw": curve[:, 0], "picp": curve[:, 1], "half_width": curve[:, 2]})
    rep = interval_report(pred, test.y, args.alpha)
    write_csv(outputs.add(out / "boundary_point.csv"),
              {"nmpiw": np.array([rep.nmpiw]), "picp": np.array([rep.picp]),
               "alpha": np.array([rep.alpha])})


def _exp_fp_coverage(args, out, outputs):
    n = args.n if args.n_set else 200_000
    ds = synth_skinlike(n, args.features, args.seed)
    train, test = split(ds, 0.5, args.seed)
    cfg = _pi_config(args)
    if not args.neurons_set:
        specs = parse_specs(f"linear:{args.features},sigmoid:100")
        cfg = replace(cfg, specs_data=specs, specs_var=specs)
    pred = predict_pi(fit_pi(train.X, train.y, cfg), test.X, args.alpha)
    rows = {k: [] for k in ("mode", "coverage", "theta", "tp_rate", "fp_rate", "retained")}
    for mode in ("mse", "per_sample"):
        for pt in confusion_at_coverage(pred.y_hat, pred, test.y, DEFAULT_COVERAGES, mode):
            rows["mode"].append(mode)
            for k in ("coverage", "theta", "tp_rate", "fp_rate", "retained"):
                rows[k].append(getattr(pt, k))
    cols = {k: np.array(v) if k != "mode" else np.array(v, dtype=object) for k, v in rows.items()}
    cols["retained"] = cols["retained"].astype(int)
    write_csv(outputs.add(out / "fp_coverage.csv"), cols)


_EXPERIMENTS = {
    "artificial": _exp_artificial,
    "decay": _exp_decay,
    "boundary": _exp_boundary,
    "fp-coverage": _exp_fp_coverage,
}


def cmd_experiment(args, outputs):
    if args.name not in _EXPERIMENTS:
        raise ConfigurationError(
            f"unknown experiment {args.name!r}; valid names: {', '.join(EXPERIMENTS)}"
        )
    out = Path(args.out)
    _EXPERIMENTS[args.name](args, out, outputs)
    _echo_config(args, out / f"{args.name}.config.txt", outputs)
    print(f"experiment={args.name}")
    print(f"files={len(outputs.paths)}")


# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigurationError(message)


def _model_options(p):
    p.add_argument("--neurons-data", default="linear:1,tanh:10")
    p.add_argument("--neurons-var", default="linear:1,tanh:10")
    p.add_argument("--gamma-grid", default=",".join(f"{g:g}" for g in DEFAULT_GAMMA_GRID))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--batch-rows", type=int, default=4096)
    p.add_argument("--val-fraction", type=float, default=0.2)
    p.add_argument("--leave-out", action="store_true",
                   help="train the variance model on leave-one-out residuals")


def _data_options(p):
    p.add_argument("--data", help="CSV file")
    p.add_argument("--target", default=None, help="target column name or index")
    p.add_argument("--no-header", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="elm-pi", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("fit", help="train a prediction-interval model")
    _data_options(p)
    p.add_argument("--noise", default=None,
                   help="synthetic noise: 'widening', 'bump' or a constant")
    p.add_argument("--n", type=int, default=1000, help="synthetic sample count")
    p.add_argument("--train-fraction", type=float, default=None)
    p.add_argument("--out", required=True, help="output directory")
    _model_options(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="write intervals for new inputs")
    p.add_argument("--model", required=True)
    _data_options(p)
    p.add_argument("--alpha", type=float, default=0.95)
    p.add_argument("--batch-rows", type=int, default=4096)
    p.add_argument("--out", required=True, help="intervals CSV")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="PICP and NMPIW of an intervals CSV")
    p.add_argument("--intervals", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--target", default="-1")
    p.add_argument("--no-header", action="store_true")
    p.add_argument("--alpha", type=float, default=0.95)
    p.add_argument("--out", default=None, help="report file")
    p.add_argument("--curve", default=None, help="uniform-interval boundary CSV")
    p.add_argument("--curve-points", type=int, default=101)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("experiment", help="reproduce a figure's data series")
    p.add_argument("name", help=f"one of: {', '.join(EXPERIMENTS)}")
    _data_options(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--alpha", type=float, default=0.95)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--n-values", default=None, help="comma-separated training sizes")
    p.add_argument("--noise", default=None)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--grid-points", type=int, default=200)
    p.add_argument("--curve-points", type=int, default=101)
    p.add_argument("--features", type=int, default=8)
    p.add_argument("--train-fraction", type=float, default=None)
    _model_options(p)
    p.set_defaults(func=cmd_experiment)
    return parser


def _thread_limit():
    value = os.environ.get("ELM_PI_THREADS")
    if not value:
        return nullcontext()
    try:
        n = int(value)
    except ValueError:
        raise ConfigurationError(f"ELM_PI_THREADS must be an integer, got {value!r}") from None
    if n < 1:
        raise ConfigurationError(f"ELM_PI_THREADS must be >= 1, got {n}")
    from threadpoolctl import threadpool_limits
    return threadpool_limits(limits=n)


def _error_record(exc) -> str:
    fields = {"error": type(exc).__name__, "message": str(exc)}
    path = getattr(exc, "filename", None)
    if path:
        fields["path"] = str(path)
    return " ".join(f"{k}={json.dumps(v)}" for k, v in fields.items())


def main(argv=None) -> int:
    outputs = _Outputs()
    try:
        args = build_parser().parse_args(argv)
        if args.command == "experiment":
            args.n_set = args.n is not None
            if args.n is None:
                args.n = 1000
            args.neurons_set = (args.neurons_data, args.neurons_var) != (
                "linear:1,tanh:10", "linear:1,tanh:10")
        with _thread_limit():
            args.func(args, outputs)
    except (ElmPiError, OSError, ValueError) as exc:
        outputs.rollback()
        print(_error_record(exc), file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        outputs.rollback()
        print(_error_record(exc), file=sys.stderr)
        return EXIT_FAILURE
    return 0


if __name__ == "__main__":
    sys.exit(main())
