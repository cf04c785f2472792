"""End-to-end acceptance checks, one test per criterion.

Every test prints a ``criterion N: PASS|FAIL|SKIP ...`` line; the lines are
also collected into the terminal summary.
"""

import os
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.stats import spearmanr

from oracles import bisect_quantile, dense_jackknife
from elm_pi import elm
from elm_pi.data import GeneratorSpec, load_csv, split, synth, synth_skinlike, true_sd
from elm_pi.elm import parse_specs
from elm_pi.evaluation import confusion_at_coverage, nmpiw, picp
from elm_pi.intervals import PiConfig, fit_pi, predict_pi, uncertainty_decay_curve
from elm_pi.jackknife import JackknifeAccumulator, jackknife_covariance, prediction_variance
from elm_pi.linalg import GramState, gram_accumulate, merge_gram, spd_solve, std_normal_quantile
from elm_pi.persistence import dumps, load_model, save_model

RESULTS = []


def report(n, title, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} {title} ({detail})"
    RESULTS.append(line)
    print(line)
    assert ok, line


def test_c01_jackknife_oracle():
    rng = np.random.default_rng(1)
    worst, spent = 0.0, 0.0
    for i in range(100):
        gamma = (1e-3, 1e-1, 10.0)[i % 3]
        H = rng.standard_normal((50, 8))
        r = rng.standard_normal(50)
        expected, P_ref = dense_jackknife(H, r, gamma)
        t0 = time.perf_counter()
        state = gram_accumulate(GramState.zeros(8), H, r)
        _, P = spd_solve(state, gamma)
        got = jackknife_covariance([H[:17], H[17:]], r, P).sigma
        spent += time.perf_counter() - t0
        worst = max(worst, np.linalg.norm(got - expected) / np.linalg.norm(expected))
    report(1, "jackknife oracle equivalence", worst <= 1e-10 and spent < 1.0,
           f"max rel frobenius {worst:.2e}, {spent:.3f} s")


def _rel(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300)


def test_c02_batch_invariance():
    t0 = time.perf_counter()
    ds, _ = synth(GeneratorSpec(n=2000, seed=2))
    layer = elm.init_hidden_layer(1, parse_specs("linear:1,tanh:10"), 0)
    H = elm.hidden_transform(layer, ds.X)
    gamma = 1e-2
    beta1, P1 = spd_solve(gram_accumulate(GramState.zeros(11), H, ds.y), gamma)
    r = ds.y - H @ beta1
    acc = JackknifeAccumulator(P1)
    acc.update(H, r)
    sigma1 = acc.finalize().sigma
    pv1 = prediction_variance(H, sigma1)

    worst = 0.0
    for k in (1, 2, 5, 10):
        parts = np.array_split(np.arange(len(ds)), k)
        states = [gram_accumulate(GramState.zeros(11), H[p], ds.y[p]) for p in parts]
        beta, P = spd_solve(merge_gram(*states), gamma)
        accs = []
        for p in parts:
            a = JackknifeAccumulator(P)
            a.update(H[p], ds.y[p] - H[p] @ beta)
            accs.append(a)
        for a in accs[1:]:
            accs[0].merge(a)
        sigma = accs[0].finalize().sigma
        y_hat = np.concatenate([H[p] @ beta for p in parts])
        pv = prediction_variance(H, sigma, batch_rows=len(ds) // k + 1)
        worst = max(worst, _rel(beta, beta1), _rel(y_hat, H @ beta1), _rel(sigma, sigma1), _rel(pv, pv1))
    # the full pipeline with different batch sizes, at a fixed gamma
    cfg = PiConfig(gamma_grid=(1e-2,))
    a = fit_pi(ds.X, ds.y, cfg)
    b = fit_pi(ds.X, ds.y, PiConfig(gamma_grid=(1e-2,), batch_rows=len(ds) // 5))
    pa, pb = predict_pi(a, ds.X), predict_pi(b, ds.X, batch_rows=200)
    worst = max(worst, _rel(pb.lower, pa.lower), _rel(pb.upper, pa.upper),
                _rel(b.cov_var.sigma, a.cov_var.sigma))
    spent = time.perf_counter() - t0
    report(2, "batch invariance", worst <= 1e-10 and spent < 5.0,
           f"max rel diff {worst:.2e}, {spent:.2f} s")


def test_c03_coverage_calibration():
    t0 = time.perf_counter()
    covs, rhos = [], []
    for seed in range(10):
        spec = GeneratorSpec(n=1000, seed=seed)
        train, _ = synth(spec)
        test, _ = synth(spec.with_(n=10_000, seed=10_000 + seed))
        model = fit_pi(train.X, train.y, PiConfig(seed_data=3 * seed, seed_var=3 * seed + 1,
                                                   val_seed=3 * seed + 2))
        pred = predict_pi(model, test.X, 0.95)
        covs.append(picp(pred, test.y))
        rhos.append(spearmanr(pred.half_width, true_sd(spec, test.X)).statistic)
    spent = time.perf_counter() - t0
    cov, rho = float(np.median(covs)), float(np.median(rhos))
    report(3, "coverage calibration", 0.92 <= cov <= 0.98 and rho >= 0.7 and spent < 30,
           f"median coverage {cov:.4f}, median spearman {rho:.3f}, {spent:.1f} s")


def test_c04_uncertainty_decay():
    t0 = time.perf_counter()
    out = uncertainty_decay_curve(GeneratorSpec(seed=0), [100, 200, 400, 800, 1600, 3200], 0.95, 10)
    spent = time.perf_counter() - t0
    total = out["var_y"] + out["var_r"]
    steps = int(np.sum(np.diff(total) < 0))
    report(4, "uncertainty decay", steps >= 4 and spent < 60,
           f"{steps}/5 decreasing steps, {spent:.1f} s")


def test_c05_scarcity_conservatism():
    covs = []
    for seed in range(20):
        spec = GeneratorSpec(n=30, seed=seed)
        train, _ = synth(spec)
        test, _ = synth(spec.with_(n=10_000, seed=10_000 + seed))
        model = fit_pi(train.X, train.y, PiConfig(seed_data=3 * seed, seed_var=3 * seed + 1,
                                                   val_seed=3 * seed + 2))
        covs.append(picp(predict_pi(model, test.X, 0.95), test.y))
    cov = float(np.mean(covs))
    report(5, "scarcity conservatism", cov >= 0.93,
           f"mean coverage {cov:.4f}, median {np.median(covs):.4f} over 20 seeds")


def _concrete_path():
    env = os.environ.get("ELM_PI_CONCRETE")
    for cand in (env, Path(__file__).parent / "data" / "concrete.csv"):
        if cand and Path(cand).is_file():
            return Path(cand)
    return None


def test_c06_concrete_band():
    path = _concrete_path()
    if path is None:
        line = "criterion 6: SKIP concrete reproduction band (dataset not found; set ELM_PI_CONCRETE)"
        RESULTS.append(line)
        print(line)
        pytest.skip("concrete dataset not available")
    t0 = time.perf_counter()
    ds = load_csv(path, -1)
    pc, nw = [], []
    for seed in range(30):
        train, test = split(ds, 0.7, seed)
        specs = parse_specs(f"linear:{ds.d},sigmoid:100")
        model = fit_pi(train.X, train.y, PiConfig(specs_data=specs, specs_var=specs,
                                                   seed_data=3 * seed, seed_var=3 * seed + 1,
                                                   val_seed=3 * seed + 2))
        pred = predict_pi(model, test.X, 0.95)
        pc.append(picp(pred, test.y))
        nw.append(nmpiw(pred, test.y))
    spent = time.perf_counter() - t0
    mp, mn = float(np.median(pc)), float(np.median(nw))
    report(6, "concrete reproduction band", 0.86 <= mp <= 0.97 and mn <= 0.50 and spent < 120,
           f"median picp {mp:.4f}, median nmpiw {mn:.4f}, {spent:.1f} s")


def test_c07_false_positive_reduction():
    t0 = time.perf_counter()
    ds = synth_skinlike(200_000, 8, seed=0)
    train, test = split(ds, 0.5, 0)
    specs = parse_specs("linear:8,sigmoid:100")
    cfg = PiConfig(specs_data=specs, specs_var=specs, gamma_grid=(1e-3, 1e-1, 10.0, 1e3))
    pred = predict_pi(fit_pi(train.X, train.y, cfg), test.X)
    per = confusion_at_coverage(pred.y_hat, pred, test.y, [1.0, 0.01], "per_sample")
    mse = confusion_at_coverage(pred.y_hat, pred, test.y, [1.0, 0.01], "mse")
    spent = time.perf_counter() - t0
    fp_full, fp_per, fp_mse = per[0].fp_rate, per[1].fp_rate, mse[1].fp_rate
    # a NaN rate means no negatives survived, i.e. no false positives possible
    fp_per_v = 0.0 if np.isnan(fp_per) else fp_per
    fp_mse_v = 0.0 if np.isnan(fp_mse) else fp_mse
    ok = fp_per_v <= fp_mse_v and fp_per_v <= 0.1 * fp_full and spent < 120
    report(7, "false-positive reduction", ok,
           f"fp unfiltered {fp_full:.4f}, at 1%: per-sample {fp_per}, mse {fp_mse}, {spent:.1f} s")


def test_c08_runtime_overhead():
    rng = np.random.default_rng(8)
    X = rng.standard_normal((100_000, 50))
    y = np.sin(X[:, 0]) + 0.5 * X[:, 1] * X[:, 2] + 0.1 * rng.standard_normal(100_000)
    specs = parse_specs("linear:50,sigmoid:297")

    t0 = time.perf_counter()
    layer = elm.init_hidden_layer(50, specs, 0)
    m = elm.train(X, y, layer, 1.0)
    elm.predict(m, X)
    plain = time.perf_counter() - t0

    t0 = time.perf_counter()
    model = fit_pi(X, y, PiConfig(specs_data=specs, specs_var=specs, gamma_grid=(1.0,)))
    predict_pi(model, X)
    full = time.perf_counter() - t0
    factor = full / plain
    report(8, "runtime overhead factor", factor <= 8.0,
           f"plain {plain:.2f} s, pipeline {full:.2f} s, factor {factor:.2f}")


def test_c09_quantile_accuracy():
    cs = np.linspace(0.001, 0.999, 1002)[1:-1]
    worst = max(abs(std_normal_quantile(c) - bisect_quantile(c)) for c in cs)
    z95 = std_normal_quantile(0.95)
    report(9, "quantile accuracy", worst <= 1e-7 and abs(z95 - 1.959964) <= 1e-6,
           f"max abs error {worst:.2e}, z(0.95)={z95:.7f}")


def test_c10_persistence_roundtrip(tmp_path):
    ds, _ = synth(GeneratorSpec(n=500, seed=10))
    model = fit_pi(ds.X, ds.y)
    save_model(model, tmp_path / "a")
    back = load_model(tmp_path / "a")
    X = np.random.default_rng(10).uniform(-3, 3, (1000, 1))
    p, q = predict_pi(model, X), predict_pi(back, X)
    diff = max(np.max(np.abs(q.columns()[k] - v)) for k, v in p.columns().items())
    save_model(back, tmp_path / "b")
    same = (tmp_path / "a").read_bytes() == (tmp_path / "b").read_bytes()
    report(10, "persistence round-trip", diff <= 1e-15 and same and dumps(back) == dumps(model),
           f"max abs diff {diff:.1e}, byte-identical={same}")
