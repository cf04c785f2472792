"""Dropping uncertain classifications to cut false positives.

A regression ELM is fitted to +-1 labels. Only the most confident
predictions are kept, either by |y_hat| alone or by |y_hat| relative
to each sample's interval width.

Run: python3 demos/05_false_positive_filtering.py
"""
from elm_pi import PiConfig, confusion_at_coverage, fit_pi, predict_pi, split, synth_skinlike
from elm_pi.data import skinlike_bayes_accuracy
from elm_pi.elm import parse_specs

ds = synth_skinlike(100_000, d_features=8, seed=0)
train, test = split(ds, 0.5, seed=0)
print(f"best achievable accuracy on this task: {skinlike_bayes_accuracy():.3f}")

specs = parse_specs("linear:8,sigmoid:100")
cfg = PiConfig(specs_data=specs, specs_var=specs, gamma_grid=(1e-3, 1e-1, 10.0, 1e3))
pred = predict_pi(fit_pi(train.X, train.y, cfg), test.X)

print("coverage   fp (|y_hat|)   fp (|y_hat|/s)   kept")
mse = confusion_at_coverage(pred.y_hat, pred, test.y, mode="mse")
per = confusion_at_coverage(pred.y_hat, pred, test.y, mode="per_sample")
for a, b in zip(mse, per):
    print(f"{a.coverage:8.2f}   {a.fp_rate:12.4f}   {b.fp_rate:14.4f}   {b.retained:6d}")
