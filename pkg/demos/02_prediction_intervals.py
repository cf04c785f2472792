"""Per-sample prediction intervals on data whose noise grows towards the edges.

Run: python3 demos/02_prediction_intervals.py
"""
import numpy as np

from elm_pi import GeneratorSpec, fit_pi, picp, predict_pi, synth
from elm_pi.data import true_mean, true_sd

spec = GeneratorSpec(sigma="widening", n=1000, seed=1)
train, _ = synth(spec)
test, _ = synth(spec.with_(n=20_000, seed=2))

model = fit_pi(train.X, train.y)
print("gamma (data model):", model.m_data.gamma, " gamma (variance model):", model.m_var.gamma)
print("timings:", {k: round(v, 4) for k, v in model.timings.items()})

pred = predict_pi(model, test.X, alpha=0.95)
print(f"coverage on 20k fresh points at 95%: {picp(pred, test.y):.3f}")

# Compare estimated and true half-widths along x
x = np.linspace(-3, 3, 9)[:, None]
p = predict_pi(model, x, 0.95)
print("    x   y_hat    f(x)   half-width  true half-width")
for i in range(len(x)):
    print(f"{x[i, 0]:+5.2f} {p.y_hat[i]:+7.3f} {true_mean(spec, x)[i]:+7.3f}"
          f"   {p.half_width[i]:8.3f}   {1.96 * true_sd(spec, x)[i]:8.3f}")

# The interval is built from three variance pieces
print("mean noise variance r2:", p.r2.mean())
print("mean var_y (data model weights):", p.var_y.mean())
print("mean var_r (variance model weights):", p.var_r.mean())

for a in (0.5, 0.8, 0.9, 0.99):
    print(f"alpha={a}: coverage {picp(predict_pi(model, test.X, a), test.y):.3f}")
