"""The weight covariance from a single streaming pass, and how it shrinks with data.

Run: python3 demos/03_jackknife_batches.py
"""
import numpy as np

from elm_pi import elm
from elm_pi.data import GeneratorSpec, synth
from elm_pi.intervals import uncertainty_decay_curve
from elm_pi.jackknife import jackknife_covariance, prediction_variance

ds, _ = synth(GeneratorSpec(n=5000, seed=3))
layer = elm.init_hidden_layer(1, elm.parse_specs("linear:1,tanh:10"), seed=0)
model = elm.train(ds.X, ds.y, layer, gamma=1e-3)
r = ds.y - elm.predict(model, ds.X)

# Hidden outputs are generated in 500-row blocks; the full H never exists
blocks = elm.iter_hidden(layer, ds.X, batch_rows=500)
cov = jackknife_covariance(blocks, r, model.P)
print("Sigma shape:", cov.sigma.shape, " clamped leverages:", cov.leverage_clamp_count)

# Same result with the whole matrix at once
H = elm.hidden_transform(layer, ds.X)
full = jackknife_covariance([H], r, model.P)
print("relative difference vs one block:",
      np.linalg.norm(full.sigma - cov.sigma) / np.linalg.norm(full.sigma))

grid = np.linspace(-3, 3, 5)[:, None]
var = prediction_variance(elm.hidden_transform(layer, grid), cov)
print("model variance of y_hat on a grid:", np.array2string(var, precision=6))

# More data, less model uncertainty
out = uncertainty_decay_curve(GeneratorSpec(sigma=0.3), [50, 200, 800, 3200], trials=5)
for n, vy, vr in zip(out["n"], out["var_y"], out["var_r"]):
    print(f"N={n:5d}  var_y={vy:.2e}  var_r={vr:.2e}")
