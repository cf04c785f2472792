"""A random hidden layer plus a ridge-regularized linear readout.

Run: python3 demos/01_elm_basics.py
"""
import numpy as np

from elm_pi import elm
from elm_pi.data import GeneratorSpec, synth, true_mean

spec = GeneratorSpec(sigma=0.1, n=500, seed=0)
train, _ = synth(spec)

# 1 linear + 10 tanh neurons; weights are drawn once from the seed and never trained
specs = elm.parse_specs("linear:1,tanh:10")
layer = elm.init_hidden_layer(d=1, specs=specs, seed=0)
print("hidden layer:", elm.format_specs(layer.specs), "width", layer.width)

# pick the ridge strength on a held-out 20%, then refit on everything
grid = [1e-6, 1e-4, 1e-2, 1, 100]
gamma, val_mse = elm.select_gamma(train.X, train.y, layer, grid)
for g, m in zip(grid, val_mse):
    print(f"  gamma={g:<8g} validation mse={m:.5f}")
print("chosen gamma:", gamma)

model = elm.train(train.X, train.y, layer, gamma)

x = np.linspace(-3, 3, 7)[:, None]
pred = elm.predict(model, x)
for xi, p, f in zip(x[:, 0], pred, true_mean(spec, x)):
    print(f"x={xi:+.1f}  prediction={p:+.3f}  true mean={f:+.3f}")

# Streaming: the same model from the Gram matrix summed over small batches
small = elm.train(train.X, train.y, layer, gamma, batch_rows=37)
# weights may wobble at tiny gamma, predictions do not
diff = np.abs(elm.predict(small, train.X) - elm.predict(model, train.X)).max()
print("max |prediction difference| with 37-row batches:", diff)
