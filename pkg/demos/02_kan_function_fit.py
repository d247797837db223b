"""Fit sin(pi x) with a two-layer KAN of shape 1 -> 5 -> 1.

Each edge is w_b * silu(x) + w_s * spline(x). Training is plain full-batch
Adam on 256 points. After fitting, the script prints a few predictions and
the learned inner edge functions sampled on a coarse grid.
"""

import numpy as np

from tskanmixer.kan import TwoDepthKan, kan_layer_forward
from tskanmixer.training import AdamState, adam_step

x = np.linspace(-1, 1, 256)[:, None]
y = np.sin(np.pi * x)

kan = TwoDepthKan.init(1, 1, hidden=5, G=5, k=3, rng_seed=0)
print(f"parameters: {sum(p.size for p in kan.parameters().values())}")
params, state = kan.parameters(), AdamState()
for step in range(1, 2001):
    out, cache = kan.forward(x)
    _, grads = kan.backward(cache, 2 * (out - y) / y.size)
    adam_step(params, grads, state, 0.01)
    if step in (1, 10, 100, 500, 1000, 2000):
        print(f"step {step:5d}  mse {np.mean((out - y) ** 2):.3e}")

pred = kan.forward(x)[0]
print(f"\nfinal train mse {np.mean((pred - y) ** 2):.3e}")
for xi in (-1.0, -0.5, 0.0, 0.25, 0.5):
    i = int(round((xi + 1) / 2 * 255))
    print(f"  x={x[i, 0]:+.3f}  sin={y[i, 0]:+.4f}  kan={pred[i, 0]:+.4f}")

# the hidden layer is five learned univariate functions of x
probe = np.linspace(-1, 1, 5)[:, None]
hidden = kan_layer_forward(kan.inner, probe)
print("\ninner edge functions at x = -1, -0.5, 0, 0.5, 1:")
for j in range(hidden.shape[1]):
    print(f"  phi_{j}: " + " ".join(f"{v:+.3f}" for v in hidden[:, j]))
