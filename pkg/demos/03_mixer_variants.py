"""The three forecasting variants side by side.

All three share the mixer blocks (time mixing then feature mixing, each with
a residual). They differ only in where the KAN sits:

* tsmixer: dense temporal projection L -> H
* tskanmixer_v01: the projection is a two-layer KAN applied per feature
* tskanmixer_v02: keeps the dense projection and adds a KAN time-mixing
  layer with a residual between the blocks and the projection
"""

import numpy as np

from tskanmixer.mixer import ForecastModel, ModelConfig

L, H, C = 48, 12, 4
x = np.random.default_rng(0).normal(size=(2, L, C))

for variant in ("tsmixer", "tskanmixer_v01", "tskanmixer_v02"):
    kan = {} if variant == "tsmixer" else dict(kan_dim=2 * L + 1, kan_grid=5, kan_k=3)
    model = ForecastModel(ModelConfig(variant=variant, L=L, H=H, C=C, blocks=2, hidden_size=16, seed=0, **kan))
    y = model.predict(x)
    groups = {}
    for name, p in model.parameters().items():
        groups[name.split(".")[0]] = groups.get(name.split(".")[0], 0) + p.size
    print(f"{variant:15s} output {y.shape}  parameters {model.num_parameters():6d}  " +
          "  ".join(f"{k}={v}" for k, v in groups.items()))

# predictions for one sample do not depend on the rest of the batch at inference
model = ForecastModel(ModelConfig(variant="tskanmixer_v02", L=L, H=H, C=C, kan_dim=5, kan_grid=3, kan_k=2))
print("\nbatch independence:", np.allclose(model.predict(x)[:1], model.predict(x[:1])))
