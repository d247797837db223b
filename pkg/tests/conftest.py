import json

import numpy as np
import pytest

from tskanmixer.data_io import RawSeries, write_csv
from tskanmixer.synthetic import seasonal_trend_series

TOY_DATASETS = [
    {"name": "toyA", "features": 3, "time_steps": 240, "granularity": "1 hour",
     "split": {"unit": "row", "train": 160, "valid": 40, "test": 40}, "L": 12, "H": 4, "regime": "extended"},
    {"name": "toyB", "features": 3, "time_steps": 200, "granularity": "1 hour",
     "split": {"unit": "row", "train": 130, "valid": 35, "test": 35}, "L": 8, "H": 4, "regime": "extended"},
]

TOY_MODEL = {"batch": 16, "blocks": 1, "dropout": 0.1, "hidden_size": 8, "learning_rate": 0.003,
             "loss": "mse", "seed": 0, "patience": 2, "max_epochs": 3}
TOY_KAN = {"kan_dim": 5, "kan_grid": 3, "kan_k": 2}


@pytest.fixture
def toy_env(tmp_path):
    """A registry with two small datasets, their CSVs, and per-variant configs."""
    reg_path = tmp_path / "registry.json"
    reg_path.write_text(json.dumps({"version": 1, "datasets": TOY_DATASETS}))
    env = {"registry": reg_path, "data": {}, "config": {}, "root": tmp_path}
    for i, ds in enumerate(TOY_DATASETS):
        values = seasonal_trend_series(ds["time_steps"], period=12, seed=i)
        path = tmp_path / f"{ds['name']}.csv"
        write_csv(path, RawSeries(values, ["a", "b", "c"], None))
        env["data"][ds["name"]] = path
        for variant in ("tsmixer", "tskanmixer_v01", "tskanmixer_v02"):
            doc = dict(TOY_MODEL, dataset=ds["name"], variant=variant, L=ds["L"], H=ds["H"])
            if variant != "tsmixer":
                doc.update(TOY_KAN)
            cfg = tmp_path / f"{ds['name']}_{variant}.json"
            cfg.write_text(json.dumps(doc))
            env["config"][(ds["name"], variant)] = cfg
    return env


@pytest.fixture
def rng():
    return np.random.default_rng(0)
