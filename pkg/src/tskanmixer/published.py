"""Published per-dataset hyperparameters for the three variants.

Rows are ``(batch, blocks, dropout, hidden_size, learning_rate[, kan_dim,
kan_grid, kan_k])``; input length and horizon come from the registry.
"""

from __future__ import annotations

from .data_io import REGIMES, load_registry, parse_run_config

TSMIXER = {
    "ETTh1": (32, 2, 0.3, 64, 0.0001),
    "ETTh2": (32, 4, 0.3, 64, 0.0001),
    "ETTm1": (32, 6, 0.9, 16, 0.0001),
    "ETTm2": (32, 6, 0.3, 16, 0.0001),
    "NN5_daily": (16, 6, 0.3, 64, 0.001),
    "NN5_weekly": (16, 6, 0.9, 64, 0.001),
    "CIF_2016": (8, 4, 0.9, 8, 0.001),
    "Hospital": (8, 6, 0.5, 16, 0.001),
    "Exchange": (8, 6, 0.5, 64, 0.001),
    "FRED_MD": (32, 6, 0.3, 16, 0.001),
}

TSKANMIXER_V01 = {
    "ETTh1": (320, 2, 0.3, 64, 0.0001, 512, 5, 3),
    "ETTh2": (320, 2, 0.3, 64, 0.0001, 1025, 5, 3),
    "ETTm1": (320, 2, 0.3, 64, 0.0001, 512, 5, 3),
    "ETTm2": (320, 4, 0.3, 64, 0.0001, 1025, 5, 3),
    "NN5_daily": (16, 4, 0.3, 32, 0.001, 56, 10, 2),
    "NN5_weekly": (8, 6, 0.7, 111, 0.001, 33, 3, 3),
    # degree 10 on a single interval: legal with the extended knot vector
    "CIF_2016": (16, 2, 0.9, 64, 0.001, 12, 1, 10),
    "Hospital": (8, 2, 0.5, 767, 0.001, 24, 10, 2),
    "Exchange": (128, 4, 0.3, 4, 0.001, 15, 10, 3),
    "FRED_MD": (32, 4, 0.3, 16, 0.001, 12, 10, 7),
}

TSKANMIXER_V02 = {
    "ETTh1": (320, 2, 0.3, 64, 0.0001, 1025, 5, 3),
    "ETTh2": (320, 2, 0.3, 64, 0.0001, 1025, 5, 3),
    "ETTm1": (320, 2, 0.3, 64, 0.0001, 1025, 5, 3),
    "ETTm2": (320, 2, 0.3, 64, 0.0001, 1025, 5, 3),
    "NN5_daily": (16, 4, 0.9, 32, 0.001, 14, 2, 3),
    "NN5_weekly": (8, 6, 0.7, 32, 0.001, 8, 7, 3),
    "CIF_2016": (16, 4, 0.4, 24, 0.001, 12, 7, 3),
    "Hospital": (8, 6, 0.3, 16, 0.001, 3, 10, 2),
    "Exchange": (32, 2, 0.3, 16, 0.001, 15, 10, 2),
    "FRED_MD": (16, 2, 0.5, 16, 0.001, 5, 5, 2),
}

TABLES = {"tsmixer": TSMIXER, "tskanmixer_v01": TSKANMIXER_V01, "tskanmixer_v02": TSKANMIXER_V02}
COLUMNS = ("batch", "blocks", "dropout", "hidden_size", "learning_rate", "kan_dim", "kan_grid", "kan_k")


def run_config_docs(variant: str, loss: str = "mse", seed: int = 0) -> dict[str, dict]:
    """JSON-ready run configs, one per dataset row."""
    registry = load_registry()
    docs = {}
    for name, row in TABLES[variant].items():
        spec = registry[name]
        doc = {"dataset": name, "variant": variant, "L": spec.L, "H": spec.H}
        doc.update(zip(COLUMNS, row))
        doc.update({"loss": loss, "seed": seed, "patience": REGIMES[spec.regime]["patience"]})
        docs[name] = doc
    return docs


def published_model_configs(variant: str) -> dict:
    return {name: parse_run_config(doc)[0] for name, doc in run_config_docs(variant).items()}


# Test-set results per dataset: variant -> (mse, mae); the KAN variants also
# carry their printed percentage changes (d_mse, d_mae) against tsmixer.
RESULTS = {
    "ETTh1": {"tskanmixer_v01": (0.285, 0.398, 33.57, 2.69), "tskanmixer_v02": (0.296, 0.405, 31.00, 0.98),
              "tsmixer": (0.429, 0.409)},
    "ETTh2": {"tskanmixer_v01": (0.199, 0.334, -2.05, 1.76), "tskanmixer_v02": (0.158, 0.308, 18.97, 9.41),
              "tsmixer": (0.195, 0.340)},
    "ETTm1": {"tskanmixer_v01": (0.190, 0.296, 34.26, 13.20), "tskanmixer_v02": (0.281, 0.348, 2.77, -2.05),
              "tsmixer": (0.289, 0.341)},
    "ETTm2": {"tskanmixer_v01": (0.131, 0.268, 9.66, 3.60), "tskanmixer_v02": (0.109, 0.251, 24.83, 9.71),
              "tsmixer": (0.145, 0.278)},
    "NN5_daily": {"tskanmixer_v01": (0.521, 0.498, -1.36, -1.01), "tskanmixer_v02": (0.506, 0.485, 1.56, 1.62),
                  "tsmixer": (0.514, 0.493)},
    "NN5_weekly": {"tskanmixer_v01": (0.878, 0.731, 2.34, 1.08), "tskanmixer_v02": (0.897, 0.736, 0.22, 0.41),
                   "tsmixer": (0.899, 0.739)},
    "CIF_2016": {"tskanmixer_v01": (3.631, 1.026, -34.58, -31.37), "tskanmixer_v02": (2.936, 0.895, -8.82, -14.59),
                 "tsmixer": (2.698, 0.781)},
    "Hospital": {"tskanmixer_v01": (1.429, 0.928, 11.08, 6.64), "tskanmixer_v02": (1.556, 0.979, 3.17, 1.51),
                 "tsmixer": (1.607, 0.994)},
    "Exchange": {"tskanmixer_v01": (0.017, 0.099, 5.56, 7.47), "tskanmixer_v02": (0.016, 0.094, 11.11, 12.15),
                 "tsmixer": (0.018, 0.107)},
    "FRED_MD": {"tskanmixer_v01": (0.037, 0.133, -5.71, -6.4), "tskanmixer_v02": (0.036, 0.125, -2.86, 0.0),
                "tsmixer": (0.035, 0.125)},
}


def delta_pairs():
    """``(dataset, variant, metric, baseline, candidate, printed_delta)`` for every KAN cell."""
    out = []
    for ds, row in RESULTS.items():
        base = row["tsmixer"]
        for variant in ("tskanmixer_v01", "tskanmixer_v02"):
            mse, mae, d_mse, d_mae = row[variant]
            out.append((ds, variant, "mse", base[0], mse, d_mse))
            out.append((ds, variant, "mae", base[1], mae, d_mae))
    return out
