"""End-to-end runs: a CSV and a run config in, a trained checkpoint plus its records out."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .checkpoint import load_model, save_model
from .data_io import DatasetSpec, apply_split, load_csv
from .mixer import ForecastModel, ModelConfig
from .training import TrainConfig, WindowedDataset, evaluate, standardize, train


@dataclass
class PreparedData:
    data: WindowedDataset
    means: np.ndarray
    stds: np.ndarray
    ranges: dict


def prepare(values, spec: DatasetSpec, L: int, H: int, lookback_from_previous: bool = False) -> PreparedData:
    ranges = apply_split(values, spec)
    normed, means, stds = standardize(values, ranges["train"])
    data = WindowedDataset.from_series(normed, ranges, L, H, lookback_from_previous)
    return PreparedData(data, means, stds, ranges)


def run_training(data_path, model_cfg: ModelConfig, train_cfg: TrainConfig, spec: DatasetSpec, out_dir,
                 lookback_from_previous: bool = False) -> dict:
    """Train one model and write ``model.ckpt``, ``history.csv`` and ``summary.json``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    series = load_csv(data_path, spec)
    prep = prepare(series.values, spec, model_cfg.L, model_cfg.H, lookback_from_previous)

    model = ForecastModel(model_cfg)
    model, hist = train(model, prep.data, train_cfg)

    meta = {
        "dataset": spec.to_dict(),
        "lookback_from_previous": lookback_from_previous,
        "train": {"max_epochs": train_cfg.max_epochs, "patience": train_cfg.patience,
                  "loss": train_cfg.loss, "valid_loss": train_cfg.valid_loss, "learning_rate": train_cfg.learning_rate,
                  "batch_size": train_cfg.batch_size, "seed": train_cfg.seed},
        "best_epoch": hist.best_epoch,
    }
    save_model(out_dir / "model.ckpt", model, meta, {"means": prep.means, "stds": prep.stds})
    hist.to_csv(out_dir / "history.csv")

    v_mse, v_mae = evaluate(model, *prep.data.valid)
    t_mse, t_mae = evaluate(model, *prep.data.test)
    summary = {
        "dataset": spec.name, "variant": model_cfg.variant, "seed": model_cfg.seed, "status": "ok",
        "valid_mse": v_mse, "valid_mae": v_mae, "test_mse": t_mse, "test_mae": t_mae,
        "best_epoch": hist.best_epoch, "epochs": hist.epochs,
        "wall_seconds": hist.wall_seconds, "time_per_epoch": hist.wall_seconds / max(hist.epochs, 1),
        "num_parameters": model.num_parameters(),
    }
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    return summary


def evaluate_checkpoint(ckpt_path, data_path, partition: str = "test") -> dict:
    model, meta, extra = load_model(ckpt_path)
    spec = DatasetSpec.from_dict(meta["dataset"])
    series = load_csv(data_path, spec)
    ranges = apply_split(series.values, spec)
    normed = (series.values - extra["means"]) / extra["stds"]
    c = model.config
    data = WindowedDataset.from_series(normed, ranges, c.L, c.H, meta.get("lookback_from_previous", False))
    mse, mae = evaluate(model, *getattr(data, partition))
    return {"mse": mse, "mae": mae, "partition": partition, "samples": int(len(getattr(data, partition)[0]))}
