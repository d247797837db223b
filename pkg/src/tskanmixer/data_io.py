"""Reading series from CSV and validating registry entries and run configs."""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .mixer import KAN_FIELDS, ConfigError, ModelConfig
from .training import TrainConfig

# epoch budget / patience for the two training regimes
REGIMES = {
    "ett": {"max_epochs": 1000, "patience": 10},
    "extended": {"max_epochs": 200, "patience": 5},
}


class CsvFormatError(ValueError):
    pass


class SplitError(ValueError):
    pass


@dataclass(frozen=True)
class DatasetSpec:
    name: str
    features: int
    split_unit: str  # "month" or "row"
    train: int
    valid: int
    test: int
    time_steps: int | None = None
    granularity: str = ""
    rows_per_month: int | None = None
    L: int | None = None
    H: int | None = None
    regime: str = "extended"

    def __post_init__(self):
        if self.split_unit not in ("month", "row"):
            raise SplitError(f"{self.name}: split unit must be 'month' or 'row', got {self.split_unit!r}")
        for part in ("train", "valid", "test"):
            if getattr(self, part) < 1:
                raise SplitError(f"{self.name}: {part} portion must be positive, got {getattr(self, part)}")
        if self.split_unit == "month" and not self.rows_per_month:
            raise SplitError(f"{self.name}: month-based split needs rows_per_month")
        if self.features < 1:
            raise SplitError(f"{self.name}: features must be positive")
        if self.regime not in REGIMES:
            raise SplitError(f"{self.name}: unknown regime {self.regime!r}")

    def row_counts(self) -> tuple[int, int, int]:
        scale = self.rows_per_month if self.split_unit == "month" else 1
        return self.train * scale, self.valid * scale, self.test * scale

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetSpec":
        split = d["split"]
        return cls(
            name=d["name"], features=int(d["features"]), split_unit=split["unit"],
            train=int(split["train"]), valid=int(split["valid"]), test=int(split["test"]),
            time_steps=d.get("time_steps"), granularity=d.get("granularity", ""),
            rows_per_month=d.get("rows_per_month"), L=d.get("L"), H=d.get("H"),
            regime=d.get("regime", "extended"),
        )

    def to_dict(self) -> dict:
        d = {
            "name": self.name, "features": self.features, "time_steps": self.time_steps,
            "granularity": self.granularity,
            "split": {"unit": self.split_unit, "train": self.train, "valid": self.valid, "test": self.test},
            "L": self.L, "H": self.H, "regime": self.regime,
        }
        if self.rows_per_month is not None:
            d["rows_per_month"] = self.rows_per_month
        return d


def load_registry(path=None) -> dict[str, DatasetSpec]:
    """Dataset specs keyed by name; the bundled registry when ``path`` is None."""
    if path is None:
        text = resources.files("tskanmixer").joinpath("registry.json").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    doc = json.loads(text)
    entries = doc["datasets"] if isinstance(doc, dict) else doc
    return {e["name"]: DatasetSpec.from_dict(e) for e in entries}


def get_spec(name: str, registry: dict | None = None) -> DatasetSpec:
    registry = load_registry() if registry is None else registry
    try:
        return registry[name]
    except KeyError:
        raise SplitError(f"unknown dataset {name!r}; known: {sorted(registry)}") from None


@dataclass
class RawSeries:
    values: np.ndarray  # [T, C]
    feature_names: list[str] = field(default_factory=list)
    timestamps: list[str] | None = None

    def __post_init__(self):
        if self.values.ndim != 2:
            raise CsvFormatError(f"series values must be 2-D, got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            r, c = np.argwhere(~np.isfinite(self.values))[0]
            raise CsvFormatError(f"missing or non-finite value at row {r}, column {c}")

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def C(self) -> int:
        return self.values.shape[1]


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def _is_text(s: str) -> bool:
    # empty cells are missing numbers, not labels
    return bool(s.strip()) and not _is_number(s)


def load_csv(path, spec: DatasetSpec | None = None) -> RawSeries:
    """Read a comma-separated numeric table.

    A header row is detected when its cells are not all numeric. A leading
    timestamp column is accepted when it is non-numeric, or when the row is
    one column wider than ``spec.features``.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [(i, r) for i, r in enumerate(csv.reader(fh), start=1) if r and any(c.strip() for c in r)]
    if not rows:
        raise CsvFormatError(f"{path}: no data rows")

    header = None
    first = rows[0][1]
    # column 0 may be a timestamp, so only the other cells decide
    if any(_is_text(c) for c in first[1:]) or (len(first) == 1 and _is_text(first[0])):
        header, rows = first, rows[1:]
    if not rows:
        raise CsvFormatError(f"{path}: header only, no data rows")

    width = len(rows[0][1])
    has_time = _is_text(rows[0][1][0])
    if spec is not None and not has_time:
        if width == spec.features + 1:
            has_time = True
        elif width != spec.features:
            raise CsvFormatError(
                f"{path}: {width} columns, expected {spec.features} features (plus optional timestamp)"
            )
    n_feat = width - 1 if has_time else width
    if spec is not None and n_feat != spec.features:
        raise CsvFormatError(f"{path}: found {n_feat} feature columns, expected {spec.features}")

    values = np.empty((len(rows), n_feat))
    stamps = [] if has_time else None
    for r, (line, cells) in enumerate(rows):
        if len(cells) != width:
            raise CsvFormatError(f"{path}: line {line} has {len(cells)} fields, expected {width}")
        if has_time:
            stamps.append(cells[0])
            cells = cells[1:]
        for c, cell in enumerate(cells):
            cell = cell.strip()
            if cell == "":
                raise CsvFormatError(f"{path}: missing value at data row {r} (line {line}), column {c}")
            try:
                v = float(cell)
            except ValueError:
                raise CsvFormatError(f"{path}: line {line}, column {c}: cannot parse {cell!r}") from None
            if not math.isfinite(v):
                raise CsvFormatError(f"{path}: missing value at data row {r} (line {line}), column {c}")
            values[r, c] = v

    if header is not None:
        names = header[1:] if has_time else header
    else:
        names = [f"f{i}" for i in range(n_feat)]
    if spec is not None and spec.time_steps is not None and spec.time_steps != len(values):
        warnings.warn(
            f"{spec.name}: registry lists {spec.time_steps} time steps, file has {len(values)}",
            stacklevel=2,
        )
    return RawSeries(values, list(names), stamps)


def write_csv(path, series: RawSeries, header: bool = True):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header:
            names = list(series.feature_names) or [f"f{i}" for i in range(series.C)]
            w.writerow((["date"] if series.timestamps is not None else []) + names)
        for i, row in enumerate(series.values):
            cells = [repr(float(v)) for v in row]
            if series.timestamps is not None:
                cells = [series.timestamps[i]] + cells
            w.writerow(cells)


def apply_split(series, spec: DatasetSpec) -> dict[str, tuple[int, int]]:
    """Contiguous ``[start, stop)`` row ranges for train, valid and test.

    Rows left over after the test range are unused.
    """
    T = series.T if isinstance(series, RawSeries) else int(np.shape(series)[0])
    n_tr, n_va, n_te = spec.row_counts()
    total = n_tr + n_va + n_te
    if total > T:
        raise SplitError(f"{spec.name}: split needs {total} rows ({n_tr}/{n_va}/{n_te}) but series has {T}")
    return {
        "train": (0, n_tr),
        "valid": (n_tr, n_tr + n_va),
        "test": (n_tr + n_va, total),
    }


# --------------------------------------------------------------- run configs

REQUIRED_KEYS = ("dataset", "variant", "L", "H", "batch", "blocks", "dropout", "hidden_size",
                 "learning_rate", "loss", "seed", "patience")
OPTIONAL_KEYS = ("max_epochs",)
_INT_KEYS = ("L", "H", "batch", "blocks", "hidden_size", "seed", "patience", "max_epochs") + KAN_FIELDS
_REAL_KEYS = ("dropout", "learning_rate")


def parse_run_config(doc: dict, registry: dict | None = None):
    """Validate a run-config mapping; returns ``(ModelConfig, TrainConfig, DatasetSpec)``."""
    if not isinstance(doc, dict):
        raise ConfigError("run config must be a JSON object")
    allowed = set(REQUIRED_KEYS) | set(OPTIONAL_KEYS) | set(KAN_FIELDS)
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise ConfigError(f"unknown config key(s): {unknown}")
    for key in REQUIRED_KEYS:
        if key not in doc:
            raise ConfigError(f"missing required config key: {key}")
    if doc["variant"] != "tsmixer":
        for key in KAN_FIELDS:
            if key not in doc:
                raise ConfigError(f"missing required config key: {key} (needed by {doc['variant']})")
    for key in _INT_KEYS:
        if key in doc and (isinstance(doc[key], bool) or not isinstance(doc[key], int)):
            raise ConfigError(f"config key {key} must be an integer, got {doc[key]!r}")
    for key in _REAL_KEYS:
        if isinstance(doc[key], bool) or not isinstance(doc[key], (int, float)):
            raise ConfigError(f"config key {key} must be a number, got {doc[key]!r}")
    if doc["patience"] < 1:
        raise ConfigError(f"patience must be >= 1, got {doc['patience']}")

    spec = get_spec(doc["dataset"], registry)
    regime = REGIMES[spec.regime]
    max_epochs = doc.get("max_epochs", regime["max_epochs"])
    if max_epochs < 1:
        raise ConfigError(f"max_epochs must be >= 1, got {max_epochs}")

    model_cfg = ModelConfig(
        variant=doc["variant"], L=doc["L"], H=doc["H"], C=spec.features,
        batch=doc["batch"], blocks=doc["blocks"], dropout=float(doc["dropout"]),
        hidden_size=doc["hidden_size"], learning_rate=float(doc["learning_rate"]),
        kan_dim=doc.get("kan_dim"), kan_grid=doc.get("kan_grid"), kan_k=doc.get("kan_k"),
        loss=doc["loss"], seed=doc["seed"],
    )
    train_cfg = TrainConfig(
        max_epochs=max_epochs, patience=doc["patience"], loss=doc["loss"],
        learning_rate=float(doc["learning_rate"]), batch_size=doc["batch"], seed=doc["seed"],
    )
    return model_cfg, train_cfg, spec


def load_run_config(path, registry: dict | None = None):
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return parse_run_config(doc, registry)
