"""Self-describing binary checkpoints.

Layout::

    b"TSKMCKPT"                magic
    uint32 little-endian       format version
    uint64 little-endian       header length in bytes
    header                     UTF-8 JSON (sorted keys): kind, config, metadata, array table
    payload                    float64 little-endian arrays, concatenated in table order

Writing is deterministic, so equal models give byte-identical files.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .kan import KanLayerParams, TwoDepthKan
from .mixer import ForecastModel, ModelConfig
from .spline import KnotGrid

MAGIC = b"TSKMCKPT"
VERSION = 1


class CheckpointError(ValueError):
    pass


def write_checkpoint(path, kind: str, config: dict, arrays: dict[str, np.ndarray], metadata: dict | None = None):
    table, offset, blobs = [], 0, []
    for name, arr in arrays.items():
        a = np.ascontiguousarray(arr, dtype="<f8")
        table.append({"name": name, "shape": list(a.shape), "offset": offset})
        blobs.append(a.tobytes())
        offset += a.nbytes
    header = json.dumps(
        {"kind": kind, "config": config, "metadata": metadata or {}, "arrays": table},
        sort_keys=True, separators=(",", ":"),
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IQ", VERSION, len(header)))
        fh.write(header)
        for b in blobs:
            fh.write(b)


def read_checkpoint(path):
    """Returns ``(kind, config, arrays, metadata)``."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    raw = path.read_bytes()
    if raw[:8] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file (bad magic)")
    version, hlen = struct.unpack_from("<IQ", raw, 8)
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    start = 8 + struct.calcsize("<IQ")
    header = json.loads(raw[start:start + hlen].decode("utf-8"))
    payload = memoryview(raw)[start + hlen:]
    arrays = {}
    for entry in header["arrays"]:
        n = int(np.prod(entry["shape"], dtype=np.int64))
        a = np.frombuffer(payload, dtype="<f8", count=n, offset=entry["offset"])
        arrays[entry["name"]] = a.reshape(entry["shape"]).astype(np.float64)
    return header["kind"], header["config"], arrays, header["metadata"]


def save_model(path, model: ForecastModel, metadata: dict | None = None, extra_arrays: dict | None = None):
    arrays = dict(model.state())
    for name, arr in (extra_arrays or {}).items():
        arrays[f"extra.{name}"] = arr
    write_checkpoint(path, "forecast_model", model.config.to_dict(), arrays, metadata)


def load_model(path):
    """Returns ``(model, metadata, extra_arrays)``."""
    kind, config, arrays, metadata = read_checkpoint(path)
    if kind != "forecast_model":
        raise CheckpointError(f"{path}: expected a forecast_model checkpoint, got {kind!r}")
    model = ForecastModel(ModelConfig.from_dict(config))
    extra = {k[len("extra."):]: v for k, v in arrays.items() if k.startswith("extra.")}
    model.load_state({k: v for k, v in arrays.items() if not k.startswith("extra.")})
    return model, metadata, extra


def save_kan(path, kan: TwoDepthKan | KanLayerParams):
    layers = {"inner": kan.inner, "outer": kan.outer} if isinstance(kan, TwoDepthKan) else {"layer": kan}
    config = {name: layer.grid.to_dict() for name, layer in layers.items()}
    arrays = {f"{name}.{p}": v for name, layer in layers.items() for p, v in layer.parameters().items()}
    write_checkpoint(path, "two_depth_kan" if isinstance(kan, TwoDepthKan) else "kan_layer", config, arrays)


def load_kan(path):
    kind, config, arrays, _ = read_checkpoint(path)
    if kind not in ("two_depth_kan", "kan_layer"):
        raise CheckpointError(f"{path}: expected a KAN checkpoint, got {kind!r}")

    def layer(name):
        return KanLayerParams(
            grid=KnotGrid(**config[name]),
            coeffs=arrays[f"{name}.coeffs"],
            base_weight=arrays[f"{name}.base_weight"],
            spline_weight=arrays[f"{name}.spline_weight"],
        )

    if kind == "kan_layer":
        return layer("layer")
    return TwoDepthKan(layer("inner"), layer("outer"))
