import json
import warnings
from pathlib import Path

import numpy as np
import pytest

from tskanmixer.data_io import (
    CsvFormatError, DatasetSpec, RawSeries, SplitError, apply_split, get_spec, load_csv, load_registry,
    load_run_config, parse_run_config, write_csv,
)
from tskanmixer.mixer import ConfigError
from tskanmixer.published import TABLES, run_config_docs
from tskanmixer.training import WindowedDataset

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


# ---------------------------------------------------------------- csv

def test_load_plain_matrix(tmp_path):
    s = load_csv(write(tmp_path, "1,2\n3,4\n5,6\n"))
    assert s.values.shape == (3, 2)
    assert s.values[:, 1].tolist() == [2.0, 4.0, 6.0]
    assert s.timestamps is None and s.feature_names == ["f0", "f1"]


def test_load_header_and_timestamp(tmp_path):
    s = load_csv(write(tmp_path, "date,a,b\n2020-01-01,1,2\n2020-01-02,3,4\n"))
    assert s.feature_names == ["a", "b"]
    assert s.timestamps == ["2020-01-01", "2020-01-02"]
    assert s.values.tolist() == [[1, 2], [3, 4]]


def test_numeric_timestamp_column_needs_spec(tmp_path):
    spec = DatasetSpec("toy", features=2, split_unit="row", train=1, valid=1, test=1)
    s = load_csv(write(tmp_path, "0,1,2\n1,3,4\n2,5,6\n"), spec)
    assert s.values.tolist() == [[1, 2], [3, 4], [5, 6]]
    assert s.timestamps == ["0", "1", "2"]


def test_empty_cell_names_row_and_line(tmp_path):
    with pytest.raises(CsvFormatError, match=r"data row 1 \(line 3\), column 1"):
        load_csv(write(tmp_path, "a,b\n1,2\n3,\n5,6\n"))


def test_nan_cell_rejected(tmp_path):
    with pytest.raises(CsvFormatError, match="missing value"):
        load_csv(write(tmp_path, "1,2\nnan,4\n"))


def test_ragged_row(tmp_path):
    with pytest.raises(CsvFormatError, match="line 2 has 3 fields"):
        load_csv(write(tmp_path, "1,2\n3,4,5\n"))


def test_unparseable_cell(tmp_path):
    with pytest.raises(CsvFormatError, match="cannot parse"):
        load_csv(write(tmp_path, "1,2\n3,x4\n"))


def test_empty_and_header_only(tmp_path):
    with pytest.raises(CsvFormatError):
        load_csv(write(tmp_path, ""))
    with pytest.raises(CsvFormatError, match="header only"):
        load_csv(write(tmp_path, "a,b\n"))


def test_feature_count_mismatch(tmp_path):
    spec = DatasetSpec("toy", features=3, split_unit="row", train=1, valid=1, test=1)
    with pytest.raises(CsvFormatError, match="expected 3"):
        load_csv(write(tmp_path, "1,2\n3,4\n"), spec)


def test_time_step_mismatch_warns(tmp_path):
    spec = DatasetSpec("toy", features=2, split_unit="row", train=1, valid=1, test=1, time_steps=10)
    with pytest.warns(UserWarning, match="10 time steps"):
        load_csv(write(tmp_path, "1,2\n3,4\n"), spec)


def test_round_trip_is_exact(tmp_path):
    rng = np.random.default_rng(0)
    s = RawSeries(rng.normal(size=(20, 3)) * 1e3, ["x", "y", "z"], [f"t{i}" for i in range(20)])
    write_csv(tmp_path / "r.csv", s)
    back = load_csv(tmp_path / "r.csv")
    assert np.array_equal(back.values, s.values)
    assert back.feature_names == s.feature_names and back.timestamps == s.timestamps


# ---------------------------------------------------------------- registry and splits

def test_registry_has_all_tables():
    reg = load_registry()
    for table in TABLES.values():
        assert set(table) == set(reg)


@pytest.mark.parametrize("name,counts", [
    ("ETTh1", (8640, 2880, 2880)),
    ("ETTh2", (8640, 2880, 2880)),
    ("ETTm1", (34560, 11520, 11520)),
    ("ETTm2", (34560, 11520, 11520)),
    ("NN5_weekly", (96, 8, 8)),
    ("FRED_MD", (698, 14, 14)),
    ("Hospital", (58, 12, 12)),
])
def test_split_row_counts(name, counts):
    spec = get_spec(name)
    assert spec.row_counts() == counts
    ranges = apply_split(np.zeros((sum(counts), spec.features)), spec)
    assert ranges == {"train": (0, counts[0]), "valid": (counts[0], counts[0] + counts[1]),
                      "test": (counts[0] + counts[1], sum(counts))}


def test_split_overshoot():
    spec = get_spec("NN5_weekly")
    with pytest.raises(SplitError, match="needs 112 rows"):
        apply_split(np.zeros((100, spec.features)), spec)


def test_unknown_dataset():
    with pytest.raises(SplitError, match="unknown dataset"):
        get_spec("nope")


def test_spec_round_trip():
    for spec in load_registry().values():
        assert DatasetSpec.from_dict(spec.to_dict()) == spec


def test_windows_never_cross_split_boundaries():
    # each row holds its own index, so window contents reveal where they came from
    spec = get_spec("FRED_MD")
    T = sum(spec.row_counts())
    series = np.repeat(np.arange(T, dtype=float)[:, None], 2, axis=1)
    ranges = apply_split(series, spec)
    # strict windows need L+H rows per split; shrink L/H so valid/test fit
    ds = WindowedDataset.from_series(series, ranges, 6, 4)
    for part in ("train", "valid", "test"):
        lo, hi = ranges[part]
        X, Y = getattr(ds, part)
        assert X.min() >= lo and Y.max() <= hi - 1
        assert np.all(np.diff(X[:, :, 0], axis=1) == 1)
        assert np.all(Y[:, 0, 0] == X[:, -1, 0] + 1)


def test_lookback_mode_targets_stay_in_split():
    spec = get_spec("FRED_MD")
    T = sum(spec.row_counts())
    series = np.arange(T, dtype=float)[:, None]
    ranges = apply_split(series, spec)
    ds = WindowedDataset.from_series(series, ranges, spec.L, spec.H, lookback_from_previous=True)
    for part in ("valid", "test"):
        lo, hi = ranges[part]
        X, Y = getattr(ds, part)
        assert Y.min() >= lo and Y.max() < hi
        assert len(X) == hi - lo - spec.H + 1


# ---------------------------------------------------------------- run configs

@pytest.mark.parametrize("variant", sorted(TABLES))
def test_every_table_row_parses(variant):
    for name, doc in run_config_docs(variant).items():
        model_cfg, train_cfg, spec = parse_run_config(doc)
        assert model_cfg.C == spec.features and spec.name == name
        assert train_cfg.batch_size == doc["batch"]


def test_shipped_config_files_match_tables():
    for variant in TABLES:
        for name, doc in run_config_docs(variant).items():
            on_disk = json.loads((CONFIG_DIR / f"{name}_{variant}.json").read_text())
            assert on_disk == doc


def test_etth2_v02_config():
    m, t, spec = load_run_config(CONFIG_DIR / "ETTh2_tskanmixer_v02.json")
    assert (m.L, m.H, m.C, m.batch, m.blocks) == (512, 96, 7, 320, 2)
    assert (m.dropout, m.hidden_size, m.learning_rate) == (0.3, 64, 1e-4)
    assert (m.kan_dim, m.kan_grid, m.kan_k) == (1025, 5, 3)
    assert (t.max_epochs, t.patience) == (1000, 10)


def test_hospital_v01_config():
    m, t, spec = load_run_config(CONFIG_DIR / "Hospital_tskanmixer_v01.json")
    assert (m.L, m.H, m.C, m.batch, m.blocks, m.hidden_size) == (24, 12, 767, 8, 2, 767)
    assert (m.kan_dim, m.kan_grid, m.kan_k) == (24, 10, 2)
    assert (t.max_epochs, t.patience) == (200, 5)


def base_doc():
    return dict(run_config_docs("tskanmixer_v02")["FRED_MD"])


def test_missing_kan_key_is_named():
    doc = base_doc()
    del doc["kan_k"]
    with pytest.raises(ConfigError, match="missing required config key: kan_k"):
        parse_run_config(doc)


def test_missing_core_key_is_named():
    doc = base_doc()
    del doc["patience"]
    with pytest.raises(ConfigError, match="patience"):
        parse_run_config(doc)


def test_unknown_key_rejected():
    doc = base_doc()
    doc["momentum"] = 0.9
    with pytest.raises(ConfigError, match="momentum"):
        parse_run_config(doc)


def test_kan_keys_rejected_for_plain_mixer():
    doc = dict(run_config_docs("tsmixer")["FRED_MD"], kan_dim=4, kan_grid=3, kan_k=2)
    with pytest.raises(ConfigError):
        parse_run_config(doc)


def test_type_errors():
    doc = base_doc()
    doc["batch"] = 16.0
    with pytest.raises(ConfigError, match="batch"):
        parse_run_config(doc)
    doc = base_doc()
    doc["dropout"] = "0.5"
    with pytest.raises(ConfigError, match="dropout"):
        parse_run_config(doc)


def test_max_epochs_override():
    doc = dict(base_doc(), max_epochs=3)
    assert parse_run_config(doc)[1].max_epochs == 3


def test_invalid_json(tmp_path):
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_run_config(write(tmp_path, "{", "c.json"))
