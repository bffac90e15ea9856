import logging

import numpy as np
import pytest

from config import dataset_path, get_log_level, get_quad_tol, log_settings
from utils.data_loader import (
    Dataset,
    ingest_dataset,
    load_available_datasets,
    load_reference_table,
    summary_stats,
)
from utils.errors import ConfigError, DataError


# ============================================
# Bundled data
# ============================================

def test_bundled_cancer_data(cancer):
    assert cancer.n == 128
    assert cancer.label == "bladder_cancer"
    assert cancer.values.sum() == pytest.approx(1198.8, abs=1e-9)
    assert cancer.values.min() == pytest.approx(0.08)


def test_bundled_glass_data(glass):
    assert glass.n == 62
    assert glass.values.sum() == pytest.approx(92.69, abs=1e-9)


def test_available_datasets():
    assert load_available_datasets() == ["bladder_cancer", "glass_fiber"]


def test_dataset_names_resolve_to_raw_directory():
    assert dataset_path("glass-fiber").name == "glass_fiber.txt"
    assert dataset_path("elsewhere/mine.csv").name == "mine.csv"


def test_summary_stats(cancer):
    stats = summary_stats(cancer)
    assert stats["n"] == 128
    assert stats["mean"] == pytest.approx(9.365625, rel=1e-9)
    assert stats["min"] <= stats["median"] <= stats["max"]


# ============================================
# Parsing user files
# ============================================

def test_mixed_separators_and_comments(tmp_path):
    path = tmp_path / "times.csv"
    path.write_text("# failure times\n1.5, 2.5;3\n\n  4 5\t6.25\n")
    data = ingest_dataset(path)
    np.testing.assert_array_equal(data.values, [1.5, 2.5, 3.0, 4.0, 5.0, 6.25])
    assert data.label == "times"


def test_label_override(tmp_path):
    path = tmp_path / "x.txt"
    path.write_text("1 2 3\n")
    assert ingest_dataset(path, label="units").label == "units"


def test_non_numeric_token_names_line(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("1.0 2.0\n# note\n3.0 abc\n")
    with pytest.raises(DataError) as excinfo:
        ingest_dataset(path)
    assert excinfo.value.line == 3
    assert "line 3" in str(excinfo.value)


@pytest.mark.parametrize("token", ["0", "-1.5", "inf"])
def test_non_positive_value_names_line(tmp_path, token):
    path = tmp_path / "bad.txt"
    path.write_text(f"1.0\n2.0 {token}\n")
    with pytest.raises(DataError) as excinfo:
        ingest_dataset(path)
    assert excinfo.value.line == 2


def test_empty_and_missing_files(tmp_path):
    empty = tmp_path / "empty.txt"
    empty.write_text("# nothing here\n\n")
    with pytest.raises(DataError):
        ingest_dataset(empty)
    with pytest.raises(DataError, match="bladder_cancer, glass_fiber"):
        ingest_dataset(tmp_path / "absent.txt")


def test_typeset_minus_is_a_negative_value(tmp_path):
    path = tmp_path / "table.txt"
    path.write_text("1.0\n\u22121.0\n", encoding="utf-8")
    with pytest.raises(DataError, match="must be positive") as excinfo:
        ingest_dataset(path)
    assert excinfo.value.line == 2


def test_unreadable_files_are_data_errors(tmp_path):
    latin = tmp_path / "latin1.txt"
    latin.write_bytes(b"1.0 2.0\n\xff\xfe 3.0\n")
    with pytest.raises(DataError, match="cannot read"):
        ingest_dataset(latin)
    with pytest.raises(DataError, match="cannot read"):
        ingest_dataset(tmp_path)


def test_dataset_validation():
    with pytest.raises(DataError):
        Dataset(np.array([1.0]))
    with pytest.raises(DataError):
        Dataset(np.array([1.0, np.nan]))
    data = Dataset([2.0, 1.0])
    np.testing.assert_array_equal(data.sorted, [1.0, 2.0])
    with pytest.raises(ValueError):
        data.values[0] = 5.0


# ============================================
# Reference table and settings
# ============================================

def test_reference_table_columns():
    table = load_reference_table()
    assert list(table.columns) == ["model", "dataset", "loglik", "k", "aic"]
    assert set(table["dataset"]) == {"bladder_cancer", "glass_fiber"}


def test_reference_table_missing_column(tmp_path):
    path = tmp_path / "ref.csv"
    path.write_text("model,dataset,loglik\nM,d,-1.0\n")
    with pytest.raises(DataError):
        load_reference_table(path)


def test_quadrature_tolerance_setting(monkeypatch):
    assert get_quad_tol() == 1e-10
    monkeypatch.setenv("GEMO_QUAD_TOL", "1e-8")
    assert get_quad_tol() == 1e-8
    monkeypatch.setenv("GEMO_QUAD_TOL", "tight")
    with pytest.raises(ConfigError):
        get_quad_tol()


def test_log_level_setting(monkeypatch):
    monkeypatch.setenv("GEMO_LOG_LEVEL", "info")
    assert get_log_level() == 20
    monkeypatch.setenv("GEMO_DEBUG", "1")
    assert get_log_level() == 10
    monkeypatch.delenv("GEMO_DEBUG")
    monkeypatch.setenv("GEMO_LOG_LEVEL", "chatty")
    with pytest.raises(ConfigError):
        get_log_level()


def test_data_path_is_read_at_call_time(monkeypatch, tmp_path, caplog):
    (tmp_path / "raw").mkdir()
    (tmp_path / "raw" / "glass_fiber.txt").write_text("1.5 2.5\n")
    monkeypatch.setenv("GEMO_DATA_PATH", str(tmp_path))
    assert dataset_path("glass_fiber") == tmp_path / "raw" / "glass_fiber.txt"
    assert load_available_datasets() == ["glass_fiber"]
    assert ingest_dataset("glass_fiber").n == 2

    monkeypatch.setenv("GEMO_DEBUG", "1")
    with caplog.at_level(logging.DEBUG, logger="config"):
        log_settings()
    assert f"DATA_PATH: {tmp_path}" in caplog.text
