"""Tests for src/logger.py -- CSV result files and the runs.jsonl record."""

import csv
import json

import numpy as np
import pytest

from src.harness import ComparisonRow, EstimatedCurve
from src.logger import (
    CURVE_COLUMNS,
    CURVE_FILE,
    CURVE_FULL_FILE,
    RUNS_FILE,
    TABLE_COLUMNS,
    TRACE_COLUMNS,
    _append_record,
    log_run,
    read_curve_csv,
    write_curves,
    write_table,
    write_trace,
)


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def _make_curve(mode="rp", values=(1.0, 0.5, 0.25, 0.25)) -> EstimatedCurve:
    values = np.array(values)
    return EstimatedCurve("inst", mode, values, values * 0.5, np.minimum(values * 1.5, 1.0), m=8)


def _read_rows(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def _header(path):
    with open(path, newline="") as f:
        return next(csv.reader(f))


# ---------------------------------------------------------------------------
# write_curves / write_table / write_trace
# ---------------------------------------------------------------------------


class TestWriteCurves:
    def test_headers(self, tmp_output_dir):
        sampled, full = write_curves([_make_curve()], tmp_output_dir, points=[1, 4])
        assert sampled.name == CURVE_FILE
        assert full.name == CURVE_FULL_FILE
        assert _header(sampled) == CURVE_COLUMNS
        assert _header(full) == CURVE_COLUMNS

    def test_sampled_points_only(self, tmp_output_dir):
        sampled, full = write_curves([_make_curve()], tmp_output_dir, points=[1, 4, 100])
        assert [row["t"] for row in _read_rows(sampled)] == ["1", "4"]
        assert len(_read_rows(full)) == 4

    def test_one_block_per_mode(self, tmp_output_dir):
        curves = [_make_curve("plain"), _make_curve("rp")]
        _, full = write_curves(curves, tmp_output_dir, points=[1])
        modes = [row["mode"] for row in _read_rows(full)]
        assert modes == ["plain"] * 4 + ["rp"] * 4

    def test_creates_directory(self, tmp_path):
        target = tmp_path / "nested" / "out"
        write_curves([_make_curve()], target, points=[1])
        assert (target / CURVE_FILE).exists()


class TestWriteTable:
    def test_columns_and_values(self, tmp_output_dir):
        row = ComparisonRow("inst", "rp", 4, 0.25, 0.1, 0.4, 8)
        path = write_table([row], tmp_output_dir)
        assert _header(path) == TABLE_COLUMNS
        assert _read_rows(path) == [
            {"instance": "inst", "mode": "rp", "T_c": "4", "fp": "0.25",
             "ciLow": "0.1", "ciHigh": "0.4", "m": "8"}
        ]


class TestWriteTrace:
    def test_runs_numbered_from_one(self, tmp_output_dir):
        row = {"k": 0, "r": 20, "T": 100, "yTilde": 1.0, "sigmaHat": 40, "pseudoTime": 2000}
        path = write_trace([[row], [row, {**row, "k": 1}]], tmp_output_dir)
        rows = _read_rows(path)
        assert [r["run"] for r in rows] == ["1", "2", "2"]
        assert [r["k"] for r in rows] == ["0", "0", "1"]

    def test_empty_gives_header_only(self, tmp_output_dir):
        path = write_trace([], tmp_output_dir)
        assert _header(path) == TRACE_COLUMNS
        assert _read_rows(path) == []


# ---------------------------------------------------------------------------
# read_curve_csv
# ---------------------------------------------------------------------------


class TestReadCurveCsv:
    def test_two_column_file(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("t,p\n1,0.9\n2,0.5\n3,0.4\n")
        assert read_curve_csv(path).tolist() == [0.9, 0.5, 0.4]

    def test_curve_full_single_mode(self, tmp_output_dir):
        _, full = write_curves([_make_curve()], tmp_output_dir, points=[1])
        assert read_curve_csv(full).tolist() == [1.0, 0.5, 0.25, 0.25]

    def test_curve_full_needs_mode_when_ambiguous(self, tmp_output_dir):
        curves = [_make_curve("plain", (1.0, 0.9)), _make_curve("rp")]
        _, full = write_curves(curves, tmp_output_dir, points=[1])
        with pytest.raises(ValueError, match="--mode"):
            read_curve_csv(full)
        assert read_curve_csv(full, mode="plain").tolist() == [1.0, 0.9]

    def test_gap_in_t(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("t,p\n1,0.9\n3,0.4\n")
        with pytest.raises(ValueError, match="without gaps"):
            read_curve_csv(path)

    def test_unknown_columns(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("time,prob\n1,0.9\n")
        with pytest.raises(ValueError):
            read_curve_csv(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            read_curve_csv(tmp_path / "absent.csv")


# ---------------------------------------------------------------------------
# Run records
# ---------------------------------------------------------------------------


class TestRunRecords:
    def _records(self, output_dir):
        with open(f"{output_dir}/{RUNS_FILE}") as f:
            return [json.loads(line) for line in f]

    def test_log_run_appends(self, tmp_output_dir):
        log_run(tmp_output_dir, "solve", {"problem": "boolean20"}, {"best": -10.5})
        log_run(tmp_output_dir, "experiment", {"problem": "grid50"}, {"rows": 2})
        records = self._records(tmp_output_dir)
        assert [r["command"] for r in records] == ["solve", "experiment"]
        assert records[0]["config"] == {"problem": "boolean20"}
        assert records[0]["outcome"] == {"best": -10.5}
        assert "timestamp" in records[0]

    def test_creates_output_dir(self, tmp_path):
        output_dir = tmp_path / "nested" / "results"
        log_run(output_dir, "check", {}, {})
        assert (output_dir / RUNS_FILE).exists()

    def test_non_json_values_stringified(self, tmp_output_dir):
        log_run(tmp_output_dir, "solve", {"path": tmp_output_dir}, {"value": np.int64(3)})
        record = self._records(tmp_output_dir)[0]
        assert record["config"]["path"] == tmp_output_dir
        assert record["outcome"]["value"] == "3"

    def test_append_record_one_line_each(self, tmp_path):
        filepath = tmp_path / RUNS_FILE
        _append_record(filepath, {"key": "value"})
        _append_record(filepath, {"key": "other"})
        lines = filepath.read_text().splitlines()
        assert [json.loads(line)["key"] for line in lines] == ["value", "other"]
