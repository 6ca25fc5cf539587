"""Result files for restart-aco experiments.

CSV outputs (columns documented in README.md):
  curve.csv       log-spaced failure-curve points per mode
  curve_full.csv  the same curves at every t
  table.csv       failure probability at T_c per (instance, mode)
  trace.csv       one row per RP iteration of every outer run

Every CLI run also appends one record to runs.jsonl (append-only JSONL).
"""

import csv
import json
import logging
from datetime import datetime
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from src.harness import ComparisonRow, EstimatedCurve

logger = logging.getLogger(__name__)

CURVE_FILE = "curve.csv"
CURVE_FULL_FILE = "curve_full.csv"
TABLE_FILE = "table.csv"
TRACE_FILE = "trace.csv"
RUNS_FILE = "runs.jsonl"

CURVE_COLUMNS = ["mode", "t", "pHat", "ciLow", "ciHigh"]
TABLE_COLUMNS = ["instance", "mode", "T_c", "fp", "ciLow", "ciHigh", "m"]
TRACE_COLUMNS = ["run", "k", "r", "T", "yTilde", "sigmaHat", "pseudoTime"]


def _output_dir(output_dir: str | Path) -> Path:
    path = Path(output_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_csv(filepath: Path, columns: Sequence[str], rows: Iterable[dict[str, Any]]) -> Path:
    with open(filepath, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(columns), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    logger.info("Wrote %s", filepath)
    return filepath


def _append_record(filepath: Path, record: dict[str, Any]) -> None:
    # numpy scalars and paths are written with str()
    with open(filepath, "a") as f:
        f.write(json.dumps(record, default=str) + "\n")


# ---------------------------------------------------------------------------
# CSV outputs
# ---------------------------------------------------------------------------


def write_curves(
    curves: Sequence[EstimatedCurve], output_dir: str | Path, points: Sequence[int]
) -> tuple[Path, Path]:
    """Write curve.csv (at ``points``) and curve_full.csv (every t).

    Returns:
        Paths of the two files.
    """
    dirpath = _output_dir(output_dir)
    sampled = [row for curve in curves for row in curve.rows([t for t in points if t <= len(curve)])]
    full = [row for curve in curves for row in curve.rows()]
    return (
        _write_csv(dirpath / CURVE_FILE, CURVE_COLUMNS, sampled),
        _write_csv(dirpath / CURVE_FULL_FILE, CURVE_COLUMNS, full),
    )


def write_table(rows: Sequence[ComparisonRow], output_dir: str | Path) -> Path:
    """Write table.csv, one row per (instance, mode)."""
    dirpath = _output_dir(output_dir)
    return _write_csv(dirpath / TABLE_FILE, TABLE_COLUMNS, [row.as_row() for row in rows])


def write_trace(traces: Sequence[Sequence[dict[str, Any]]], output_dir: str | Path) -> Path:
    """Write trace.csv; ``traces[i]`` holds the iteration rows of outer run i + 1.

    An empty ``traces`` gives a header-only file.
    """
    dirpath = _output_dir(output_dir)
    rows = [
        {"run": run, **row}
        for run, trace in enumerate(traces, start=1)
        for row in trace
    ]
    return _write_csv(dirpath / TRACE_FILE, TRACE_COLUMNS, rows)


def read_curve_csv(path: str | Path, mode: str | None = None) -> np.ndarray:
    """Load failure-curve values p(1..T) from a CSV file.

    Accepts a two-column ``t,p`` file or a curve_full.csv; for the latter
    ``mode`` picks the curve (required when the file holds several).

    Raises:
        FileNotFoundError: If the file does not exist.
        ValueError: If the columns are unrecognised, the mode is ambiguous,
            or t does not run 1, 2, ..., T.
    """
    filepath = Path(path)
    if not filepath.exists():
        raise FileNotFoundError(f"Curve file not found: {filepath}")

    with open(filepath, "r", newline="") as f:
        reader = csv.DictReader(f)
        columns = reader.fieldnames or []
        records = list(reader)

    if "pHat" in columns:
        modes = sorted({rec["mode"] for rec in records})
        if mode is None:
            if len(modes) > 1:
                raise ValueError(f"{filepath} holds modes {', '.join(modes)}; pick one with --mode")
            mode = modes[0] if modes else None
        records = [rec for rec in records if rec["mode"] == mode]
        value_column = "pHat"
    elif columns[:2] == ["t", "p"]:
        value_column = "p"
    else:
        raise ValueError(f"{filepath}: expected columns 't,p' or '{','.join(CURVE_COLUMNS)}'")

    if not records:
        raise ValueError(f"{filepath}: no curve rows")
    t = [int(rec["t"]) for rec in records]
    if t != list(range(1, len(t) + 1)):
        raise ValueError(f"{filepath}: t must run 1, 2, ..., T without gaps")
    return np.array([float(rec[value_column]) for rec in records])


# ---------------------------------------------------------------------------
# Run records
# ---------------------------------------------------------------------------


def log_run(
    output_dir: str | Path, command: str, config: dict[str, Any], outcome: dict[str, Any]
) -> None:
    """Append one record to runs.jsonl in ``output_dir``.

    ``config`` is the resolved configuration and ``outcome`` the result
    summary the command printed.
    """
    record = {
        "timestamp": datetime.now().astimezone().isoformat(),
        "command": command,
        "config": config,
        "outcome": outcome,
    }
    _append_record(_output_dir(output_dir) / RUNS_FILE, record)
