"""Report serialization: report.json plus curve.csv or trace.csv."""

import csv
import json
import math
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

import numpy as np

from .exceptions import ReportError
from .fourier import ResidualCurve
from .recovery import RecoveryResult
from .symmetry import TheoremReport

REPORT_FILENAME = "report.json"
CURVE_FILENAME = "curve.csv"
TRACE_FILENAME = "trace.csv"

CURVE_HEADER = ("k", "residual_max", "residual_l2")
TRACE_HEADER = ("iter", "objective")


def to_jsonable(value: Any) -> Any:
    """Plain JSON types: complex -> {re, im}, numpy -> Python, non-finite floats -> None."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": to_jsonable(value.real), "im": to_jsonable(value.imag)}
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, Path):
        return str(value)
    return value


def format_number(value: Any) -> str:
    """CSV cell: integers as-is, floats with 17 significant digits."""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return format(float(value), ".17g")


def write_json(data: dict, path: Path) -> Path:
    text = json.dumps(to_jsonable(data), indent=2, sort_keys=True, allow_nan=False) + "\n"
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as e:
        raise ReportError(f"Cannot write {path}: {e}")
    return path


def write_csv(header: Sequence[str], rows: Iterable[Sequence[Any]], path: Path) -> Path:
    try:
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([format_number(v) for v in row])
    except OSError as e:
        raise ReportError(f"Cannot write {path}: {e}")
    return path


def _tables(report: Any) -> dict[str, tuple[Sequence[str], list]]:
    if isinstance(report, ResidualCurve):
        return {CURVE_FILENAME: (CURVE_HEADER, report.csv_rows())}
    if isinstance(report, TheoremReport) and report.curve is not None:
        return {CURVE_FILENAME: (CURVE_HEADER, report.curve.csv_rows())}
    if isinstance(report, RecoveryResult):
        return {TRACE_FILENAME: (TRACE_HEADER, report.trace_rows())}
    return {}


def emit_report(report: Any, formats: Sequence[str], directory: Path, extra: Optional[dict] = None) -> list[Path]:
    """Write a report object to directory.

    Args:
        report: Anything with to_dict() (TheoremReport, RecoveryResult,
            ResidualCurve, JumpReport, FarFieldReport)
        formats: Subset of {"json", "csv"}; report.json is always written
        directory: Output directory, created if missing
        extra: Additional top-level JSON keys (e.g. verdict, job echo)

    Returns:
        Paths written, in a fixed order

    Raises:
        ReportError: If the directory or a file cannot be written
    """
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ReportError(f"Cannot create output directory {directory}: {e}")

    data = report.to_dict()
    if extra:
        data.update(extra)
    written = [write_json(data, directory / REPORT_FILENAME)]
    if "csv" in formats:
        for name, (header, rows) in _tables(report).items():
            written.append(write_csv(header, rows, directory / name))
    return written
