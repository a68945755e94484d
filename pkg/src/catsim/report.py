"""Experiment reports and their CSV / JSON serialization."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

from . import __version__

FLOAT_DIGITS = 12


@dataclass
class ExperimentReport:
    scenario: str
    params: dict
    columns: list
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def add(self, **row):
        unknown = set(row) - set(self.columns)
        if unknown:
            raise KeyError(f"columns {sorted(unknown)} not declared for {self.scenario}")
        self.rows.append({c: _plain(row.get(c)) for c in self.columns})

    @property
    def has_closed_form(self) -> bool:
        return "abs_error" in self.columns

    def max_abs_error(self) -> float | None:
        errs = [r["abs_error"] for r in self.rows if r.get("abs_error") is not None]
        errs = [e for e in errs if not (isinstance(e, float) and math.isnan(e))]
        return max(errs) if errs else None


def _plain(v):
    """numpy scalars to Python scalars."""
    return v.item() if hasattr(v, "item") and not isinstance(v, (str, bytes)) else v


def fmt_value(v):
    """Cell value with floats rounded to 12 significant digits."""
    if isinstance(v, bool) or v is None or isinstance(v, (int, str)):
        return v
    if isinstance(v, complex):
        return f"{fmt_float(v.real)}{'+' if v.imag >= 0 else '-'}{fmt_float(abs(v.imag))}j"
    try:
        f = float(v)
    except (TypeError, ValueError):
        return str(v)
    if float(f).is_integer() and not isinstance(v, float) and abs(f) < 2**53:
        return int(f)
    return float(fmt_float(f))


def fmt_float(f: float) -> str:
    if math.isnan(f):
        return "nan"
    if math.isinf(f):
        return "inf" if f > 0 else "-inf"
    return f"{f:.{FLOAT_DIGITS}g}"


def _csv_cell(v) -> str:
    v = fmt_value(v)
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return fmt_float(v)
    return str(v)


def emit_report(report: ExperimentReport, fmt: str = "csv") -> bytes:
    """Serialize the rows; identical reports give identical bytes."""
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(report.columns)
        for row in report.rows:
            w.writerow([_csv_cell(row[c]) for c in report.columns])
        return buf.getvalue().encode("utf-8")
    if fmt == "json":
        rows = [{c: _json_value(row[c]) for c in report.columns} for row in report.rows]
        return (json.dumps(rows, indent=1, allow_nan=True) + "\n").encode("utf-8")
    raise ValueError(f"unknown format {fmt!r}; use csv or json")


def _json_value(v):
    v = fmt_value(v)
    if isinstance(v, float) and (math.isnan(v) or math.isinf(v)):
        return None
    return v


def summary_line(report: ExperimentReport) -> str:
    parts = [f"scenario={report.scenario}", f"rows={len(report.rows)}", f"version={__version__}"]
    if "seed" in report.metadata:
        parts.append(f"seed={report.metadata['seed']}")
    err = report.max_abs_error()
    if err is not None:
        parts.append(f"max_abs_error={fmt_float(err)}")
    return " ".join(parts)
