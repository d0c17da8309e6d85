"""CSV formats for race tables, RMSE reports and prediction curves.

All files are UTF-8 with LF line endings and a mandatory header row. Times
are written with 9 significant digits. Changeover times are never stored:
readers rebuild them from the leg columns.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ParseError, ValidationError
from .evaluation import CurveRow, RmseEntry, RmseReport
from .simulator import RaceTable

__all__ = [
    "format_time",
    "read_race_csv",
    "write_race_csv",
    "read_rmse_csv",
    "write_rmse_csv",
    "read_curves_csv",
    "write_curves_csv",
]

RMSE_HEADER = ("model_name", "leg_index", "train_fraction", "rmse")


def format_time(v: float) -> str:
    return format(float(v), ".9g")


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def write_race_csv(table: RaceTable, path) -> None:
    if table is None or table.n == 0:
        raise ValidationError("refusing to write an empty race table")
    header = ["team_id", *(f"leg_{i}" for i in range(1, table.m + 1)), "place"]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(header)
        for tid, legs, place in zip(table.team_ids, table.leg_times, table.places):
            w.writerow([int(tid), *map(format_time, legs), int(place)])


def _parse_int(text: str, line: int, what: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ParseError(f"{what} is not an integer: {text!r}", line) from None


def _parse_float(text: str, line: int, what: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"{what} is not a number: {text!r}", line) from None
    if not math.isfinite(v):
        raise ParseError(f"{what} is not finite: {text!r}", line)
    return v


def read_race_csv(path) -> RaceTable:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError("file is empty", 1)
    header = [h.strip() for h in rows[0]]
    m = len(header) - 2
    expected = ["team_id", *(f"leg_{i}" for i in range(1, m + 1)), "place"]
    if m < 1 or header != expected:
        raise ParseError(f"bad header {header!r}; expected team_id,leg_1..leg_m,place", 1)

    ids, legs, places = [], [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != m + 2:
            raise ParseError(f"expected {m + 2} columns, got {len(row)}", lineno)
        ids.append(_parse_int(row[0], lineno, "team_id"))
        leg = [_parse_float(v, lineno, f"leg_{i}") for i, v in enumerate(row[1:-1], start=1)]
        bad = [i for i, v in enumerate(leg, start=1) if v <= 0]
        if bad:
            raise ValidationError(f"line {lineno}: leg_{bad[0]} time must be > 0")
        legs.append(leg)
        places.append(_parse_int(row[-1], lineno, "place"))

    if not legs:
        raise ValidationError("race file has no team rows")
    seen: dict[int, int] = {}
    for lineno, p in enumerate(places, start=2):
        if p in seen:
            raise ValidationError(f"line {lineno}: duplicate place {p} (first on line {seen[p]})")
        seen[p] = lineno
    return RaceTable(np.array(legs), np.array(places), np.array(ids))


def write_rmse_csv(report: RmseReport, path) -> None:
    """One row per grid cell; failed cells carry ``nan`` in the rmse column."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(RMSE_HEADER)
        for e in report.entries:
            w.writerow([e.model, e.leg, repr(float(e.train_fraction)), format(e.rmse, ".17g")])


def read_rmse_csv(path) -> RmseReport:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != RMSE_HEADER:
        raise ParseError(f"bad header; expected {','.join(RMSE_HEADER)}", 1)
    entries = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 4:
            raise ParseError(f"expected 4 columns, got {len(row)}", lineno)
        try:
            rmse = float(row[3])
        except ValueError:
            raise ParseError(f"rmse is not a number: {row[3]!r}", lineno) from None
        entries.append(
            RmseEntry(
                model=row[0],
                leg=_parse_int(row[1], lineno, "leg_index"),
                train_fraction=_parse_float(row[2], lineno, "train_fraction"),
                rmse=rmse,
                error=None if math.isfinite(rmse) else "failed",
            )
        )
    return RmseReport(entries)


def write_curves_csv(leg_index: int, rows: Sequence[CurveRow], path, models: Iterable[str] | None = None) -> None:
    """Write one row per test team: time, true place and each model's prediction.

    ``rows`` must already be sorted by time. A model missing from a row (its
    fit failed) leaves an empty cell.
    """
    times = [r.time for r in rows]
    if any(b < a for a, b in zip(times, times[1:])):
        raise ValidationError("curve rows must be sorted ascending by time")
    if models is None:
        models = list(rows[0].predictions) if rows else []
    models = list(models)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(["leg_index", "time", "true_place", *models])
        for r in rows:
            preds = [r.predictions.get(name, "") for name in models]
            w.writerow([leg_index, format_time(r.time), r.true_place, *preds])


def read_curves_csv(path) -> tuple[int | None, list[CurveRow]]:
    """Inverse of :func:`write_curves_csv`; returns ``(leg_index, rows)``."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:3] != ["leg_index", "time", "true_place"]:
        raise ParseError("bad curve header", 1)
    models = rows[0][3:]
    leg = None
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 3 + len(models):
            raise ParseError(f"expected {3 + len(models)} columns, got {len(row)}", lineno)
        leg = _parse_int(row[0], lineno, "leg_index")
        preds = {name: _parse_int(v, lineno, name) for name, v in zip(models, row[3:]) if v != ""}
        out.append(CurveRow(_parse_float(row[1], lineno, "time"), _parse_int(row[2], lineno, "true_place"), preds))
    return leg, out
