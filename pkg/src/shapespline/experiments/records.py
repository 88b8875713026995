"""Result records, CSV output and JSON summaries."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass

SLACK = 1e-9

CSV_COLUMNS = ("experiment", "statement", "instance", "measured", "bound", "margin", "passed", "note")


@dataclass(frozen=True)
class ResultRecord:
    """One checked quantity.  ``margin = bound - measured``; pass means ``margin >= -1e-9``.

    For two-sided checks ``measured`` is the deviation and ``bound`` the tolerance.
    """

    experiment: str
    statement: str
    instance: str
    measured: float
    bound: float
    margin: float
    passed: bool
    note: str = ""


def check(experiment: str, statement: str, instance: str, measured: float, bound: float, note: str = "") -> ResultRecord:
    measured = float(measured)
    bound = float(bound)
    margin = bound - measured
    passed = math.isfinite(measured) and math.isfinite(margin) and margin >= -SLACK
    return ResultRecord(experiment, statement, instance, measured, bound, margin, passed, note)


def failure(experiment: str, statement: str, instance: str, exc: BaseException) -> ResultRecord:
    """Record a sub-operation that raised instead of aborting the suite."""
    msg = f"{type(exc).__name__}: {exc}".replace("\n", " ")
    return ResultRecord(experiment, statement, instance, math.nan, math.nan, math.nan, False, msg)


def info(experiment: str, statement: str, instance: str, measured: float, note: str = "") -> ResultRecord:
    """A measured value with no bound attached; always passes."""
    return ResultRecord(experiment, statement, instance, float(measured), math.nan, math.nan, True, note)


def fmt(value: float) -> str:
    return format(value, ".17g")


def records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow(
            (r.experiment, r.statement, r.instance, fmt(r.measured), fmt(r.bound), fmt(r.margin), int(r.passed), r.note)
        )
    return buf.getvalue()


def read_records_csv(text: str) -> list[ResultRecord]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_COLUMNS:
        raise ValueError("line 1: not a result-record CSV header")
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(CSV_COLUMNS):
            raise ValueError(f"line {lineno}: expected {len(CSV_COLUMNS)} fields, got {len(row)}")
        try:
            out.append(
                ResultRecord(row[0], row[1], row[2], float(row[3]), float(row[4]), float(row[5]), row[6] == "1", row[7])
            )
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    return out


def summarize(experiment: str, records, config: dict | None = None, extra: dict | None = None) -> dict:
    """Pass counts and worst margin per statement."""
    per: dict[str, dict] = {}
    for r in records:
        s = per.setdefault(r.statement, {"checks": 0, "passed": 0, "worst_margin": None})
        s["checks"] += 1
        s["passed"] += int(r.passed)
        if math.isfinite(r.margin) and (s["worst_margin"] is None or r.margin < s["worst_margin"]):
            s["worst_margin"] = r.margin
    total = len(records)
    passed = sum(int(r.passed) for r in records)
    out = {
        "experiment": experiment,
        "config": config or {},
        "checks": total,
        "passed": passed,
        "failed": total - passed,
        "statements": per,
    }
    if extra:
        out.update(extra)
    return out


def summary_json(summary: dict) -> str:
    return json.dumps(summary, indent=2, sort_keys=True, default=_jsonable)


def _jsonable(obj):
    if hasattr(obj, "__dataclass_fields__"):
        return asdict(obj)
    if isinstance(obj, (set, tuple)):
        return list(obj)
    try:
        return float(obj)
    except (TypeError, ValueError):
        return str(obj)


def all_passed(records) -> bool:
    return all(r.passed for r in records)
