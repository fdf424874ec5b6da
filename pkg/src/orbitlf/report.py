"""JSON and CSV emission for CLI reports.

JSON is the lossless format: it embeds the whole run configuration and
renders complex numbers as ``{"re": .., "im": ..}`` with round-trip float
precision.  Wall-clock numbers live under the top-level ``timing`` key only,
so two runs of one configuration differ nowhere else.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

SCHEMA = "orbitlf-report/1"


def to_jsonable(obj: Any) -> Any:
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, Fraction):
        return {"num": obj.numerator, "den": obj.denominator}
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def build_report(command: str, config: dict, result: Any, timing: dict) -> dict:
    return {
        "schema": SCHEMA,
        "command": command,
        "config": to_jsonable(config),
        "result": to_jsonable(result),
        "timing": to_jsonable(timing),
    }


def dumps_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=True) + "\n"


def strip_timing(report: dict) -> dict:
    return {k: v for k, v in report.items() if k != "timing"}


def dumps_csv(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_csv_cell(x) for x in row])
    return buf.getvalue()


def _csv_cell(x: Any) -> Any:
    if isinstance(x, (complex, np.complexfloating)):
        return f"{x.real!r}{x.imag:+.17g}j"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return x
