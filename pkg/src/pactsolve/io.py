"""JSON and CSV readers/writers shared by the CLI.

Floats go to CSV with 17 significant digits so every value round-trips
exactly; JSON relies on ``repr`` which does the same.  Non-finite floats
are written as ``null`` to keep the JSON standard.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .exceptions import ProblemValidationError
from .model import ProblemSpec


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        obj = float(obj)
        return obj if math.isfinite(obj) else None
    return obj


def dumps(obj):
    return json.dumps(_plain(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path, obj):
    Path(path).write_text(dumps(obj), encoding="utf-8")


def read_json(path):
    """Parse a JSON file; syntax errors become validation errors with a location."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemValidationError(
            f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}", field=None
        ) from None


def load_problem(path):
    data = read_json(path)
    if isinstance(data, dict) and "problem" in data:
        data = data["problem"]
    return ProblemSpec.from_dict(data)


def fmt(value):
    """17 significant digits, '.' decimal, no locale."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if value is None:
        return ""
    return str(value)


def write_csv(path, header, rows):
    lines = [",".join(header)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_csv(path):
    """Header and rows of float-or-string cells (for tests and tooling)."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    header = lines[0].split(",")
    rows = []
    for line in lines[1:]:
        row = []
        for cell in line.split(","):
            try:
                row.append(float(cell))
            except ValueError:
                row.append(cell)
        rows.append(row)
    return header, rows
