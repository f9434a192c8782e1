"""JSON and CSV serialization of plans, runs and experiment reports."""

from __future__ import annotations

import csv
import io
import json
import math
from fractions import Fraction

import numpy as np

CSV_COLUMNS = ("lane", "estimate", "error", "n1", "m_prime", "n2", "total_cost")


def jsonable(obj):
    """Recursively convert to JSON-safe values; infinities become ``"inf"``."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return x
    return obj


def dumps(obj) -> str:
    """Canonical JSON: sorted keys, shortest round-trip float repr."""
    return json.dumps(jsonable(obj), sort_keys=True, indent=2, allow_nan=False)


def runs_csv(runs, truth: float) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in runs:
        w.writerow([r.lane_index, repr(r.estimate), repr(abs(r.estimate - truth)),
                    r.n1, r.m_prime, r.n2, r.total_cost])
    return buf.getvalue()
