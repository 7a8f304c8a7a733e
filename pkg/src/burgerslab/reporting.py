"""Byte-stable JSON and CSV output.

Floats are written with 12 significant digits everywhere and JSON keys are
sorted, so identical inputs give identical files.
"""

import csv
import json
import math
import os
from pathlib import Path

import numpy as np

SIG_DIGITS = 12


def fmt(value):
    """Fixed 12-significant-digit text form of a number."""
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    text = f"{value:.{SIG_DIGITS}g}"
    return "0" if text == "-0" else text


def _round(value):
    value = float(value)
    if not math.isfinite(value):
        return None
    return float(fmt(value)) + 0.0


def normalize(obj):
    """Plain-JSON copy of ``obj`` with floats rounded to 12 significant digits."""
    if isinstance(obj, dict):
        return {str(k): normalize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [normalize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [normalize(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _round(obj)
    if obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, os.PathLike):
        return os.fspath(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj):
    return json.dumps(normalize(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def dump_json(obj, path):
    Path(path).write_text(dumps(obj))


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


def tool_version():
    from . import __version__

    return __version__


def result(name, passed, data=None, table=None):
    """One report entry. ``table`` is an optional ``(header, rows)`` pair written as CSV."""
    entry = {"name": name, "pass": bool(passed), "data": data or {}}
    if table is not None:
        entry["table"] = table
    return entry


def emit_report(results, path, config_echo=None):
    """Write ``{tool_version, config_echo, results, pass}`` plus one CSV per tabled result.

    Results are ordered by name so the merge does not depend on the order in
    which the checks finished. Returns the top-level pass flag.
    """
    if not results:
        raise ValueError("emit_report needs at least one result")
    path = Path(path)
    ordered = sorted(results, key=lambda r: r["name"])
    doc_results = []
    for entry in ordered:
        table = entry.get("table")
        item = {k: v for k, v in entry.items() if k != "table"}
        if table is not None:
            header, rows = table
            csv_path = path.with_name(f"{path.stem}_{entry['name']}.csv")
            write_csv(csv_path, header, rows)
            item["csv"] = csv_path.name
        doc_results.append(item)
    passed = all(r["pass"] for r in ordered)
    doc = {
        "tool_version": tool_version(),
        "config_echo": config_echo or {},
        "results": doc_results,
        "pass": passed,
    }
    dump_json(doc, path)
    return passed
