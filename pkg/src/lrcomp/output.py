"""CSV rows per run and JSON reports."""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .experiments import ScenarioReport
from .gillespie import RunResult
from .seeding import PRNG_FAMILY

CSV_COLUMNS = ("run_index", "m", "n", "z", "c_n", "n_minus", "n_plus", "m_n", "t_cov",
               "proposals", "rejections", "defect_minus_at_tn", "defect_plus_at_tn", "seed")
FORMAT_VERSION = 1


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def csv_text(results) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in results:
        if r.n and r.n_minus + r.n_plus != r.n:
            raise ValueError(f"run {r.run_index}: n_minus + n_plus != n")
        w.writerow([_cell(getattr(r, c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    return obj


def report_dict(report: ScenarioReport, include_runtimes: bool = True) -> dict:
    out = {"header": header(), "spec": report.spec, "per_n": report.per_n,
           "statistics": report.statistics, "passed": report.passed}
    if include_runtimes:
        out["runtimes_s"] = report.runtimes
    return _jsonable(out)


def header() -> dict:
    return {"prng": PRNG_FAMILY, "format_version": FORMAT_VERSION}


def run_dict(r: RunResult) -> dict:
    return _jsonable({c: getattr(r, c) for c in CSV_COLUMNS} |
                     {"exact_steps": r.exact_steps, "engine": r.engine,
                      "checkpoints": [list(c) for c in r.checkpoints], "params": r.params})


def write_results(obj, path, fmt: str = "csv") -> None:
    """Write a run list or a ScenarioReport.

    csv: one row per run (a report contributes its runs).
    json: a report with header and spec echo, or a header plus run list.
    """
    path = Path(path)
    if fmt == "csv":
        results = obj.results if isinstance(obj, ScenarioReport) else list(obj)
        text = csv_text(results)
    elif fmt == "json":
        if isinstance(obj, ScenarioReport):
            data = report_dict(obj)
        else:
            data = {"header": header(), "runs": [run_dict(r) for r in obj]}
        text = json.dumps(data, indent=2, allow_nan=False) + "\n"
    else:
        raise ValueError(f"format must be csv or json, got {fmt!r}")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def read_report(path) -> dict:
    return json.loads(Path(path).read_text())
