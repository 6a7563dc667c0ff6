"""ExperimentReport rows, summary statistics and CSV serialization."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

# Fixed CSV header. The leading block is the per-trial record; the remainder
# holds experiment-specific fields (empty where they do not apply).
COLUMNS = (
    "experiment", "trial", "m", "d", "k", "ensemble", "noise", "sigma", "mu",
    "eta_norm", "eta_sum", "bias_ratio", "epsilon", "dist", "ratio", "lifted_dist",
    "iterations", "stationarity", "converged", "wall_time_ms", "seed",
    "summary", "stat", "cell", "gamma", "x0_norm", "solver", "residual", "feasible",
    "support_recovery", "model_bound", "eps_ratio", "lemma_ratio", "beta0",
    "c_minus_hat", "c_plus_hat", "strong_c_minus_hat", "order_violations", "zero_feasible",
    "dist_alt", "identical_obs", "value", "error",
)
TIMING_COLUMNS = ("wall_time_ms",)

# Columns carried over verbatim from the cell into its summary rows.
CELL_COLUMNS = ("experiment", "m", "d", "k", "ensemble", "noise", "sigma", "mu", "cell",
                "gamma", "x0_norm", "solver", "beta0", "epsilon", "model_bound")
# Columns summarized by quantiles.
NUMERIC_COLUMNS = ("eta_norm", "eta_sum", "bias_ratio", "dist", "ratio", "lifted_dist",
                   "iterations", "stationarity", "wall_time_ms", "residual",
                   "support_recovery", "eps_ratio", "lemma_ratio", "c_minus_hat",
                   "c_plus_hat", "strong_c_minus_hat", "order_violations", "dist_alt")
# Boolean columns summarized as rates.
FLAG_COLUMNS = ("converged", "feasible", "zero_feasible", "identical_obs")

STATS = {"median": 50.0, "q05": 5.0, "q95": 95.0}


@dataclass
class ExperimentReport:
    experiment: str
    rows: list = field(default_factory=list)
    columns: tuple = COLUMNS

    def trial_rows(self, cell=None):
        return [r for r in self.rows if not r.get("summary")
                and (cell is None or r.get("cell") == cell)]

    def summary_rows(self, stat=None, cell=None):
        return [r for r in self.rows if r.get("summary")
                and (stat is None or r.get("stat") == stat)
                and (cell is None or r.get("cell") == cell)]

    def summary(self, stat, column, cell=None):
        """Values of ``column`` across cells for one summary statistic."""
        return [r.get(column) for r in self.summary_rows(stat, cell)
                if r.get("cell") is not None and r.get("cell") != ""]

    def column(self, name, cell=None):
        return [r.get(name) for r in self.trial_rows(cell)]

    def scalar(self, stat):
        """Experiment-wide scalar stored under ``stat`` (e.g. a fitted slope)."""
        for r in self.rows:
            if r.get("summary") and r.get("stat") == stat and r.get("cell") in (None, ""):
                return r.get("value")
        raise KeyError(stat)

    def to_csv(self, exclude=()) -> str:
        return rows_to_csv(self.rows, exclude, self.columns)


def _finite(vals):
    out = []
    for v in vals:
        if v is None or v == "":
            continue
        v = float(v)
        if math.isfinite(v):
            out.append(v)
    return out


def summarize_cell(rows: list) -> list:
    """median / q05 / q95 rows for numeric columns plus a ``mean`` row with
    flag rates and means."""
    if not rows:
        return []
    base = {c: rows[0].get(c) for c in CELL_COLUMNS}
    out = []
    for stat, q in STATS.items():
        row = dict(base, summary=True, stat=stat)
        for c in NUMERIC_COLUMNS:
            vals = _finite(r.get(c) for r in rows)
            row[c] = float(np.percentile(vals, q)) if vals else None
        out.append(row)
    row = dict(base, summary=True, stat="mean")
    for c in NUMERIC_COLUMNS:
        vals = _finite(r.get(c) for r in rows)
        row[c] = float(np.mean(vals)) if vals else None
    for c in FLAG_COLUMNS:
        vals = [bool(r[c]) for r in rows if r.get(c) is not None and r.get(c) != ""]
        row[c] = float(np.mean(vals)) if vals else None
    n_err = sum(1 for r in rows if r.get("error"))
    row["error"] = f"{n_err} failed trials" if n_err else None
    out.append(row)
    return out


def scalar_row(experiment: str, stat: str, value) -> dict:
    return {"experiment": experiment, "summary": True, "stat": stat, "value": value}


def _format(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        return repr(v)
    return str(v)


def rows_to_csv(rows, exclude=(), columns=COLUMNS) -> str:
    cols = [c for c in columns if c not in exclude]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_format(r.get(c)) for c in cols])
    return buf.getvalue()


def write_report(report: ExperimentReport, path) -> None:
    """Write the report as UTF-8 CSV with the fixed header."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(report.to_csv())


_INT_COLUMNS = {"trial", "m", "d", "k", "iterations", "seed", "cell", "order_violations"}
_BOOL_COLUMNS = {"summary"}
_TEXT_COLUMNS = {"experiment", "ensemble", "noise", "stat", "solver", "error"}


def _parse(col, s):
    if s == "":
        return None
    if col in _TEXT_COLUMNS:
        return s
    if col in _BOOL_COLUMNS:
        return s == "1"
    if col in _INT_COLUMNS:
        try:
            return int(s)
        except ValueError:
            return float(s)  # quantile of an integer column
    return float(s)


def read_report(path) -> ExperimentReport:
    """Parse a CSV written by :func:`write_report`."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != COLUMNS:
            raise ValueError("unexpected CSV header")
        rows = [{c: _parse(c, s) for c, s in zip(header, rec)} for rec in reader]
    name = rows[0]["experiment"] if rows else ""
    return ExperimentReport(name, rows)


def plot_data(report: ExperimentReport, x: str, y: str) -> str:
    """Per-cell (x, median, q05, q95) table for ``y`` as CSV text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["cell", "ensemble", "noise", x, "median", "q05", "q95"])
    med = {r["cell"]: r for r in report.summary_rows("median") if r.get("cell") is not None}
    lo = {r["cell"]: r for r in report.summary_rows("q05") if r.get("cell") is not None}
    hi = {r["cell"]: r for r in report.summary_rows("q95") if r.get("cell") is not None}
    for cell in sorted(med):
        r = med[cell]
        w.writerow([cell, r.get("ensemble"), r.get("noise"), _format(r.get(x)),
                    _format(r.get(y)), _format(lo[cell].get(y)), _format(hi[cell].get(y))])
    return buf.getvalue()
