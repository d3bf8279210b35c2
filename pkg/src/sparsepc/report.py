"""Serialization of results to CSV/JSON and rendering of summary figures.

CSV is the interchange format for trial records, aggregates, benchmark
tables and CV curves; JSON is used for fit results where per-component
nesting helps. Numeric fields are written with 17 significant digits so
files round-trip exactly. The figure helpers render the plot-ready
aggregate tables to PNG files alongside the delimited output.
"""

from __future__ import annotations

import csv
import json
import math
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .eespca import SparseComponent
from .selection import CvResult
from .simulation import TrialRecord

TRIAL_COLUMNS = [
    "n", "p", "b", "rho", "replicate", "method", "sens", "spec", "balacc",
    "recon_ratio", "wall_time", "chosen_param", "status",
]

METRIC_KEYS = ["sens", "spec", "balacc", "recon_ratio", "wall_time"]

# Pinned PNG metadata keeps figure bytes reproducible across runs.
PNG_METADATA = {"Software": "sparsepc"}


def fmt(x) -> str:
    """17-significant-digit text for floats; empty string for missing."""
    if x is None:
        return ""
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return format(x, ".17g")
    return str(x)


def write_csv_stream(fh, header: list[str], rows: list[list]) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(x) for x in row])


def write_csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        write_csv_stream(fh, header, rows)


def trials_rows(records: list[TrialRecord]) -> list[list]:
    rows = []
    for rec in records:
        s = rec.spec
        rows.append([
            s.n, s.p, s.b, s.rho, rec.replicate, rec.method, rec.sens,
            rec.spec_metric, rec.balacc, rec.recon_ratio, rec.wall_time,
            rec.chosen_param, rec.status,
        ])
    return rows


def write_trials_csv(path: str, records: list[TrialRecord]) -> None:
    write_csv(path, TRIAL_COLUMNS, trials_rows(records))


def aggregate_records(records: list[TrialRecord], vary: str | None) -> list[dict]:
    """Mean and standard error of every metric per grid cell and method.

    Only successful replicates enter the statistics; the counts of total
    and successful replicates are reported per row.
    """
    groups = defaultdict(list)
    order = []
    for rec in records:
        s = rec.spec
        key = (s.n, s.p, s.b, s.rho, rec.method)
        if key not in groups:
            order.append(key)
        groups[key].append(rec)

    out = []
    for key in order:
        n, p, b, rho, method = key
        recs = groups[key]
        ok = [r for r in recs if r.status == "ok"]
        row = {
            "n": n, "p": p, "b": b, "rho": rho,
            "vary": vary or "", "value": getattr(recs[0].spec, vary) if vary else "",
            "method": method, "reps": len(recs), "reps_ok": len(ok),
        }
        for metric in METRIC_KEYS:
            attr = "spec_metric" if metric == "spec" else metric
            vals = np.array([getattr(r, attr) for r in ok], dtype=float)
            if vals.size:
                row[f"mean_{metric}"] = float(vals.mean())
                row[f"se_{metric}"] = (
                    float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0
                )
            else:
                row[f"mean_{metric}"] = float("nan")
                row[f"se_{metric}"] = float("nan")
        out.append(row)
    return out


AGGREGATE_COLUMNS = (
    ["n", "p", "b", "rho", "vary", "value", "method", "reps", "reps_ok"]
    + [f"{stat}_{m}" for m in METRIC_KEYS for stat in ("mean", "se")]
)


def write_aggregate_csv(path: str, aggregates: list[dict]) -> None:
    rows = [[agg[col] for col in AGGREGATE_COLUMNS] for agg in aggregates]
    write_csv(path, AGGREGATE_COLUMNS, rows)


def bench_rows(aggregates: list[dict], vary: str | None) -> list[dict]:
    """Per-method mean wall times normalized as log10 ratios against the
    eespca time at the smallest grid value (or the method's own smallest
    cell when eespca was not run)."""
    methods = []
    for agg in aggregates:
        if agg["method"] not in methods:
            methods.append(agg["method"])

    def cell_value(agg):
        return agg["value"] if vary else 0

    baselines = {}
    for method in methods:
        ref = "eespca" if "eespca" in methods else method
        cells = [a for a in aggregates if a["method"] == ref]
        cells.sort(key=cell_value)
        baselines[method] = cells[0]["mean_wall_time"]

    rows = []
    for agg in aggregates:
        base = baselines[agg["method"]]
        t = agg["mean_wall_time"]
        ratio = float("nan")
        if base and base > 0 and t and not math.isnan(t):
            ratio = math.log10(t / base)
        rows.append({
            "vary": vary or "", "value": agg["value"], "method": agg["method"],
            "mean_wall_time": t, "log10_ratio": ratio,
        })
    return rows


BENCH_COLUMNS = ["vary", "value", "method", "mean_wall_time", "log10_ratio"]


def write_bench_csv(path: str, rows: list[dict]) -> None:
    write_csv(path, BENCH_COLUMNS, [[r[c] for c in BENCH_COLUMNS] for r in rows])


CV_COLUMNS = ["candidate", "mean_error", "se_error", "is_chosen_min", "is_chosen_1se"]


def cv_rows(result: CvResult) -> list[list]:
    rows = []
    for value, mean, se in zip(result.grid.values, result.mean_error, result.se_error):
        rows.append([
            value, float(mean), float(se),
            int(value == result.chosen_min), int(value == result.chosen_1se),
        ])
    return rows


def write_cv_csv(path: str, result: CvResult) -> None:
    write_csv(path, CV_COLUMNS, cv_rows(result))


def write_cv_csv_stream(fh, result: CvResult) -> None:
    write_csv_stream(fh, CV_COLUMNS, cv_rows(result))


def cv_to_dict(result: CvResult) -> dict:
    return {
        "kind": result.grid.kind,
        "nfolds": result.nfolds,
        "candidates": list(result.grid.values),
        "mean_error": [float(x) for x in result.mean_error],
        "se_error": [float(x) for x in result.se_error],
        "chosen_min": result.chosen_min,
        "chosen_1se": result.chosen_1se,
    }


def fit_to_dict(method: str, components: list[SparseComponent], n: int, p: int,
                total_error: float, runtime: float) -> dict:
    return {
        "method": method,
        "n": n,
        "p": p,
        "components": [
            {
                "loadings": [float(x) for x in comp.loadings],
                "eigenvalue": comp.eigenvalue,
                "support": sorted(comp.support),
                "support_size": len(comp.support),
                "param": comp.param,
                "iterations": comp.iterations,
                "converged": comp.converged,
            }
            for comp in components
        ],
        "reconstruction_error": total_error,
        "runtime_seconds": runtime,
    }


FIT_CSV_COLUMNS = [
    "component", "variable", "loading", "eigenvalue", "support_size",
    "param", "iterations", "runtime_seconds", "reconstruction_error",
]


def fit_rows(components: list[SparseComponent], total_error: float, runtime: float) -> list[list]:
    rows = []
    for ci, comp in enumerate(components, start=1):
        for j, loading in enumerate(comp.loadings):
            rows.append([
                ci, j, float(loading), comp.eigenvalue, len(comp.support),
                comp.param, comp.iterations, runtime, total_error,
            ])
    return rows


def write_json_stream(fh, payload: dict) -> None:
    json.dump(payload, fh, indent=2)
    fh.write("\n")


def write_json(path: str, payload: dict) -> None:
    with open(path, "w") as fh:
        write_json_stream(fh, payload)


# ---------------------------------------------------------------------------
# Figures
# ---------------------------------------------------------------------------

METRIC_LABELS = {
    "sens": "sensitivity (true zeros recovered)",
    "spec": "specificity (true nonzeros recovered)",
    "balacc": "balanced accuracy",
    "recon_ratio": "reconstruction error ratio vs PCA",
    "wall_time": "wall time (s)",
}


def _save(fig, path: str) -> None:
    fig.savefig(path, dpi=150, metadata=PNG_METADATA)
    plt.close(fig)


def plot_metric(aggregates: list[dict], metric: str, vary: str | None, path: str) -> None:
    """One line per method, mean with +/- 1 SE error bars, against the
    varied parameter (or a single cell when nothing varies)."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    methods = []
    for agg in aggregates:
        if agg["method"] not in methods:
            methods.append(agg["method"])
    for method in methods:
        cells = [a for a in aggregates if a["method"] == method]
        if vary:
            cells.sort(key=lambda a: a["value"])
            x = [a["value"] for a in cells]
        else:
            x = list(range(len(cells)))
        y = [a[f"mean_{metric}"] for a in cells]
        se = [a[f"se_{metric}"] for a in cells]
        ax.errorbar(x, y, yerr=se, marker="o", capsize=3, label=method)
    ax.set_xlabel(vary if vary else "cell")
    ax.set_ylabel(METRIC_LABELS.get(metric, metric))
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    _save(fig, path)


def plot_bench(rows: list[dict], vary: str | None, path: str) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    methods = []
    for row in rows:
        if row["method"] not in methods:
            methods.append(row["method"])
    for method in methods:
        cells = [r for r in rows if r["method"] == method]
        if vary:
            cells.sort(key=lambda r: r["value"])
            x = [r["value"] for r in cells]
        else:
            x = list(range(len(cells)))
        ax.plot(x, [r["log10_ratio"] for r in cells], marker="o", label=method)
    ax.set_xlabel(vary if vary else "cell")
    ax.set_ylabel("log10 time ratio vs eespca baseline")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    _save(fig, path)


def plot_cv_curve(result: CvResult, path: str) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    x = np.array(result.grid.values, dtype=float)
    mean = np.asarray(result.mean_error, dtype=float)
    se = np.asarray(result.se_error, dtype=float)
    finite = np.isfinite(mean)
    ax.errorbar(x[finite], mean[finite], yerr=se[finite], marker="o", capsize=3,
                label="held-out error")
    ax.axvline(result.chosen_min, color="tab:green", linestyle="--", label="min")
    ax.axvline(result.chosen_1se, color="tab:orange", linestyle=":", label="1 SE")
    ax.set_xlabel(result.grid.kind)
    ax.set_ylabel("mean held-out reconstruction error")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    _save(fig, path)
