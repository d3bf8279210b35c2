"""Command-line front end.

Subcommands:

* ``fit``       sparse (or plain) PCs of a CSV matrix
* ``simulate``  replicated block-covariance study, trial + aggregate CSVs
* ``bench``     wall-time comparison normalized against the eespca baseline
* ``cv``        cross-validation curve for one method's sparsity parameter

Exit codes: 0 success, 2 input error, 3 algorithm error, 4 grid failure.
``--plot`` renders PNG figures next to the delimited output. The
``SPARSEPC_THREADS`` environment variable caps grid parallelism
(default 1).
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import report
from .baselines import CardinalityParams, SpcParams, multi_pc
from .eespca import eespca_multi, make_component, reconstruction_error
from .errors import SparsePcError
from .linalg import DataMatrix, mean_center, power_iteration, rank1_residual, sample_covariance
from .selection import cv_select
from .simulation import METHODS, SimSpec, dead_cells, run_grid

DEFAULT_SEED = 1729

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_ALGORITHM = 3
EXIT_GRID = 4


class InputError(Exception):
    """Bad user input (file, flag combination, malformed cell)."""


@dataclass
class RunConfig:
    """Validated per-command configuration assembled from parsed flags."""

    command: str
    input: str | None = None
    output: str | None = None
    fmt: str = "csv"
    methods: tuple = ()
    components: int = 1
    sim: SimSpec | None = None
    vary: str | None = None
    values: tuple = ()
    nfolds: int = 5
    seed: int = DEFAULT_SEED
    center: bool = True
    tol: float | None = None
    max_iter: int | None = None
    plot: bool = False


def parse_matrix_csv(path: str) -> np.ndarray:
    """Numeric CSV to array. A non-numeric first line is treated as a
    header. Malformed cells are reported with their 1-based row and
    column."""
    if not os.path.exists(path):
        raise InputError(f"input file not found: {path}")
    with open(path, newline="") as fh:
        lines = [line.rstrip("\n").rstrip("\r") for line in fh]
    lines = [line for line in lines if line.strip()]
    if not lines:
        raise InputError(f"input file is empty: {path}")

    def try_parse(line):
        out = []
        for tok in line.split(","):
            out.append(float(tok.strip()))
        return out

    try:
        first = try_parse(lines[0])
    except ValueError:
        first = None  # header row
    rows = [] if first is None else [first]
    width = None if first is None else len(first)
    for i in range(1, len(lines)):
        tokens = lines[i].split(",")
        if width is not None and len(tokens) != width:
            raise InputError(
                f"row {i + 1} has {len(tokens)} columns, expected {width}"
            )
        row = []
        for j, tok in enumerate(tokens):
            try:
                row.append(float(tok.strip()))
            except ValueError:
                raise InputError(
                    f"malformed cell {tok.strip()!r} at row {i + 1}, column {j + 1}"
                ) from None
        if width is None:
            width = len(row)
        rows.append(row)
    if not rows:
        raise InputError(f"no data rows in {path}")
    return np.array(rows, dtype=float)


def load_data(config: RunConfig) -> DataMatrix:
    values = parse_matrix_csv(config.input)
    if config.center:
        return mean_center(DataMatrix(values))
    return DataMatrix(values, centered=True)


def parse_methods(raw: str, allow_many: bool) -> tuple:
    methods = tuple(m.strip() for m in raw.split(",") if m.strip())
    if not methods:
        raise InputError("no method given")
    for m in methods:
        if m not in METHODS:
            raise InputError(f"unknown method {m!r}; expected subset of {','.join(METHODS)}")
    if len(set(methods)) != len(methods):
        raise InputError("duplicate method in list")
    if not allow_many and len(methods) != 1:
        raise InputError("this command takes exactly one method")
    return methods


def derived_path(output: str, suffix: str, ext: str | None = None) -> str:
    stem, old_ext = os.path.splitext(output)
    return f"{stem}_{suffix}{ext if ext is not None else old_ext}"


# ---------------------------------------------------------------------------
# fit
# ---------------------------------------------------------------------------

def fit_components(method: str, X: DataMatrix, k: int, nfolds: int, seed: int,
                   tol: float | None, max_iter: int | None):
    """k components of one method; CV picks the sparsity parameter on the
    first PC and reuses it for subsequent components."""
    if not 1 <= k < min(X.n, X.p):
        raise InputError(f"--components must satisfy 1 <= k < min(n, p) = {min(X.n, X.p)}")
    if method == "pca":
        comps = []
        current = X
        for _ in range(k):
            cov = sample_covariance(current)
            pair = power_iteration(cov, tol=tol or 1e-8, max_iter=max_iter or 1000)
            comps.append(make_component(pair.vector, cov, method="pca",
                                        iterations=pair.iterations, converged=pair.converged))
            current = rank1_residual(current, comps[-1].loadings)
        return comps
    if method == "eespca":
        kwargs = {}
        if tol is not None:
            kwargs["tol"] = tol
        if max_iter is not None:
            kwargs["max_iter"] = max_iter
        return eespca_multi(X, k, **kwargs)

    base = "spc" if method in ("spc", "spc1se") else method
    cv = cv_select(base, X, nfolds=nfolds, seed=seed, tol=tol, max_iter=max_iter)
    value = cv.chosen_1se if method == "spc1se" else cv.chosen_min
    if base == "spc":
        params = SpcParams(c=float(value))
    else:
        params = CardinalityParams(k=int(value))
    if tol is not None or max_iter is not None:
        kwargs = {"tol": tol if tol is not None else params.tol,
                  "max_iter": max_iter if max_iter is not None else params.max_iter}
        params = type(params)(**{("c" if base == "spc" else "k"): value}, **kwargs)
    return multi_pc(base, X, [params] * k)


def cmd_fit(config: RunConfig) -> int:
    X = load_data(config)
    method = config.methods[0]
    t0 = time.perf_counter()
    components = fit_components(method, X, config.components, config.nfolds,
                                config.seed, config.tol, config.max_iter)
    runtime = time.perf_counter() - t0
    total_error = reconstruction_error(X, components)

    if config.fmt == "json":
        payload = report.fit_to_dict(method, components, X.n, X.p, total_error, runtime)
        if config.output:
            report.write_json(config.output, payload)
        else:
            report.write_json_stream(sys.stdout, payload)
    else:
        rows = report.fit_rows(components, total_error, runtime)
        if config.output:
            report.write_csv(config.output, report.FIT_CSV_COLUMNS, rows)
        else:
            report.write_csv_stream(sys.stdout, report.FIT_CSV_COLUMNS, rows)
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate / bench
# ---------------------------------------------------------------------------

def run_configured_grid(config: RunConfig):
    records = run_grid(
        config.sim,
        vary=config.vary,
        values=list(config.values) if config.values else None,
        methods=config.methods,
        nfolds=config.nfolds,
        seed=config.seed,
    )
    aggregates = aggregate_records(records, config.vary)
    return records, aggregates


def cmd_simulate(config: RunConfig) -> int:
    records, aggregates = run_configured_grid(config)
    report.write_trials_csv(config.output, records)
    agg_path = derived_path(config.output, "aggregate")
    report.write_aggregate_csv(agg_path, aggregates)
    print(f"wrote {len(records)} trial rows to {config.output}")
    print(f"wrote {len(aggregates)} aggregate rows to {agg_path}")
    if config.plot:
        for metric in report.METRIC_KEYS:
            path = derived_path(config.output, metric, ".png")
            report.plot_metric(aggregates, metric, config.vary, path)
            print(f"wrote figure {path}")
    if not aggregate_ok_required(aggregates):
        print("error: every trial failed in at least one grid cell", file=sys.stderr)
        return EXIT_GRID
    return EXIT_OK


def cmd_bench(config: RunConfig) -> int:
    records, aggregates = run_configured_grid(config)
    rows = report.bench_rows(aggregates, config.vary)
    report.write_bench_csv(config.output, rows)
    trials_path = derived_path(config.output, "trials")
    report.write_trials_csv(trials_path, records)
    print(f"{'value':>12} {'method':>10} {'mean_wall_time':>16} {'log10_ratio':>12}")
    for row in rows:
        print(f"{row['value']!s:>12} {row['method']:>10} "
              f"{row['mean_wall_time']:16.6g} {row['log10_ratio']:12.4f}")
    if config.plot:
        path = derived_path(config.output, "speed", ".png")
        report.plot_bench(rows, config.vary, path)
        print(f"wrote figure {path}")
    if not aggregate_ok_required(aggregates):
        print("error: every trial failed in at least one grid cell", file=sys.stderr)
        return EXIT_GRID
    return EXIT_OK


# ---------------------------------------------------------------------------
# cv
# ---------------------------------------------------------------------------

def cmd_cv(config: RunConfig) -> int:
    X = load_data(config)
    method = config.methods[0]
    if method not in ("spc", "tpower", "rifle"):
        raise InputError("cv supports methods spc, tpower, rifle")
    result = cv_select(method, X, nfolds=config.nfolds, seed=config.seed,
                       tol=config.tol, max_iter=config.max_iter)
    if config.fmt == "json":
        payload = report.cv_to_dict(result)
        if config.output:
            report.write_json(config.output, payload)
        else:
            report.write_json_stream(sys.stdout, payload)
    else:
        if config.output:
            report.write_cv_csv(config.output, result)
        else:
            report.write_cv_csv_stream(sys.stdout, result)
    if config.plot:
        if not config.output:
            raise InputError("--plot requires --output to derive figure paths")
        path = derived_path(config.output, "curve", ".png")
        report.plot_cv_curve(result, path)
        print(f"wrote figure {path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparsepc",
        description="Sparse principal component analysis toolkit.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, methods_default, allow_format=True):
        p.add_argument("--method", default=methods_default,
                       help=f"comma list from: {','.join(METHODS)}")
        p.add_argument("--nfolds", type=int, default=5, help="cross-validation folds")
        p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="RNG seed")
        p.add_argument("--tol", type=float, default=None,
                       help="iteration tolerance override (method defaults otherwise)")
        p.add_argument("--max-iter", type=int, default=None,
                       help="iteration cap override (method defaults otherwise)")

    fit = sub.add_parser("fit", help="fit sparse PCs to a CSV matrix",
                         formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    fit.add_argument("--input", required=True, help="numeric CSV, optional header row")
    fit.add_argument("--output", default=None, help="output path (stdout if omitted)")
    fit.add_argument("--format", dest="fmt", choices=("json", "csv"), default="json")
    fit.add_argument("--components", type=int, default=1, help="number of sparse PCs")
    fit.add_argument("--no-center", action="store_true",
                     help="trust the input to be column-centered already")
    common(fit, "eespca")

    sim = sub.add_parser("simulate", help="run the simulation study grid",
                         formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    sim.add_argument("--output", required=True, help="trials CSV path; aggregate CSV written alongside")
    sim.add_argument("--format", dest="fmt", choices=("csv",), default="csv")
    sim.add_argument("--n", type=int, default=100, help="samples per replicate")
    sim.add_argument("--p", type=int, default=10, help="variables")
    sim.add_argument("--b", type=int, default=4, help="correlated block size")
    sim.add_argument("--rho", type=float, default=0.5, help="within-block covariance")
    sim.add_argument("--reps", type=int, default=50, help="replicates per grid value")
    sim.add_argument("--vary", choices=("n", "p", "b", "rho"), default=None,
                     help="parameter swept across --values")
    sim.add_argument("--values", default=None, help="comma list of values for --vary")
    sim.add_argument("--plot", action="store_true", help="render metric figures (PNG)")
    common(sim, "eespca,spc,spc1se,tpower,rifle")

    bench = sub.add_parser("bench", help="benchmark method wall times",
                           formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    bench.add_argument("--output", required=True, help="benchmark CSV path")
    bench.add_argument("--format", dest="fmt", choices=("csv",), default="csv")
    bench.add_argument("--n", type=int, default=100)
    bench.add_argument("--p", type=int, default=100)
    bench.add_argument("--b", type=int, default=10)
    bench.add_argument("--rho", type=float, default=0.5)
    bench.add_argument("--reps", type=int, default=1)
    bench.add_argument("--vary", choices=("n", "p", "b", "rho"), default=None)
    bench.add_argument("--values", default=None)
    bench.add_argument("--plot", action="store_true", help="render the speed figure (PNG)")
    common(bench, "eespca,spc,tpower")

    cv = sub.add_parser("cv", help="cross-validation curve for one method",
                        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    cv.add_argument("--input", required=True)
    cv.add_argument("--output", default=None, help="output path (stdout if omitted)")
    cv.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")
    cv.add_argument("--no-center", action="store_true")
    cv.add_argument("--plot", action="store_true", help="render the CV curve (PNG)")
    common(cv, "tpower")

    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    methods = parse_methods(args.method, allow_many=args.command in ("simulate", "bench"))
    config = RunConfig(
        command=args.command,
        input=getattr(args, "input", None),
        output=getattr(args, "output", None),
        fmt=getattr(args, "fmt", "csv"),
        methods=methods,
        components=getattr(args, "components", 1),
        nfolds=args.nfolds,
        seed=args.seed,
        center=not getattr(args, "no_center", False),
        tol=args.tol,
        max_iter=args.max_iter,
        plot=getattr(args, "plot", False),
    )
    if args.command in ("simulate", "bench"):
        try:
            config.sim = SimSpec(n=args.n, p=args.p, b=args.b, rho=args.rho,
                                 reps=args.reps, seed=args.seed)
        except SparsePcError as exc:
            raise InputError(str(exc)) from exc
        config.vary = args.vary
        if args.vary:
            if not args.values:
                raise InputError("--vary requires --values")
            try:
                config.values = tuple(float(v) for v in args.values.split(",") if v.strip())
            except ValueError as exc:
                raise InputError(f"bad --values list: {exc}") from exc
            if not config.values:
                raise InputError("--values is empty")
        elif args.values:
            raise InputError("--values requires --vary")
    return config


COMMANDS = {
    "fit": cmd_fit,
    "simulate": cmd_simulate,
    "bench": cmd_bench,
    "cv": cmd_cv,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = config_from_args(args)
        return COMMANDS[args.command](config)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SparsePcError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ALGORITHM


if __name__ == "__main__":
    sys.exit(main())
