"""Cross-validated selection of sparsity parameters.

Row-holdout scheme: for every fold and candidate parameter the first
sparse PC is fitted on the training rows and scored by the squared
Frobenius reconstruction error of the held-out rows projected on the
fitted loadings. Selection is either the error-minimizing candidate or
the sparsest candidate within one standard error of that minimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AllCellsFailed, SparsePcError, TooFewSamples
from .baselines import (
    CARD_MAX_ITER,
    CARD_TOL,
    SPC_MAX_ITER,
    SPC_TOL,
    CardinalityParams,
    SpcParams,
    rifle_first_pc,
    spc_first_pc,
    tpower_first_pc,
)
from .linalg import DataMatrix, mean_center, sample_covariance

GRID_POINTS = 20


@dataclass(frozen=True)
class CvGrid:
    """Ordered candidate sparsity parameters, either L1 bounds or
    cardinalities."""

    values: tuple
    kind: str  # "l1-bound" | "cardinality"

    def __post_init__(self):
        if self.kind not in ("l1-bound", "cardinality"):
            raise ValueError(f"unknown grid kind {self.kind!r}")
        vals = tuple(self.values)
        if not vals:
            raise ValueError("grid must be non-empty")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("grid values must be strictly ascending")
        object.__setattr__(self, "values", vals)


def l1_bound_grid(p: int, points: int = GRID_POINTS) -> CvGrid:
    """Evenly spaced L1 bounds from 1 to sqrt(p)."""
    return CvGrid(values=tuple(np.linspace(1.0, math.sqrt(p), points)), kind="l1-bound")


def cardinality_grid(p: int, points: int = GRID_POINTS) -> CvGrid:
    """Rounded, deduplicated cardinalities from 1 to p."""
    ks = np.rint(np.linspace(1, p, points)).astype(int)
    return CvGrid(values=tuple(sorted(set(int(k) for k in ks))), kind="cardinality")


def default_grid(method: str, p: int) -> CvGrid:
    if method == "spc":
        return l1_bound_grid(p)
    if method in ("tpower", "rifle"):
        return cardinality_grid(p)
    raise ValueError(f"no default grid for method {method!r}")


@dataclass(frozen=True)
class CvResult:
    """Cross-validation curve and the two selected parameters.

    ``chosen_min`` minimizes the mean held-out error (ties go to the
    sparser candidate); ``chosen_1se`` is the sparsest candidate whose
    mean error is within one standard error of that minimum.
    """

    grid: CvGrid
    mean_error: np.ndarray
    se_error: np.ndarray
    chosen_min: float
    chosen_1se: float
    nfolds: int


def make_folds(n: int, nfolds: int, seed: int) -> np.ndarray:
    """Deterministic fold assignment per sample; fold sizes differ by at
    most one."""
    if not 2 <= nfolds <= n:
        raise TooFewSamples(f"need 2 <= nfolds <= n, got nfolds={nfolds}, n={n}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    folds = np.empty(n, dtype=int)
    folds[perm] = np.arange(n) % nfolds
    return folds


def _fit_loadings(method: str, train: DataMatrix, value, tol, max_iter) -> np.ndarray:
    if method == "spc":
        params = SpcParams(c=float(value), tol=tol, max_iter=max_iter)
        return spc_first_pc(train, params).loadings
    cov = sample_covariance(train)
    params = CardinalityParams(k=int(value), tol=tol, max_iter=max_iter)
    if method == "tpower":
        return tpower_first_pc(cov, params).loadings
    if method == "rifle":
        return rifle_first_pc(cov, params).loadings
    raise ValueError(f"unknown method {method!r}")


def holdout_error(X_held: np.ndarray, v: np.ndarray) -> float:
    """Squared Frobenius norm of the held-out rows after removing their
    projection on the loadings ``v``."""
    resid = X_held - np.outer(X_held @ v, v)
    return float(np.sum(resid * resid))


def cv_select(
    method: str,
    X: DataMatrix,
    grid: CvGrid | None = None,
    nfolds: int = 5,
    seed: int = 0,
    tol: float | None = None,
    max_iter: int | None = None,
) -> CvResult:
    """Cross-validate the sparsity parameter of ``method`` on centered X.

    The training rows of each fold are re-centered before fitting; held-out
    rows never influence the fit for their cell. Cells that raise are
    scored +inf and can never be chosen.
    """
    if grid is None:
        grid = default_grid(method, X.p)
    if tol is None:
        tol = SPC_TOL if method == "spc" else CARD_TOL
    if max_iter is None:
        max_iter = SPC_MAX_ITER if method == "spc" else CARD_MAX_ITER

    folds = make_folds(X.n, nfolds, seed)
    ncand = len(grid.values)
    errors = np.full((nfolds, ncand), np.inf)
    for f in range(nfolds):
        held = folds == f
        train = mean_center(DataMatrix(X.values[~held]))
        for ci, value in enumerate(grid.values):
            try:
                v = _fit_loadings(method, train, value, tol, max_iter)
            except SparsePcError:
                continue  # cell keeps +inf
            errors[f, ci] = holdout_error(X.values[held], v)

    mean_error = np.empty(ncand)
    se_error = np.empty(ncand)
    for ci in range(ncand):
        col = errors[:, ci]
        if np.all(np.isfinite(col)):
            mean_error[ci] = col.mean()
            se_error[ci] = col.std(ddof=1) / math.sqrt(nfolds)
        else:
            mean_error[ci] = np.inf
            se_error[ci] = np.inf

    if not np.any(np.isfinite(mean_error)):
        raise AllCellsFailed(f"every candidate failed {method} cross-validation")

    # ascending grids list sparser candidates first, so the first argmin
    # and the first within-1-SE candidate are the sparsest ones
    best = int(np.argmin(mean_error))
    threshold = mean_error[best] + se_error[best]
    one_se = best
    for ci in range(ncand):
        if mean_error[ci] <= threshold:
            one_se = ci
            break

    return CvResult(
        grid=grid,
        mean_error=mean_error,
        se_error=se_error,
        chosen_min=grid.values[best],
        chosen_1se=grid.values[one_se],
        nfolds=nfolds,
    )
