"""Dense symmetric linear algebra primitives.

Everything here is a pure function on immutable inputs: centering,
covariance, power iteration, an exact small-scale eigensolver used as an
oracle, principal submatrices, rank-1 deflation and Frobenius norms.
Dense float64 storage throughout; the target regime (p up to a few
thousand) does not warrant sparse storage.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionTooLarge,
    EmptyMatrix,
    IndexOutOfRange,
    NormViolation,
    NotCentered,
    ZeroMatrix,
)

# Exact solver is an oracle for small problems only.
ORACLE_MAX_DIM = 64

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 1000


@dataclass(frozen=True)
class DataMatrix:
    """An n x p matrix of observations (row = sample, column = variable)."""

    values: np.ndarray
    centered: bool = False

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 2:
            raise EmptyMatrix(f"data matrix must be 2-D, got ndim={arr.ndim}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise EmptyMatrix(f"data matrix must be non-empty, got shape {arr.shape}")
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class SymMatrix:
    """A p x p symmetric matrix (sample or population covariance)."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise EmptyMatrix(f"symmetric matrix must be square, got shape {arr.shape}")
        scale = np.max(np.abs(arr)) if arr.size else 0.0
        asym = np.max(np.abs(arr - arr.T)) if arr.size else 0.0
        if asym > 1e-12 * max(scale, 1e-300):
            raise ValueError(f"matrix is not symmetric: max |A - A.T| = {asym:g}")
        object.__setattr__(self, "values", arr)

    @property
    def p(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class EigenPair:
    """An (eigenvalue, unit-norm eigenvector) estimate.

    The vector is sign-canonicalized: its largest-magnitude entry is
    non-negative (ties broken by lowest index).
    """

    value: float
    vector: np.ndarray
    iterations: int = 0
    converged: bool = True


def canonical_sign(v: np.ndarray) -> np.ndarray:
    """Flip ``v`` so its largest-|.| entry is non-negative (ties: lowest index)."""
    v = np.asarray(v, dtype=float)
    if v.size == 0:
        return v
    idx = int(np.argmax(np.abs(v)))
    if v[idx] < 0:
        return -v
    return v.copy()


def mean_center(X: DataMatrix) -> DataMatrix:
    """Subtract each column's mean. Idempotent; two-pass for accuracy."""
    if X.n < 2 or X.p < 1:
        raise EmptyMatrix(f"need at least 2 rows and 1 column, got {X.n}x{X.p}")
    vals = X.values - X.values.mean(axis=0)
    # second pass removes the O(eps * scale) residual left by cancellation
    vals = vals - vals.mean(axis=0)
    return DataMatrix(vals, centered=True)


def sample_covariance(X: DataMatrix) -> SymMatrix:
    """Unbiased sample covariance ``X.T @ X / (n - 1)`` of centered data."""
    if not X.centered:
        raise NotCentered("sample_covariance requires a centered data matrix")
    if X.n < 2:
        raise EmptyMatrix(f"need at least 2 samples, got {X.n}")
    cov = X.values.T @ X.values / (X.n - 1)
    # exact symmetry despite floating-point reduction order
    cov = 0.5 * (cov + cov.T)
    return SymMatrix(cov)


def default_start(p: int) -> np.ndarray:
    """Default power-iteration start: normalized all-ones with a tiny
    index-dependent perturbation to break symmetry with anti-symmetric
    eigenvectors."""
    v = 1.0 + 1e-6 * np.arange(p)
    return v / np.linalg.norm(v)


def _escape_nullspace(mat: np.ndarray) -> np.ndarray:
    """Basis vector of the first nonzero column; ``A e_j`` is then nonzero."""
    p = mat.shape[0]
    for j in range(p):
        if np.any(mat[:, j]):
            v = np.zeros(p)
            v[j] = 1.0
            return v
    raise ZeroMatrix("power iteration is undefined for the zero matrix")


def power_iteration(
    A: SymMatrix,
    v0: np.ndarray | None = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> EigenPair:
    """Dominant eigenpair of a symmetric matrix by power iteration.

    Stops when the successive-iterate change (after sign alignment) drops
    to ``tol``. Non-convergence is not an error: the last iterate is
    returned with ``converged=False`` so callers (e.g. cross-validation
    loops) can decide what to do.
    """
    mat = A.values
    p = A.p
    if not np.any(mat):
        raise ZeroMatrix("power iteration is undefined for the zero matrix")

    if v0 is not None:
        v = np.asarray(v0, dtype=float)
        nrm = np.linalg.norm(v)
        if nrm == 0.0:
            raise NormViolation("v0 must be nonzero")
        v = v / nrm
    else:
        v = default_start(p)

    # If the start lies in the nullspace, sweep basis vectors; some column
    # of a nonzero matrix is always nonzero.
    if not np.any(mat @ v):
        v = _escape_nullspace(mat)

    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        w = mat @ v
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            # v fell exactly into the nullspace mid-iteration; restart
            v = _escape_nullspace(mat)
            continue
        v_new = w / nrm
        change = min(np.linalg.norm(v_new - v), np.linalg.norm(v_new + v))
        v = v_new
        if change <= tol:
            converged = True
            break

    value = float(v @ (mat @ v))
    return EigenPair(value=value, vector=canonical_sign(v), iterations=iterations, converged=converged)


def exact_symmetric_eigen(A: SymMatrix) -> list[EigenPair]:
    """Full eigendecomposition of a small symmetric matrix, descending by
    eigenvalue. Oracle-scale only (p <= 64)."""
    if A.p > ORACLE_MAX_DIM:
        raise DimensionTooLarge(f"exact solver limited to p <= {ORACLE_MAX_DIM}, got {A.p}")
    evals, evecs = np.linalg.eigh(A.values)
    pairs = []
    for i in range(A.p - 1, -1, -1):
        pairs.append(
            EigenPair(value=float(evals[i]), vector=canonical_sign(evecs[:, i]), iterations=0, converged=True)
        )
    return pairs


def principal_submatrix(A: SymMatrix, j: int) -> SymMatrix:
    """The (p-1) x (p-1) matrix with row and column ``j`` removed."""
    if A.p < 2:
        raise EmptyMatrix("cannot take a principal submatrix of a 1x1 matrix")
    if not 0 <= j < A.p:
        raise IndexOutOfRange(f"index {j} out of range for p={A.p}")
    keep = np.arange(A.p) != j
    return SymMatrix(A.values[np.ix_(keep, keep)])


def rank1_residual(X: DataMatrix, v: np.ndarray) -> DataMatrix:
    """Residual ``X - (X v) v.T`` after removing the rank-1 reconstruction
    along the unit vector ``v``. Preserves the centered flag (deflating a
    centered matrix leaves column means at zero)."""
    v = np.asarray(v, dtype=float)
    nrm = np.linalg.norm(v)
    if abs(nrm - 1.0) > 1e-8:
        raise NormViolation(f"v must be unit norm, got ||v|| = {nrm!r}")
    scores = X.values @ v
    return DataMatrix(X.values - np.outer(scores, v), centered=X.centered)


def frobenius_sq(X: DataMatrix) -> float:
    """Sum of squared entries."""
    return float(np.sum(X.values * X.values))
