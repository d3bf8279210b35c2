"""Sparse first principal component via the eigenvalue-identity
approximation, plus rank-1 deflation for multiple components.

The first-PC routine works on a covariance matrix so that analytic
population fixtures can be tested without sampling; the multi-component
entry point works on the data matrix because deflation is defined there.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import PowerIterationDegenerate, RankExhausted
from .linalg import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    DataMatrix,
    SymMatrix,
    canonical_sign,
    frobenius_sq,
    power_iteration,
    principal_submatrix,
    rank1_residual,
    sample_covariance,
)
from .loadings import approx_squared_loadings, loading_ratios

# Residual energy below this fraction of the original is treated as rank
# exhaustion during deflation.
RANK_EPS = 1e-12


@dataclass(frozen=True)
class SparseComponent:
    """A unit-norm sparse loadings vector with its support and eigenvalue.

    ``support`` is exactly the set of nonzero loading indices. ``param``
    is the sparsity parameter used by the fitting method (None for
    methods without one). ``runtime`` is the wall-clock fit time in
    seconds.
    """

    loadings: np.ndarray
    support: frozenset[int]
    eigenvalue: float
    method: str
    param: float | None = None
    runtime: float = 0.0
    iterations: int = 0
    converged: bool = True

    def __post_init__(self):
        arr = np.asarray(self.loadings, dtype=float)
        object.__setattr__(self, "loadings", arr)
        object.__setattr__(self, "support", frozenset(int(j) for j in self.support))


def make_component(
    loadings: np.ndarray,
    cov: SymMatrix,
    method: str,
    param: float | None = None,
    runtime: float = 0.0,
    iterations: int = 0,
    converged: bool = True,
) -> SparseComponent:
    """Sign-canonicalize, derive the support and the associated eigenvalue
    ``v.T @ cov @ v``, and assemble a :class:`SparseComponent`."""
    v = canonical_sign(np.asarray(loadings, dtype=float))
    support = frozenset(int(j) for j in np.flatnonzero(v))
    lam = float(v @ (cov.values @ v))
    return SparseComponent(
        loadings=v,
        support=support,
        eigenvalue=lam,
        method=method,
        param=param,
        runtime=runtime,
        iterations=iterations,
        converged=converged,
    )


def submatrix_top_eigenvalues(
    cov: SymMatrix,
    v1: np.ndarray,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> np.ndarray:
    """Top eigenvalue of every leave-one-variable-out principal submatrix.

    Each power iteration is warm-started with the full-matrix principal
    eigenvector minus the removed entry, renormalized; a numerically zero
    seed falls back to the default start.
    """
    p = cov.p
    out = np.empty(p)
    for j in range(p):
        sub = principal_submatrix(cov, j)
        seed = np.delete(v1, j)
        if np.linalg.norm(seed) < 1e-12:
            seed = None
        out[j] = power_iteration(sub, v0=seed, tol=tol, max_iter=max_iter).value
    return out


def eespca_first_pc(
    cov: SymMatrix,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> SparseComponent:
    """Sparse first PC of a covariance matrix.

    Pipeline: power iteration for the principal eigenpair; warm-started
    power iterations for the per-variable submatrix top eigenvalues; the
    rank-1 squared-loading approximation; the approximate-to-true loading
    ratios; elementwise scaling of the eigenvector by those ratios;
    renormalization; truncation of entries below ``1/sqrt(p)`` (the entry
    magnitude of a constant unit vector); final renormalization. The
    associated eigenvalue is the Rayleigh quotient of the sparse vector.

    No sparsity parameter is needed; the only knobs are the power-iteration
    tolerances.
    """
    start = time.perf_counter()
    top = power_iteration(cov, tol=tol, max_iter=max_iter)
    v1 = top.vector
    if not np.any(v1):
        raise PowerIterationDegenerate("principal eigenvector is numerically zero")

    sub_lambda1 = submatrix_top_eigenvalues(cov, v1, tol=tol, max_iter=max_iter)
    approx = approx_squared_loadings(cov, top.value, sub_lambda1)
    ratios = loading_ratios(approx, v1)

    scaled = ratios.values * v1
    nrm = np.linalg.norm(scaled)
    if nrm == 0.0:
        # every ratio vanished (e.g. an identity-like covariance); keep the
        # single largest-|.| raw loading so the support is never empty
        scaled = _largest_entry_vector(v1)
    else:
        scaled = scaled / nrm

    threshold = 1.0 / np.sqrt(cov.p)
    truncated = np.where(np.abs(scaled) < threshold, 0.0, scaled)
    if not np.any(truncated):
        truncated = _largest_entry_vector(scaled)
    truncated = truncated / np.linalg.norm(truncated)

    runtime = time.perf_counter() - start
    return make_component(
        truncated,
        cov,
        method="eespca",
        runtime=runtime,
        iterations=top.iterations,
        converged=top.converged,
    )


def _largest_entry_vector(v: np.ndarray) -> np.ndarray:
    """Unit vector retaining only the largest-|.| entry of ``v`` (ties:
    lowest index), preserving its sign."""
    j = int(np.argmax(np.abs(v)))
    out = np.zeros_like(v)
    out[j] = 1.0 if v[j] >= 0 else -1.0
    return out


def eespca_multi(
    X: DataMatrix,
    k: int,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> list[SparseComponent]:
    """k sparse PCs by repeatedly deflating the rank-1 reconstruction.

    Component i+1 is the sparse first PC of the covariance of the residual
    after removing component i. The components are not guaranteed to be
    orthogonal.
    """
    if not 1 <= k < min(X.n, X.p):
        raise ValueError(f"k must satisfy 1 <= k < min(n, p) = {min(X.n, X.p)}, got {k}")
    total = frobenius_sq(X)
    components: list[SparseComponent] = []
    current = X
    for _ in range(k):
        if frobenius_sq(current) <= RANK_EPS * max(total, 1.0):
            raise RankExhausted(
                f"residual is numerically zero after {len(components)} components"
            )
        comp = eespca_first_pc(sample_covariance(current), tol=tol, max_iter=max_iter)
        components.append(comp)
        current = rank1_residual(current, comp.loadings)
    return components


def reconstruction_error(X: DataMatrix, components: list[SparseComponent]) -> float:
    """Squared Frobenius norm of X after sequentially subtracting each
    component's rank-1 reconstruction, in order."""
    current = X
    for comp in components:
        current = rank1_residual(current, comp.loadings)
    return frobenius_sq(current)
