"""Baseline sparse-PCA methods.

Three comparison fitters sharing the :class:`SparseComponent` output type:

* ``spc_first_pc``: L1-penalized rank-1 matrix decomposition solved by
  alternating maximization with a bisection search for the soft threshold.
* ``tpower_first_pc``: power iteration truncated to the k largest-|.|
  loadings on every step.
* ``rifle_first_pc``: truncated gradient ascent on the Rayleigh quotient
  (the generalized problem with an identity metric), with step-size
  halving whenever the quotient would decrease.

Multiple components come from rank-1 deflation of the data matrix, the
same scheme used by ``eespca_multi``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import RankExhausted, ZeroAfterTruncation
from .linalg import (
    DataMatrix,
    SymMatrix,
    frobenius_sq,
    power_iteration,
    rank1_residual,
    sample_covariance,
)
from .eespca import RANK_EPS, SparseComponent, eespca_first_pc, make_component

SPC_TOL = 1e-6
SPC_MAX_ITER = 200
CARD_TOL = 1e-8
CARD_MAX_ITER = 1000

# Bisection resolution for the smallest soft threshold meeting the L1 bound.
BISECT_TOL = 1e-9


@dataclass(frozen=True)
class SpcParams:
    """L1-bound parameters: ``1 <= c <= sqrt(p)`` (checked against p at fit
    time since the params object does not know the dimension)."""

    c: float
    tol: float = SPC_TOL
    max_iter: int = SPC_MAX_ITER

    def __post_init__(self):
        if self.c < 1.0:
            raise ValueError(f"L1 bound c must be >= 1, got {self.c!r}")


@dataclass(frozen=True)
class CardinalityParams:
    """Cardinality parameters: at most ``k`` nonzero loadings."""

    k: int
    tol: float = CARD_TOL
    max_iter: int = CARD_MAX_ITER

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"cardinality k must be >= 1, got {self.k!r}")


def soft_threshold(x: np.ndarray, delta: float) -> np.ndarray:
    """``sign(x) * max(0, |x| - delta)`` elementwise."""
    if delta < 0:
        raise ValueError(f"delta must be >= 0, got {delta!r}")
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(0.0, np.abs(x) - delta)


def l1_threshold(w: np.ndarray, c: float) -> tuple[np.ndarray, float]:
    """Unit vector ``S(w, delta) / ||S(w, delta)||`` with the smallest
    ``delta >= 0`` such that its L1 norm is at most ``c``, found by
    bisection. Returns the vector and the delta used."""
    w = np.asarray(w, dtype=float)
    nrm = np.linalg.norm(w)
    if nrm == 0.0:
        raise ZeroAfterTruncation("cannot L1-threshold a zero vector")
    if np.sum(np.abs(w)) / nrm <= c:
        return w / nrm, 0.0

    lo, hi = 0.0, float(np.max(np.abs(w)))
    for _ in range(200):
        if hi - lo <= BISECT_TOL:
            break
        mid = 0.5 * (lo + hi)
        s = soft_threshold(w, mid)
        snrm = np.linalg.norm(s)
        if snrm > 0.0 and np.sum(np.abs(s)) / snrm <= c:
            hi = mid
        else:
            lo = mid
    s = soft_threshold(w, hi)
    snrm = np.linalg.norm(s)
    if snrm == 0.0 or np.sum(np.abs(s)) / snrm > c:
        # exact ties among the largest |w| can leave no feasible threshold;
        # fall back to the 1-sparse vector (always feasible since c >= 1)
        j = int(np.argmax(np.abs(w)))
        s = np.zeros_like(w)
        s[j] = np.sign(w[j]) or 1.0
        return s, hi
    return s / snrm, hi


def spc_first_pc(X: DataMatrix, params: SpcParams) -> SparseComponent:
    """Sparse first PC by LASSO-penalized rank-1 decomposition.

    Alternates ``u <- X v / ||X v||`` with ``v <- S(X.T u, delta)``
    normalized, where delta is the smallest soft threshold keeping
    ``||v||_1 <= c``. Non-convergence is flagged on the returned
    component, not raised.
    """
    start = time.perf_counter()
    p = X.p
    if params.c > np.sqrt(p) + 1e-12:
        raise ValueError(f"L1 bound c={params.c!r} exceeds sqrt(p)={np.sqrt(p)!r}")
    cov = sample_covariance(X)
    v = power_iteration(cov).vector

    converged = False
    iterations = 0
    delta = 0.0
    for iterations in range(1, params.max_iter + 1):
        xv = X.values @ v
        nrm = np.linalg.norm(xv)
        if nrm == 0.0:
            break  # v in the nullspace of X; keep last iterate
        u = xv / nrm
        v_new, delta = l1_threshold(X.values.T @ u, params.c)
        change = min(np.linalg.norm(v_new - v), np.linalg.norm(v_new + v))
        v = v_new
        if change <= params.tol:
            converged = True
            break

    runtime = time.perf_counter() - start
    return make_component(
        v, cov, method="spc", param=params.c,
        runtime=runtime, iterations=iterations, converged=converged,
    )


def truncate_k(v: np.ndarray, k: int) -> np.ndarray:
    """Zero all but the k largest-|.| entries. Ties at the boundary keep
    the lower variable index, so results are deterministic."""
    v = np.asarray(v, dtype=float)
    if k >= v.size:
        return v.copy()
    order = np.argsort(-np.abs(v), kind="stable")
    out = np.zeros_like(v)
    keep = order[:k]
    out[keep] = v[keep]
    return out


def tpower_first_pc(
    cov: SymMatrix,
    params: CardinalityParams,
    v0: np.ndarray | None = None,
) -> SparseComponent:
    """k-sparse first PC by truncated power iteration.

    Each step multiplies by the covariance, keeps the k largest-|.|
    loadings and renormalizes. The default start is the non-truncated
    power-iteration eigenvector.
    """
    start = time.perf_counter()
    if params.k > cov.p:
        raise ValueError(f"k={params.k} exceeds p={cov.p}")
    if v0 is None:
        v = power_iteration(cov, tol=params.tol, max_iter=params.max_iter).vector
    else:
        v = np.asarray(v0, dtype=float)
        v = v / np.linalg.norm(v)

    converged = False
    iterations = 0
    for iterations in range(1, params.max_iter + 1):
        w = truncate_k(cov.values @ v, params.k)
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            raise ZeroAfterTruncation(
                f"truncation to k={params.k} produced a zero vector"
            )
        v_new = w / nrm
        change = min(np.linalg.norm(v_new - v), np.linalg.norm(v_new + v))
        v = v_new
        if change <= params.tol:
            converged = True
            break

    runtime = time.perf_counter() - start
    return make_component(
        v, cov, method="tpower", param=float(params.k),
        runtime=runtime, iterations=iterations, converged=converged,
    )


def rifle_first_pc(
    cov: SymMatrix,
    params: CardinalityParams,
    v0: np.ndarray | None = None,
) -> SparseComponent:
    """k-sparse first PC by truncated Rayleigh-quotient ascent.

    Iterates ``v <- normalize(truncate_k((I + eta/rho * cov) v, k))`` with
    rho the current Rayleigh quotient. The step size starts at ``0.01 * p``
    and is halved whenever a step would decrease the quotient. The start
    defaults to the plain power-iteration eigenvector (stage-one convex
    initialization is out of scope here).
    """
    start = time.perf_counter()
    p = cov.p
    if params.k > p:
        raise ValueError(f"k={params.k} exceeds p={p}")
    if v0 is None:
        v = power_iteration(cov, tol=params.tol, max_iter=params.max_iter).vector
    else:
        v = np.asarray(v0, dtype=float)
        v = v / np.linalg.norm(v)

    eta = 0.01 * p
    rho = float(v @ (cov.values @ v))
    converged = False
    iterations = 0
    for iterations in range(1, params.max_iter + 1):
        accepted = False
        for _ in range(60):
            step = v if rho == 0.0 else v + (eta / rho) * (cov.values @ v)
            w = truncate_k(step, params.k)
            nrm = np.linalg.norm(w)
            if nrm == 0.0:
                raise ZeroAfterTruncation(
                    f"truncation to k={params.k} produced a zero vector"
                )
            v_new = w / nrm
            rho_new = float(v_new @ (cov.values @ v_new))
            if rho_new >= rho - 1e-12:
                accepted = True
                break
            eta *= 0.5
        if not accepted:
            break  # step size exhausted at a fixed point of the ascent
        change = min(np.linalg.norm(v_new - v), np.linalg.norm(v_new + v))
        v, rho = v_new, rho_new
        if change <= params.tol:
            converged = True
            break

    runtime = time.perf_counter() - start
    return make_component(
        v, cov, method="rifle", param=float(params.k),
        runtime=runtime, iterations=iterations, converged=converged,
    )


def multi_pc(
    method: str,
    X: DataMatrix,
    params_per_component: list,
    tol: float | None = None,
    max_iter: int | None = None,
) -> list[SparseComponent]:
    """Multiple sparse PCs by rank-1 deflation with the given fitter.

    ``method`` is one of ``eespca``, ``spc``, ``tpower``, ``rifle``.
    ``params_per_component`` holds one params object per requested
    component (ignored entries may be None for eespca).
    """
    k = len(params_per_component)
    if not 1 <= k < min(X.n, X.p):
        raise ValueError(f"need 1 <= components < min(n, p) = {min(X.n, X.p)}, got {k}")
    total = frobenius_sq(X)
    components: list[SparseComponent] = []
    current = X
    for params in params_per_component:
        if frobenius_sq(current) <= RANK_EPS * max(total, 1.0):
            raise RankExhausted(
                f"residual is numerically zero after {len(components)} components"
            )
        comp = _fit_single(method, current, params, tol=tol, max_iter=max_iter)
        components.append(comp)
        current = rank1_residual(current, comp.loadings)
    return components


def _fit_single(method, X, params, tol=None, max_iter=None):
    if method == "eespca":
        return eespca_first_pc(
            sample_covariance(X),
            tol=tol if tol is not None else CARD_TOL,
            max_iter=max_iter if max_iter is not None else CARD_MAX_ITER,
        )
    if method == "spc":
        return spc_first_pc(X, params)
    if method == "tpower":
        return tpower_first_pc(sample_covariance(X), params)
    if method == "rifle":
        return rifle_first_pc(sample_covariance(X), params)
    raise ValueError(f"unknown method {method!r}")
