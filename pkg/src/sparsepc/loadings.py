"""Squared eigenvector loadings computed from eigenvalues.

For a symmetric matrix with distinct eigenvalues, the squared entries of
each normed eigenvector equal a ratio of products of eigenvalue
differences between the full matrix and its leave-one-variable-out
principal submatrices. This module provides:

* the exact identity (oracle scale, all submatrix eigenvalues), used as a
  testable reference;
* the cheap rank-1 approximation that keeps only the top submatrix
  eigenvalues, ``1 - lambda1(A_j) / lambda1(A)``;
* the per-variable ratio of approximate-to-true loadings that drives the
  sparse-PC truncation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSpectrum, NonPositiveEigenvalue
from .linalg import SymMatrix, exact_symmetric_eigen, principal_submatrix

# Below this squared-loading magnitude a ratio denominator is treated as
# zero: a (near-)zero sample loading is truncated downstream anyway, and
# the exact identity is itself undefined at a zero loading.
DENOMINATOR_EPS = 1e-12

# Eigenvalues closer than this make the identity's denominator degenerate.
SPECTRUM_GAP = 1e-8


@dataclass(frozen=True)
class SquaredLoadings:
    """Squared normed loadings of one eigenvector; ``kind`` records whether
    they came from the exact identity or the rank-1 approximation."""

    values: np.ndarray
    kind: str  # "exact" | "approximate"

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if self.kind not in ("exact", "approximate"):
            raise ValueError(f"kind must be 'exact' or 'approximate', got {self.kind!r}")
        if np.any(arr < 0.0) or np.any(arr > 1.0 + 1e-9):
            raise ValueError("squared loadings must lie in [0, 1]")
        if self.kind == "exact":
            total = float(arr.sum())
            if abs(total - 1.0) > 1e-8:
                raise ValueError(f"exact squared loadings must sum to 1, got {total!r}")
        object.__setattr__(self, "values", arr)


@dataclass(frozen=True)
class LoadingRatios:
    """Per-variable ratio of approximate-to-true loading magnitudes."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(arr)) or np.any(arr < 0.0):
            raise ValueError("loading ratios must be finite and non-negative")
        object.__setattr__(self, "values", arr)


def exact_identity_squared_loadings(A: SymMatrix, i: int) -> SquaredLoadings:
    """Squared entries of the i-th eigenvector from eigenvalue differences.

    Entry j is the product over k of ``lambda_i(A) - lambda_k(M_j)`` divided
    by the product over k != i of ``lambda_i(A) - lambda_k(A)``, with ``M_j``
    the principal submatrix omitting variable j. Requires the i-th
    eigenvalue to be separated from the rest of the spectrum; the ratio is
    undefined for repeated eigenvalues.
    """
    pairs = exact_symmetric_eigen(A)
    p = A.p
    if not 0 <= i < p:
        raise IndexError(f"eigenvector index {i} out of range for p={p}")
    lam = np.array([pair.value for pair in pairs])
    gaps = np.abs(lam[i] - np.delete(lam, i))
    if gaps.size and gaps.min() <= SPECTRUM_GAP:
        raise DegenerateSpectrum(
            f"eigenvalue {i} is within {SPECTRUM_GAP:g} of another eigenvalue; identity undefined"
        )
    denom = float(np.prod(lam[i] - np.delete(lam, i)))

    out = np.empty(p)
    for j in range(p):
        sub = exact_symmetric_eigen(principal_submatrix(A, j))
        sub_lam = np.array([pair.value for pair in sub])
        out[j] = float(np.prod(lam[i] - sub_lam)) / denom
    # interlacing makes the ratio non-negative; trim float noise
    np.clip(out, 0.0, 1.0, out=out)
    return SquaredLoadings(values=out, kind="exact")


def approx_squared_loadings(A: SymMatrix, lambda1: float, sub_lambda1: np.ndarray) -> SquaredLoadings:
    """Rank-1 approximation ``1 - lambda1(A_j) / lambda1(A)`` per variable.

    ``sub_lambda1[j]`` must be the top eigenvalue of the principal
    submatrix omitting variable j. Interlacing guarantees non-negativity
    analytically, so negative values are float noise and are clamped to 0.
    """
    if lambda1 <= 0.0:
        raise NonPositiveEigenvalue(f"leading eigenvalue must be positive, got {lambda1!r}")
    sub = np.asarray(sub_lambda1, dtype=float)
    if sub.shape != (A.p,):
        raise ValueError(f"expected {A.p} submatrix eigenvalues, got shape {sub.shape}")
    vals = 1.0 - sub / lambda1
    np.clip(vals, 0.0, 1.0, out=vals)
    return SquaredLoadings(values=vals, kind="approximate")


def loading_ratios(approx: SquaredLoadings, v1: np.ndarray) -> LoadingRatios:
    """Element-wise ``sqrt(approx_j / v1_j^2)``.

    Where ``v1_j^2`` falls below :data:`DENOMINATOR_EPS` the ratio is
    defined as 0; such entries are truncated downstream regardless. The
    ratios are not capped at 1: sampling noise can push the approximation
    marginally above the sample loading.
    """
    if approx.kind != "approximate":
        raise ValueError("loading_ratios expects approximate squared loadings")
    v1 = np.asarray(v1, dtype=float)
    nrm = np.linalg.norm(v1)
    if abs(nrm - 1.0) > 1e-8:
        raise ValueError(f"v1 must be unit norm, got ||v1|| = {nrm!r}")
    sq = v1 * v1
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.sqrt(approx.values / sq)
    r[sq < DENOMINATOR_EPS] = 0.0
    return LoadingRatios(values=r)
