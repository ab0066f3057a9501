"""Similarity matrices over representativeness vectors."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .constants import SIGMA_FLOOR

KERNEL_KINDS = ("laplacian", "gaussian", "sigmoid", "poly", "heat")


@dataclass(frozen=True)
class SimilarityMatrix:
    s: np.ndarray
    kind: str
    params: dict = field(default_factory=dict)


def mean_pairwise_distance(r) -> float:
    """Mean Euclidean distance over unordered pairs of rows, floored."""
    r = np.asarray(r, dtype=np.float64)
    if r.shape[0] < 2:
        return SIGMA_FLOOR
    return max(float(pdist(r).mean()), SIGMA_FLOOR)


def _from_condensed(vals, n, diag):
    s = squareform(vals, checks=False)
    np.fill_diagonal(s, diag)
    return s


def kernel_matrix(r, kind: str, gamma: float = 1.0, sigma: float = 1.0,
                  c0: float = 1.0, d0: float = 3) -> np.ndarray:
    """Kernel matrix with explicit parameters.

    Distance kernels are evaluated once per unordered pair, so the result
    is exactly symmetric.
    """
    r = np.asarray(r, dtype=np.float64)
    n = r.shape[0]
    if kind == "laplacian":
        return _from_condensed(np.exp(-gamma * pdist(r, "cityblock")), n, 1.0)
    if kind in ("gaussian", "heat"):
        d2 = pdist(r, "sqeuclidean")
        denom = 2.0 * sigma * sigma if kind == "gaussian" else sigma * sigma
        return _from_condensed(np.exp(-d2 / denom), n, 1.0)
    if kind in ("sigmoid", "poly"):
        g = r @ r.T
        g = np.triu(g) + np.triu(g, 1).T
        z = gamma * g + c0
        return np.tanh(z) if kind == "sigmoid" else z ** d0
    raise ValueError(f"unknown kernel {kind!r}; choose from {KERNEL_KINDS}")


def similarity_matrix(r, kind: str = "laplacian", kappa: int | None = None,
                      c0: float = 1.0, d0: float = 3) -> SimilarityMatrix:
    """Similarity over the rows of ``r`` with ``gamma = 1/kappa`` and
    ``sigma`` the mean pairwise distance between rows.

    ``kappa`` defaults to the number of columns of ``r``.
    """
    r = np.atleast_2d(np.asarray(r, dtype=np.float64))
    if r.shape[0] < 1:
        raise ValueError("need at least one row")
    if kappa is None:
        kappa = r.shape[1]
    if kappa < 1:
        raise ValueError("kappa must be at least 1")
    if kind not in KERNEL_KINDS:
        raise ValueError(f"unknown kernel {kind!r}; choose from {KERNEL_KINDS}")
    gamma = 1.0 / kappa
    params = {"gamma": gamma}
    sigma = 1.0
    if kind in ("gaussian", "heat"):
        sigma = mean_pairwise_distance(r)
        params["sigma"] = sigma
    if kind in ("sigmoid", "poly"):
        params["c0"] = c0
        if kind == "poly":
            params["d0"] = d0
    s = kernel_matrix(r, kind, gamma, sigma, c0, d0)
    return SimilarityMatrix(s, kind, params)
