"""Seeded greedy k-center and cosine representativeness vectors."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .constants import ZERO_VECTOR_EPS


@dataclass(frozen=True)
class CenterSet:
    centers: np.ndarray   # new centers, in selection order
    radius: float


def pairwise_distances(x) -> np.ndarray:
    """Euclidean distance matrix; symmetric with an exactly zero diagonal."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("expected an (n, d) array")
    if not np.all(np.isfinite(x)):
        raise ValueError("features must be finite")
    d = cdist(x, x)
    d = np.triu(d, 1)
    return d + d.T


def kcenter_greedy(dist, given, candidates, kappa: int) -> CenterSet:
    """Farthest-first traversal seeded with ``given`` as fixed centers.

    ``given`` and ``candidates`` index rows of ``dist``; only candidates can
    become new centers. Each step adds the candidate farthest from its
    nearest center, ties going to the lowest index. With no given centers
    the first pick is the lowest-indexed candidate.
    """
    dist = np.asarray(dist)
    given = np.unique(np.asarray(given, dtype=np.int64))
    cand = np.unique(np.asarray(candidates, dtype=np.int64))
    if cand.size == 0:
        raise ValueError("candidate set is empty")
    if kappa < 0 or kappa > cand.size:
        raise ValueError(f"kappa={kappa} must lie in 0..{cand.size}")
    if np.intersect1d(given, cand).size:
        raise ValueError("given centers and candidates overlap")

    if given.size:
        nearest = dist[np.ix_(given, cand)].min(axis=0)
    else:
        nearest = np.full(cand.size, np.inf)
    chosen = np.empty(kappa, dtype=np.int64)
    for t in range(kappa):
        pos = int(np.argmax(nearest))   # first maximum = lowest index
        chosen[t] = cand[pos]
        np.minimum(nearest, dist[cand[pos], cand], out=nearest)
    # given points sit at distance zero from themselves
    radius = float(nearest.max()) if (given.size or kappa) else math.inf
    return CenterSet(chosen, radius)


def kappa_schedule(n_unlabeled: int) -> int:
    """Number of new centers: ``round(sqrt(n/2))`` (halves rounded up), at least 1."""
    if n_unlabeled < 1:
        raise ValueError("need at least one unlabeled point")
    return max(1, int(math.floor(math.sqrt(n_unlabeled / 2.0) + 0.5)))


def _unit_rows(x):
    """Rows scaled to unit length; an all-zero row becomes ``(eps, 0, ...)``."""
    x = np.array(x, dtype=np.float64, copy=True)
    zero = ~np.any(x != 0.0, axis=1)
    x[zero, 0] += ZERO_VECTOR_EPS
    # divide by the largest entry first so subnormal rows do not underflow
    x /= np.max(np.abs(x), axis=1, keepdims=True)
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def rep_vectors(x_unlabeled, x_centers) -> np.ndarray:
    """Cosine similarity of every unlabeled point to every center, ``(N, kappa)``."""
    u = np.atleast_2d(x_unlabeled)
    c = np.atleast_2d(x_centers)
    if u.shape[1] != c.shape[1]:
        raise ValueError("points and centers differ in dimension")
    return np.clip(_unit_rows(u) @ _unit_rows(c).T, -1.0, 1.0)
