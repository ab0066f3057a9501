"""L-ensembles and exact sampling from fixed-size determinantal point processes.

Sampling follows the two-phase scheme for k-DPPs: phase 1 picks ``k``
eigenvectors using elementary symmetric polynomials of the spectrum, phase 2
samples one item per chosen eigenvector from the resulting elementary DPP.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations

import numpy as np
from numba import njit

from . import constants
from .linalg import LazySymmetricEig, clamp_psd_spectrum, det_psd, sym_eig


class RankDeficientWarning(UserWarning):
    """Fewer positive eigenvalues than requested items; the rest were drawn uniformly."""


@dataclass(frozen=True)
class EspTable:
    """``e[l, n]``: elementary symmetric polynomial of degree ``l`` in the first
    ``n`` eigenvalues. When ``log`` is set the table holds natural logs."""

    e: np.ndarray
    log: bool = False

    def value(self, l: int, n: int) -> float:
        return float(math.exp(self.e[l, n])) if self.log else float(self.e[l, n])

    def log_value(self, l: int, n: int) -> float:
        if self.log:
            return float(self.e[l, n])
        v = self.e[l, n]
        return math.log(v) if v > 0 else -math.inf


class LEnsemble:
    """``L = diag(mu) S S^T diag(mu)`` with a lazily computed spectrum."""

    def __init__(self, matrix, mu=None):
        m = np.asarray(matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("L must be square")
        if not np.all(np.isfinite(m)):
            raise ValueError("L has non-finite entries")
        scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
        if np.max(np.abs(m - m.T), initial=0.0) > constants.SYMMETRY_TOL * scale:
            raise ValueError("L is not symmetric")
        self.matrix = 0.5 * (m + m.T)
        self.matrix.setflags(write=False)
        self.mu = None if mu is None else np.asarray(mu, dtype=np.float64)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def _eig(self) -> LazySymmetricEig:
        return LazySymmetricEig(self.matrix)

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """Ascending, with round-off negatives and tiny values clamped to zero."""
        return clamp_psd_spectrum(self._eig.eigenvalues)

    def eigenvectors(self, indices) -> np.ndarray:
        return self._eig.vectors(indices)


def build_L(mu, s) -> LEnsemble:
    """``diag(mu) S S^T diag(mu)``; PSD for any square ``S``."""
    mu = np.asarray(mu, dtype=np.float64).reshape(-1)
    s = np.asarray(getattr(s, "s", s), dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] != mu.size:
        raise ValueError(f"mu has length {mu.size} but S has shape {s.shape}")
    if np.any(mu < 0):
        raise ValueError("quality scores must be nonnegative")
    b = mu[:, None] * s
    lmat = b @ b.T
    lmat = 0.5 * (lmat + lmat.T)
    return LEnsemble(lmat, mu)


@njit(cache=True)
def _esp_table(lam, k):
    n = lam.shape[0]
    e = np.zeros((k + 1, n + 1))
    e[0, :] = 1.0
    for m in range(1, n + 1):
        lm = lam[m - 1]
        top = min(k, m)
        for l in range(1, top + 1):
            e[l, m] = e[l, m - 1] + lm * e[l - 1, m - 1]
    return e


@njit(cache=True)
def _log_esp_table(lam, k):
    n = lam.shape[0]
    e = np.full((k + 1, n + 1), -np.inf)
    e[0, :] = 0.0
    for m in range(1, n + 1):
        ll = math.log(lam[m - 1]) if lam[m - 1] > 0 else -np.inf
        top = min(k, m)
        for l in range(1, top + 1):
            x = e[l, m - 1]
            y = ll + e[l - 1, m - 1]
            hi = max(x, y)
            if hi == -np.inf:
                e[l, m] = -np.inf
            else:
                e[l, m] = hi + math.log(math.exp(x - hi) + math.exp(y - hi))
    return e


def _check_lambdas(lambdas, k):
    lam = np.asarray(lambdas, dtype=np.float64).reshape(-1)
    if k < 0:
        raise ValueError("k must be nonnegative")
    if k > lam.size:
        raise ValueError(f"k={k} exceeds the number of eigenvalues {lam.size}")
    if np.any(lam < 0) or not np.all(np.isfinite(lam)):
        raise ValueError("eigenvalues must be finite and nonnegative")
    return np.ascontiguousarray(lam)


def esp(lambdas, k: int) -> EspTable:
    """Table of elementary symmetric polynomials up to degree ``k``.

    Falls back to a log-space table if any entry exceeds ``ESP_LOG_THRESHOLD``.
    """
    lam = _check_lambdas(lambdas, k)
    e = _esp_table(lam, int(k))
    if not np.all(np.isfinite(e)) or e.max(initial=0.0) > constants.ESP_LOG_THRESHOLD:
        return EspTable(_log_esp_table(lam, int(k)), log=True)
    return EspTable(e)


def log_esp(lambdas, k: int) -> EspTable:
    lam = _check_lambdas(lambdas, k)
    return EspTable(_log_esp_table(lam, int(k)), log=True)


@njit(cache=True)
def _select_eigen(lam, e, k, u, log_space):
    """Phase 1: walk n = N..1 and keep eigenvalue n with probability
    ``lam_n e[l-1, n-1] / e[l, n]``."""
    n = lam.shape[0]
    out = np.empty(k, dtype=np.int64)
    rem = k
    t = 0
    for m in range(n, 0, -1):
        if rem == 0:
            break
        if m == rem:
            p = 1.0
        elif log_space:
            if lam[m - 1] <= 0:
                p = 0.0
            else:
                p = math.exp(math.log(lam[m - 1]) + e[rem - 1, m - 1] - e[rem, m])
        else:
            p = lam[m - 1] * e[rem - 1, m - 1] / e[rem, m]
        if u[t] < p:
            rem -= 1
            out[rem] = m - 1
        t += 1
    return out


@njit(cache=True)
def _elementary_sample(v, u, tol):
    """Phase 2: draw one item per column of the orthonormal basis ``v``.

    Item ``i`` is picked with probability ``sum_j v_ij^2 / |V|``; the column
    with the largest ``|v_ij|`` is then used to zero row ``i`` of the others,
    it is dropped, and the rest are re-orthonormalized.
    """
    n, k = v.shape
    v = v.copy()
    out = np.empty(k, dtype=np.int64)
    cols = k
    for t in range(k):
        # cumulative sampling over the squared row norms
        total = 0.0
        for i in range(n):
            for j in range(cols):
                total += v[i, j] * v[i, j]
        target = u[t] * total
        acc = 0.0
        item = n - 1
        for i in range(n):
            r = 0.0
            for j in range(cols):
                r += v[i, j] * v[i, j]
            acc += r
            if acc > target and r > 0.0:
                item = i
                break
        out[t] = item
        if cols == 1:
            break
        piv = 0
        best = -1.0
        for j in range(cols):
            a = abs(v[item, j])
            if a > best:
                best = a
                piv = j
        pv = v[item, piv]
        for j in range(cols):
            if j == piv:
                continue
            f = v[item, j] / pv
            for i in range(n):
                v[i, j] -= f * v[i, piv]
        # drop the pivot column by moving the last one into its slot
        last = cols - 1
        if piv != last:
            for i in range(n):
                v[i, piv] = v[i, last]
        cols -= 1
        # two-pass modified Gram-Schmidt on the remaining columns
        for j in range(cols):
            for _ in range(2):
                for q in range(j):
                    d = 0.0
                    for i in range(n):
                        d += v[i, q] * v[i, j]
                    for i in range(n):
                        v[i, j] -= d * v[i, q]
            nrm = 0.0
            for i in range(n):
                nrm += v[i, j] * v[i, j]
            nrm = math.sqrt(nrm)
            if nrm <= tol:
                return out[:t + 1]
            for i in range(n):
                v[i, j] /= nrm
    return out


def _spectrum(ens: LEnsemble):
    lam = ens.eigenvalues
    lmax = lam.max(initial=0.0)
    # marginals depend only on ratios of eigenvalues
    scaled = lam / lmax if lmax > 0 else lam
    return lam, np.ascontiguousarray(scaled)


def _phase1_inputs(scaled, k):
    table = esp(scaled, k)
    return table.e, table.log


def _as_ensemble(l) -> LEnsemble:
    return l if isinstance(l, LEnsemble) else LEnsemble(l)


def sample_kdpp(l, k: int, rng) -> np.ndarray:
    """Draw a size-``k`` subset with probability proportional to ``det(L_T)``.

    Returns sorted item indices. If fewer than ``k`` eigenvalues are
    positive, all ``r`` positive directions are sampled and the remaining
    ``k - r`` items are drawn uniformly from the other items, with a
    :class:`RankDeficientWarning`.
    """
    ens = _as_ensemble(l)
    n = ens.n
    if k <= 0:
        raise ValueError("k must be positive")
    if k > n:
        raise ValueError(f"k={k} exceeds the ground set size {n}")
    lam, scaled = _spectrum(ens)
    rank = int(np.count_nonzero(lam > 0))
    u = rng.random(n + k)
    if rank >= k:
        e, log_space = _phase1_inputs(scaled, k)
        picked = _select_eigen(scaled, e, k, u[:n], log_space)
        items = _elementary_sample(ens.eigenvectors(picked), u[n:], constants.GS_TOL)
        if items.size != k:
            raise FloatingPointError("eigenvector basis lost rank during sampling")
        return np.sort(items)

    warnings.warn(f"L has rank {rank} < k={k}; filling {k - rank} items uniformly",
                  RankDeficientWarning, stacklevel=2)
    chosen = np.zeros(0, dtype=np.int64)
    if rank:
        picked = np.arange(n - rank, n)   # eigenvalues ascending; positives are last
        chosen = _elementary_sample(ens.eigenvectors(picked), u[n:n + rank], constants.GS_TOL)
    rest = np.setdiff1d(np.arange(n), chosen)
    fill = rng.choice(rest, size=k - chosen.size, replace=False)
    return np.sort(np.concatenate([chosen, fill]))


@njit(cache=True)
def _draw_many(scaled, vecs, e, k, u, log_space, tol):
    draws = u.shape[0]
    n = scaled.shape[0]
    out = np.empty((draws, k), dtype=np.int64)
    for d in range(draws):
        picked = _select_eigen(scaled, e, k, u[d, :n], log_space)
        v = np.empty((n, k))
        for j in range(k):
            for i in range(n):
                v[i, j] = vecs[i, picked[j]]
        items = _elementary_sample(v, u[d, n:], tol)
        if items.shape[0] != k:
            for j in range(k):
                out[d, j] = -1
        else:
            out[d] = np.sort(items)
    return out


def sample_kdpp_many(l, k: int, draws: int, rng) -> np.ndarray:
    """``draws`` independent k-DPP samples as a sorted ``(draws, k)`` array.

    Uses the same two phases as :func:`sample_kdpp` with the full
    eigenbasis computed once; intended for small ground sets.
    """
    ens = _as_ensemble(l)
    n = ens.n
    if not 0 < k <= n:
        raise ValueError(f"k must lie in 1..{n}")
    lam, scaled = _spectrum(ens)
    if np.count_nonzero(lam > 0) < k:
        raise ValueError("L has fewer than k positive eigenvalues")
    vecs = np.ascontiguousarray(ens.eigenvectors(np.arange(n)))
    e, log_space = _phase1_inputs(scaled, k)
    u = rng.random((draws, n + k))
    out = _draw_many(scaled, vecs, e, k, u, log_space, constants.GS_TOL)
    if np.any(out < 0):
        raise FloatingPointError("eigenvector basis lost rank during sampling")
    return out


def exact_subset_prob(l, subset, k: int) -> float:
    """``det(L_T) / e_k(lambda)`` for a subset ``T`` of size ``k``."""
    ens = _as_ensemble(l)
    subset = np.asarray(subset, dtype=np.int64).reshape(-1)
    if subset.size != k:
        raise ValueError(f"subset has {subset.size} items, expected k={k}")
    if np.unique(subset).size != k:
        raise ValueError("subset has repeated items")
    lam = clamp_psd_spectrum(sym_eig(ens.matrix, vectors=False).eigenvalues)
    table = esp(lam, k)
    norm = table.log_value(k, ens.n)
    det = det_psd(ens.matrix[np.ix_(subset, subset)])
    if det <= 0 or norm == -math.inf:
        return 0.0
    return float(math.exp(math.log(det) - norm))


def subset_distribution(l, k: int) -> dict:
    """Exact probability of every size-``k`` subset (small ground sets only)."""
    ens = _as_ensemble(l)
    if ens.n > 16:
        raise ValueError("enumeration is limited to ground sets of at most 16 items")
    return {t: exact_subset_prob(ens, t, k) for t in combinations(range(ens.n), k)}
