"""GLAD-style EM over a committee vote matrix, and the entropy-based
informativeness score derived from it.

Each instance ``i`` has a difficulty ``alpha_i >= 0`` (larger is easier), each
classifier ``j`` an ability ``beta_j >= 0``, and classifier ``j`` votes the
true class with probability ``sigma(alpha_i * beta_j)``; a wrong vote is
spread evenly over the other ``K - 1`` classes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .constants import SIGMA_CAP, SIMPLEX_TOL

_ARMIJO = 1e-4
_MSTEP_ITERS = 25
_MSTEP_RTOL = 1e-8


@dataclass(frozen=True)
class GladFit:
    alpha: np.ndarray          # (N,)
    beta: np.ndarray           # (C,)
    confidence: np.ndarray     # (N, C), sigma(alpha_i beta_j)
    posterior: np.ndarray      # (N, K)
    q_trace: np.ndarray        # Q after each M-step
    q_start: np.ndarray        # Q right after each E-step, before the M-step
    loglik_trace: np.ndarray   # marginal log-likelihood after each E-step
    converged: bool
    n_iter: int


def _sigmoid(x):
    return np.minimum(0.5 * (1.0 + np.tanh(0.5 * x)), SIGMA_CAP)


# sigma(x) reaches SIGMA_CAP at x = _X_CAP; beyond it the capped sigma is flat
_X_CAP = math.log(SIGMA_CAP / (1.0 - SIGMA_CAP))


@njit(cache=True)
def _sig_terms(x):
    """Capped sigma(x), log sigma(x) and log(1 - sigma(x)) for x >= 0."""
    xc = x if x < _X_CAP else _X_CAP
    e = math.exp(-xc)
    l1p = math.log1p(e)
    return 1.0 / (1.0 + e), -l1p, -xc - l1p


def correctness_prob(alpha, beta):
    """Probability that a classifier of ability ``beta`` labels an instance
    of difficulty ``alpha`` correctly."""
    a = np.asarray(alpha, dtype=np.float64)
    b = np.asarray(beta, dtype=np.float64)
    if np.any(a < 0) or np.any(b < 0):
        raise ValueError("alpha and beta must be nonnegative")
    out = _sigmoid(a * b)
    return float(out) if out.ndim == 0 else out


@njit(cache=True)
def _e_step(votes, mult, k, a, b, post):
    """Fill ``post`` with the class posterior; return the marginal log-likelihood."""
    n, c = votes.shape
    log_km1 = math.log(k - 1)
    logp = np.empty(k)
    ll = 0.0
    for i in range(n):
        base = 0.0
        for z in range(k):
            logp[z] = 0.0
        ea = math.exp(a[i])
        for j in range(c):
            _, ls, l1s = _sig_terms(ea * math.exp(b[j]))
            lw = l1s - log_km1
            base += lw
            logp[votes[i, j]] += ls - lw
        m = -np.inf
        for z in range(k):
            logp[z] += base - math.log(k)   # uniform class prior
            if logp[z] > m:
                m = logp[z]
        tot = 0.0
        for z in range(k):
            post[i, z] = math.exp(logp[z] - m)
            tot += post[i, z]
        for z in range(k):
            post[i, z] /= tot
        ll += mult[i] * (m + math.log(tot))
    return ll


@njit(cache=True)
def _q_value(w, mult, a, b, k):
    n, c = w.shape
    log_km1 = math.log(k - 1)
    q = 0.0
    eb = np.exp(b)
    for i in range(n):
        ea = math.exp(a[i])
        qi = -math.log(k)   # expected log prior, constant under a uniform prior
        for j in range(c):
            _, ls, l1s = _sig_terms(ea * eb[j])
            qi += w[i, j] * ls + (1.0 - w[i, j]) * (l1s - log_km1)
        q += mult[i] * qi
    return q


@njit(cache=True)
def _m_step(w, mult, a, b, k, iters):
    """Scaled gradient ascent on Q in log-parameters with Armijo backtracking.

    Each coordinate's step is divided by the matching diagonal entry of the
    negative Hessian, plus the gradient-term magnitude to keep it positive.
    Row ``i`` stands for ``mult[i]`` identical instances: it shares their
    difficulty and carries their weight in Q and in the ability gradient.
    """
    n, c = w.shape
    q = _q_value(w, mult, a, b, k)
    ga = np.empty(n)
    gb = np.empty(c)
    ca = np.empty(n)
    cb = np.empty(c)
    for _ in range(iters):
        ga[:] = 0.0
        gb[:] = 0.0
        ca[:] = 1e-8
        cb[:] = 1e-8
        eb = np.exp(b)
        for i in range(n):
            ea = math.exp(a[i])
            for j in range(c):
                x = ea * eb[j]
                s, _, _ = _sig_terms(x)
                r = (w[i, j] - s) * x
                cv = s * (1.0 - s) * x * x + abs(r)
                ga[i] += r
                ca[i] += cv
                gb[j] += mult[i] * r
                cb[j] += mult[i] * cv
        da = ga / ca
        db = gb / cb
        slope = 0.0
        for i in range(n):
            slope += mult[i] * ga[i] * da[i]
        for j in range(c):
            slope += gb[j] * db[j]
        if not slope > 1e-14 * max(1.0, abs(q)):
            break
        eta = 1.0
        accepted = False
        while eta > 1e-10:
            a_new = a + eta * da
            b_new = b + eta * db
            q_new = _q_value(w, mult, a_new, b_new, k)
            if q_new >= q + _ARMIJO * eta * slope:
                accepted = True
                break
            eta *= 0.5
        if not accepted:
            break
        gain = q_new - q
        a = a_new
        b = b_new
        q = q_new
        if gain < _MSTEP_RTOL * max(1.0, abs(q)):
            break
    return a, b, q


@njit(cache=True)
def _em(votes, mult, k, max_iter, tol, mstep_iters):
    n, c = votes.shape
    a = np.zeros(n)
    b = np.zeros(c)
    post = np.empty((n, k))
    w = np.empty((n, c))
    q_start = np.empty(max_iter)
    q_trace = np.empty(max_iter)
    ll_trace = np.empty(max_iter)
    converged = False
    it = 0
    while it < max_iter:
        ll_trace[it] = _e_step(votes, mult, k, a, b, post)
        for i in range(n):
            for j in range(c):
                w[i, j] = post[i, votes[i, j]]
        q_start[it] = _q_value(w, mult, a, b, k)
        a_new, b_new, q = _m_step(w, mult, a, b, k, mstep_iters)
        if it > 0 and q < q_trace[it - 1]:
            # the refreshed posterior lowered the attainable Q (its entropy
            # grew); keep the previous iterate and stop
            converged = True
            break
        a, b = a_new, b_new
        q_trace[it] = q
        it += 1
        if it > 1 and q_trace[it - 1] - q_trace[it - 2] < tol * max(1.0, abs(q_trace[it - 2])):
            converged = True
            break
    _e_step(votes, mult, k, a, b, post)
    return (a, b, post, q_start[:it].copy(), q_trace[:it].copy(), ll_trace[:it].copy(),
            converged, it)


def em_fit(votes, k: int, max_iter: int = 100, tol: float = 1e-5) -> GladFit:
    """Fit difficulties and abilities to a vote matrix by EM.

    Parameters are optimized as ``log alpha`` and ``log beta`` starting from
    zero (``alpha = beta = 1``). Iteration stops once Q improves by less than
    ``tol * max(1, |Q|)`` or after ``max_iter`` rounds, in which case the fit
    is returned with ``converged=False``.

    Q is not guaranteed to grow from one iteration to the next (only the
    marginal likelihood is); an iterate whose Q falls below its predecessor's
    is discarded and ends the run, so ``q_trace`` is non-decreasing.
    """
    v = np.asarray(votes)
    if v.ndim != 2:
        raise ValueError("vote matrix must be 2-D")
    n, c = v.shape
    if n < 1 or c < 2:
        raise ValueError("need at least one instance and two classifiers")
    if k < 2:
        raise ValueError("need K >= 2")
    if max_iter < 1:
        raise ValueError("max_iter must be positive")
    v = np.ascontiguousarray(v, dtype=np.int64)
    if v.min() < 0 or v.max() >= k:
        raise ValueError("vote outside 0..K-1")
    # identical vote rows keep identical difficulties throughout, so EM runs
    # on the distinct rows weighted by their multiplicity
    patterns, inverse, counts = np.unique(v, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.reshape(-1)
    a, b, post, q_start, q_trace, ll_trace, converged, it = _em(
        np.ascontiguousarray(patterns), counts.astype(np.float64), int(k), int(max_iter),
        float(tol), _MSTEP_ITERS)
    alpha = np.exp(a)[inverse]
    beta = np.exp(b)
    conf = _sigmoid(alpha[:, None] * beta[None, :])
    return GladFit(alpha, beta, conf, post[inverse], q_trace, q_start, ll_trace,
                   bool(converged), int(it))


def class_probabilities(fit: GladFit, votes, k: int) -> np.ndarray:
    """Confidence-weighted class distribution per instance.

    A vote for class ``k`` contributes ``c_ij`` to ``k`` and ``(1 - c_ij)/(K-1)``
    to every other class; contributions are averaged over classifiers.
    """
    return _class_probabilities(np.asarray(fit.confidence), votes, k)


def _class_probabilities(conf, votes, k):
    v = np.asarray(votes, dtype=np.int64)
    if v.shape != conf.shape:
        raise ValueError("vote matrix and confidence matrix shapes differ")
    n, c = v.shape
    other = (1.0 - conf) / (k - 1)
    p = np.tile(other.sum(axis=1, keepdims=True), (1, k))
    rows = np.repeat(np.arange(n), c)
    np.add.at(p, (rows, v.ravel()), (conf - other).ravel())
    return p / c


def informativeness(p, k: int) -> np.ndarray:
    """Entropy of each row of ``p`` in base ``K``; values lie in ``[0, 1]``."""
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 2 or p.shape[1] != k:
        raise ValueError(f"expected an (N, {k}) probability matrix")
    if np.any(p < -SIMPLEX_TOL) or np.any(np.abs(p.sum(axis=1) - 1.0) > SIMPLEX_TOL):
        raise ValueError("rows must lie on the probability simplex")
    p = np.clip(p, 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log(p), 0.0)
    mu = -terms.sum(axis=1) / math.log(k)
    return np.clip(mu, 0.0, 1.0)
