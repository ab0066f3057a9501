"""Soft-margin SVM dual solved by sequential minimal optimization.

Working-set selection uses the maximal violating index ``i`` paired with
the second-order choice of ``j`` (Fan, Chen and Lin, JMLR 2005), the same
scheme LIBSVM uses. The kernel matrix is precomputed; training sets here
are a few hundred points at most.
"""
from __future__ import annotations

import numpy as np
from numba import njit

_TAU = 1e-12


@njit(cache=True)
def smo_solve(kmat, y, c, tol, max_iter):
    """Solve ``min 1/2 a^T Q a - sum(a)``, ``0 <= a <= c``, ``y^T a = 0``.

    ``Q_ij = y_i y_j K_ij`` and ``y`` holds +-1. Returns ``(alpha, rho,
    converged)``; the decision function is ``sum_i alpha_i y_i K(x_i, x) - rho``.
    """
    n = y.shape[0]
    alpha = np.zeros(n)
    grad = -np.ones(n)
    converged = False
    for _ in range(max_iter):
        gmax = -np.inf
        i = -1
        for t in range(n):
            if (y[t] > 0 and alpha[t] < c) or (y[t] < 0 and alpha[t] > 0):
                v = -y[t] * grad[t]
                if v >= gmax:
                    gmax = v
                    i = t
        gmax2 = -np.inf
        j = -1
        obj_min = np.inf
        if i >= 0:
            kii = kmat[i, i]
            for t in range(n):
                if (y[t] > 0 and alpha[t] > 0) or (y[t] < 0 and alpha[t] < c):
                    ygt = y[t] * grad[t]
                    if ygt >= gmax2:
                        gmax2 = ygt
                    b = gmax + ygt
                    if b > 0:
                        a = kii + kmat[t, t] - 2.0 * kmat[i, t]
                        if a <= 0:
                            a = _TAU
                        obj = -(b * b) / a
                        if obj <= obj_min:
                            obj_min = obj
                            j = t
        if i < 0 or j < 0 or gmax + gmax2 < tol:
            converged = True
            break

        qij = y[i] * y[j] * kmat[i, j]
        old_ai = alpha[i]
        old_aj = alpha[j]
        if y[i] != y[j]:
            quad = kmat[i, i] + kmat[j, j] + 2.0 * qij
            if quad <= 0:
                quad = _TAU
            delta = (-grad[i] - grad[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = -diff
            if diff > 0:
                if alpha[i] > c:
                    alpha[i] = c
                    alpha[j] = c - diff
            else:
                if alpha[j] > c:
                    alpha[j] = c
                    alpha[i] = c + diff
        else:
            quad = kmat[i, i] + kmat[j, j] - 2.0 * qij
            if quad <= 0:
                quad = _TAU
            delta = (grad[i] - grad[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > c:
                if alpha[i] > c:
                    alpha[i] = c
                    alpha[j] = total - c
            else:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = total
            if total > c:
                if alpha[j] > c:
                    alpha[j] = c
                    alpha[i] = total - c
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = total
        dai = alpha[i] - old_ai
        daj = alpha[j] - old_aj
        for t in range(n):
            grad[t] += y[t] * (y[i] * kmat[i, t] * dai + y[j] * kmat[j, t] * daj)

    # offset from free vectors, or the midpoint of the feasible interval
    ub = np.inf
    lb = -np.inf
    nfree = 0
    sfree = 0.0
    for t in range(n):
        yg = y[t] * grad[t]
        if alpha[t] >= c:
            if y[t] < 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        elif alpha[t] <= 0:
            if y[t] > 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        else:
            nfree += 1
            sfree += yg
    if nfree > 0:
        rho = sfree / nfree
    else:
        rho = 0.5 * (ub + lb)
    return alpha, rho, converged


def kernel_matrix(x, z, kind: str, gamma: float = 1.0, degree: int = 3, coef0: float = 1.0) -> np.ndarray:
    """Gram matrix between rows of ``x`` and rows of ``z``."""
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if kind == "linear":
        return x @ z.T
    if kind == "rbf":
        sq = (x * x).sum(1)[:, None] + (z * z).sum(1)[None, :] - 2.0 * (x @ z.T)
        return np.exp(-gamma * np.maximum(sq, 0.0))
    if kind == "poly":
        return (gamma * (x @ z.T) + coef0) ** degree
    raise ValueError(f"unknown kernel {kind!r}")
