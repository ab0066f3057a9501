"""Dense symmetric linear algebra used by the sampler, committee and k-center code.

The eigensolver is the classic two-stage scheme: a Householder reduction to
tridiagonal form followed by the implicit-shift QL iteration on the
tridiagonal matrix. Both stages are compiled with numba; no randomized
pivoting is involved, so results are bit-for-bit reproducible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from . import constants


@dataclass(frozen=True)
class SymmetricEig:
    """Eigenvalues in ascending order and matching orthonormal eigenvectors (columns)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


@njit(cache=True)
def _householder_tridiagonal(a):
    """Reduce symmetric ``a`` (overwritten) to tridiagonal form.

    Returns the diagonal, the sub-diagonal (``e[i]`` couples ``i`` and
    ``i + 1``; ``e[n - 1] = 0``) and the reflectors as rows of ``vs`` with
    their scale factors ``hs``. Reflector ``k`` is ``I - v v^T / h`` acting
    on indices ``k + 1 .. n - 1``; ``h == 0`` marks an identity step.
    """
    n = a.shape[0]
    d = np.zeros(n)
    e = np.zeros(n)
    vs = np.zeros((n, n))
    hs = np.zeros(n)
    p = np.zeros(n)
    for k in range(n - 2):
        x0 = a[k + 1, k]
        sq = 0.0
        for i in range(k + 1, n):
            sq += a[i, k] * a[i, k]
        if sq <= 1e-300:
            e[k] = x0
            continue
        alpha = -math.copysign(math.sqrt(sq), x0)
        for i in range(k + 1, n):
            vs[k, i] = a[i, k]
        vs[k, k + 1] -= alpha
        h = sq - alpha * x0
        hs[k] = h
        # p = A22 v / h using the lower triangle only (row-contiguous access)
        for i in range(k + 1, n):
            p[i] = 0.0
        for i in range(k + 1, n):
            vi = vs[k, i]
            acc = a[i, i] * vi
            for j in range(k + 1, i):
                aij = a[i, j]
                acc += aij * vs[k, j]
                p[j] += aij * vi
            p[i] += acc
        for i in range(k + 1, n):
            p[i] /= h
        kk = 0.0
        for i in range(k + 1, n):
            kk += vs[k, i] * p[i]
        kk /= 2.0 * h
        for i in range(k + 1, n):
            p[i] -= kk * vs[k, i]
        # lower triangle of A22 <- A22 - v q^T - q v^T
        for i in range(k + 1, n):
            vi = vs[k, i]
            pi = p[i]
            for j in range(k + 1, i + 1):
                a[i, j] -= vi * p[j] + pi * vs[k, j]
        e[k] = alpha
    for i in range(n):
        d[i] = a[i, i]
    if n >= 2:
        e[n - 2] = a[n - 1, n - 2]
    e[n - 1] = 0.0
    return d, e, vs, hs


@njit(cache=True)
def _accumulate_transposed(vs, hs):
    """Return ``Q^T`` where ``Q = H_0 H_1 ... H_{n-3}``."""
    n = vs.shape[0]
    q = np.eye(n)
    w = np.zeros(n)
    # Q = H_0 (H_1 (... H_{n-3})): apply from the innermost reflector outward
    for k in range(n - 3, -1, -1):
        h = hs[k]
        if h == 0.0:
            continue
        for j in range(k + 1, n):
            w[j] = 0.0
        for i in range(k + 1, n):
            vi = vs[k, i]
            if vi != 0.0:
                for j in range(k + 1, n):
                    w[j] += vi * q[i, j]
        for i in range(k + 1, n):
            f = vs[k, i] / h
            if f != 0.0:
                for j in range(k + 1, n):
                    q[i, j] -= f * w[j]
    return q.T.copy()


@njit(cache=True)
def _ql_implicit(d, e, w, with_vectors, max_sweeps):
    """Implicit-shift QL on the tridiagonal (d, e); rotations applied to rows of ``w``.

    Returns False if some eigenvalue failed to converge within ``max_sweeps``.
    """
    n = d.shape[0]
    eps = np.finfo(np.float64).eps
    # off-diagonals below eps * ||T|| are negligible: the Householder stage
    # already carries error of that size, and a purely relative test can
    # stall on clusters of near-zero eigenvalues
    tnorm = 0.0
    for i in range(n):
        tnorm = max(tnorm, abs(d[i]) + abs(e[i]))
    floor = max(eps * tnorm, 1e-300)
    for l in range(n):
        sweeps = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= eps * dd or abs(e[m]) <= floor:
                    break
                m += 1
            if m == l:
                break
            sweeps += 1
            if sweeps > max_sweeps:
                return False
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = 1.0
            c = 1.0
            p = 0.0
            i = m - 1
            deflated = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    deflated = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                if with_vectors:
                    for k in range(w.shape[1]):
                        f2 = w[i + 1, k]
                        w[i + 1, k] = s * w[i, k] + c * f2
                        w[i, k] = c * w[i, k] - s * f2
                i -= 1
            if deflated and i >= l:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return True


@njit(cache=True)
def _ql_implicit_logged(d, e, max_sweeps, cap):
    """Eigenvalue-only implicit QL that records every plane rotation.

    Rotation ``t`` acts on coordinates ``(rot_i[t], rot_i[t] + 1)`` with
    cosine ``rot_c[t]`` and sine ``rot_s[t]``; the tridiagonal eigenvector
    matrix is the ordered product of these rotations. Status 0 is success,
    1 non-convergence, 2 a full rotation log (retry with a larger ``cap``).
    """
    n = d.shape[0]
    eps = np.finfo(np.float64).eps
    # off-diagonals below eps * ||T|| are negligible: the Householder stage
    # already carries error of that size, and a purely relative test can
    # stall on clusters of near-zero eigenvalues
    tnorm = 0.0
    for i in range(n):
        tnorm = max(tnorm, abs(d[i]) + abs(e[i]))
    floor = max(eps * tnorm, 1e-300)
    rot_i = np.empty(cap, dtype=np.int64)
    rot_c = np.empty(cap)
    rot_s = np.empty(cap)
    count = 0
    for l in range(n):
        sweeps = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= eps * dd or abs(e[m]) <= floor:
                    break
                m += 1
            if m == l:
                break
            sweeps += 1
            if sweeps > max_sweeps:
                return 1, rot_i, rot_c, rot_s, count
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = 1.0
            c = 1.0
            p = 0.0
            i = m - 1
            deflated = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    deflated = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                if count == cap:
                    return 2, rot_i, rot_c, rot_s, count
                rot_i[count] = i
                rot_c[count] = c
                rot_s[count] = s
                count += 1
                i -= 1
            if deflated and i >= l:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return 0, rot_i, rot_c, rot_s, count


@njit(cache=True)
def _rebuild_vectors(positions, n, rot_i, rot_c, rot_s, count, vs, hs):
    """Eigenvectors of the original matrix for the given QL output positions."""
    k = positions.shape[0]
    x = np.zeros((n, k))
    for col in range(k):
        x[positions[col], col] = 1.0
    # tridiagonal eigenvectors: R_1 (R_2 (... R_m e_p))
    for t in range(count - 1, -1, -1):
        i = rot_i[t]
        c = rot_c[t]
        s = rot_s[t]
        for col in range(k):
            xi = x[i, col]
            xj = x[i + 1, col]
            x[i, col] = c * xi + s * xj
            x[i + 1, col] = -s * xi + c * xj
    # back to the original basis: H_0 (H_1 (... H_{n-3} y))
    for r in range(n - 3, -1, -1):
        h = hs[r]
        if h == 0.0:
            continue
        for col in range(k):
            dot = 0.0
            for i in range(r + 1, n):
                dot += vs[r, i] * x[i, col]
            f = dot / h
            for i in range(r + 1, n):
                x[i, col] -= f * vs[r, i]
    return x


class LazySymmetricEig:
    """Eigenvalues up front, eigenvectors only when asked for.

    Holds the Householder reflectors and the QL rotation log, so any subset
    of eigenvectors can be rebuilt in O(n^2) per vector without ever forming
    the full eigenvector matrix.
    """

    def __init__(self, a):
        a = _check_square_finite(a)
        n = a.shape[0]
        self._n = n
        if n == 0:
            self.eigenvalues = np.zeros(0)
            return
        d0, e0, vs, hs = _householder_tridiagonal(0.5 * (a + a.T))
        cap = max(64, 2 * n * n)
        while True:
            d, e = d0.copy(), e0.copy()
            status, rot_i, rot_c, rot_s, count = _ql_implicit_logged(
                d, e, constants.QL_MAX_SWEEPS, cap)
            if status != 2:
                break
            cap *= 4
        if status == 1:
            raise np.linalg.LinAlgError("QL iteration did not converge")
        self._order = np.argsort(d, kind="stable")
        self.eigenvalues = d[self._order]
        self._vs, self._hs = vs, hs
        self._rot = (rot_i, rot_c, rot_s, count)

    def vectors(self, indices) -> np.ndarray:
        """Columns are the eigenvectors for ``eigenvalues[indices]``."""
        idx = np.asarray(indices, dtype=np.int64).reshape(-1)
        if idx.size == 0:
            return np.zeros((self._n, 0))
        positions = np.ascontiguousarray(self._order[idx])
        rot_i, rot_c, rot_s, count = self._rot
        return _rebuild_vectors(positions, self._n, rot_i, rot_c, rot_s, count, self._vs, self._hs)


def _check_square_finite(a: np.ndarray, name: str = "matrix") -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    return a


def sym_eig(a, vectors: bool = True) -> SymmetricEig:
    """Eigen-decomposition of a symmetric matrix.

    The input is symmetrized as ``(A + A^T) / 2`` first. Eigenvalues are
    returned in ascending order; with ``vectors=False`` the eigenvector
    field is ``None`` and the cost drops from O(n^3) to the reduction alone.
    """
    a = _check_square_finite(a)
    n = a.shape[0]
    if n == 0:
        return SymmetricEig(np.zeros(0), np.zeros((0, 0)) if vectors else None)
    work = 0.5 * (a + a.T)
    d, e, vs, hs = _householder_tridiagonal(work)
    w = _accumulate_transposed(vs, hs) if vectors else np.zeros((n, 1))
    ok = _ql_implicit(d, e, w, vectors, constants.QL_MAX_SWEEPS)
    if not ok:
        raise np.linalg.LinAlgError("QL iteration did not converge")
    order = np.argsort(d, kind="stable")
    vals = d[order]
    vecs = np.ascontiguousarray(w[order].T) if vectors else None
    return SymmetricEig(vals, vecs)


def clamp_psd_spectrum(eigenvalues: np.ndarray) -> np.ndarray:
    """Zero out round-off negatives and tiny positives of a PSD spectrum.

    Raises if an eigenvalue is more negative than the tolerance allows, which
    means the input was not PSD to begin with.
    """
    lam = np.array(eigenvalues, dtype=np.float64)
    if lam.size == 0:
        return lam
    scale = max(1.0, float(np.max(np.abs(lam))))
    if lam.min() < -constants.EIG_NEGATIVE_TOL * scale:
        raise ValueError(f"matrix is not PSD: eigenvalue {lam.min():.3e}")
    lam[lam < constants.EIG_ZERO_TOL * scale] = 0.0
    return lam


def det_psd(a) -> float:
    """Determinant of a PSD matrix by diagonally pivoted Cholesky.

    Returns exactly 0.0 once the largest remaining pivot drops below
    ``DET_PIVOT_TOL`` times the largest original diagonal entry.
    """
    a = _check_square_finite(a).copy()
    n = a.shape[0]
    if n == 0:
        return 1.0
    a = 0.5 * (a + a.T)
    scale = float(np.max(np.abs(np.diag(a))))
    if scale == 0.0:
        return 0.0
    det = 1.0
    active = np.ones(n, dtype=bool)
    for _ in range(n):
        idx = np.flatnonzero(active)
        diag = a[idx, idx]
        j = idx[int(np.argmax(diag))]
        piv = a[j, j]
        if piv <= constants.DET_PIVOT_TOL * scale:
            return 0.0
        det *= piv
        active[j] = False
        rest = np.flatnonzero(active)
        if rest.size:
            col = a[rest, j]
            a[np.ix_(rest, rest)] -= np.outer(col, col) / piv
    return float(det)


@njit(cache=True)
def _gram_schmidt(v, tol):
    n, k = v.shape
    out = np.zeros((n, k))
    kept = 0
    for j in range(k):
        col = v[:, j].copy()
        # two passes of modified Gram-Schmidt keep orthogonality at machine level
        for _ in range(2):
            for q in range(kept):
                dot = 0.0
                for i in range(n):
                    dot += out[i, q] * col[i]
                for i in range(n):
                    col[i] -= dot * out[i, q]
        nrm = 0.0
        for i in range(n):
            nrm += col[i] * col[i]
        nrm = math.sqrt(nrm)
        if nrm > tol:
            for i in range(n):
                out[i, kept] = col[i] / nrm
            kept += 1
    return out[:, :kept].copy()


def gram_schmidt(v, tol: float = constants.GS_TOL) -> np.ndarray:
    """Orthonormalize the columns of ``v``; columns whose residual norm falls
    below ``tol`` are dropped."""
    v = np.ascontiguousarray(v, dtype=np.float64)
    if v.ndim != 2:
        raise ValueError("expected a 2-D array")
    return _gram_schmidt(v, tol)
