"""Binary learners and their scoring functions.

Every binary fit takes features and a 0/1 target and returns a scorer whose
``__call__`` gives a real decision value per row; positive means class 1.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from ..constants import ABSENT_CLASS_SCORE
from .smo import kernel_matrix, smo_solve


@dataclass(frozen=True)
class LinearScorer:
    w: np.ndarray
    b: float

    def __call__(self, x):
        return x @ self.w + self.b


@dataclass(frozen=True)
class KernelScorer:
    """``sum_s coef_s k(x, support_s) + b``; ``coef`` and ``b`` may carry a
    trailing class axis, in which case the scorer returns one column per class."""

    support: np.ndarray
    coef: np.ndarray
    b: float
    kernel: str
    gamma: float
    degree: int = 3
    coef0: float = 1.0
    support_index: np.ndarray | None = None

    def __call__(self, x):
        if self.support.shape[0] == 0:
            return np.zeros((x.shape[0],) + np.shape(self.coef)[1:]) + self.b
        k = kernel_matrix(x, self.support, self.kernel, self.gamma, self.degree, self.coef0)
        return k @ self.coef + self.b


@dataclass(frozen=True)
class ConstantScorer:
    value: float

    def __call__(self, x):
        return np.full(x.shape[0], self.value)


def fit_logistic(x, t, l2=1e-4, max_iter=500, tol=1e-6):
    """L2-penalized logistic regression by damped Newton steps from w = 0.

    Minimizes the mean log-loss plus ``l2/2 * ||w||^2`` (intercept not
    penalized). Returns ``(scorer, converged)``.
    """
    n, d = x.shape
    xa = np.hstack([x, np.ones((n, 1))])
    pen = np.full(d + 1, l2)
    pen[-1] = 0.0
    theta = np.zeros(d + 1)

    def objective(th):
        z = xa @ th
        return np.mean(np.logaddexp(0.0, z) - t * z) + 0.5 * np.sum(pen * th * th)

    f = objective(theta)
    converged = False
    for _ in range(max_iter):
        z = xa @ theta
        p = 0.5 * (1.0 + np.tanh(0.5 * z))
        g = xa.T @ (p - t) / n + pen * theta
        if np.linalg.norm(g) < tol:
            converged = True
            break
        w = p * (1.0 - p)
        h = (xa * w[:, None]).T @ xa / n + np.diag(pen) + 1e-10 * np.eye(d + 1)
        step = np.linalg.solve(h, g)
        slope = g @ step
        eta = 1.0
        while eta > 1e-12:
            cand = theta - eta * step
            fc = objective(cand)
            if fc <= f - 1e-4 * eta * slope:
                break
            eta *= 0.5
        else:
            break
        theta, f = cand, fc
    return LinearScorer(theta[:d].copy(), float(theta[d])), converged


def fit_svm(x, t, kernel="linear", c=1.0, gamma=1.0, degree=3, coef0=1.0, tol=1e-3,
            max_iter=100_000, kmat=None):
    """Soft-margin SVM on 0/1 targets. Returns ``(scorer, converged)``.

    ``kmat`` may carry a precomputed training Gram matrix.
    """
    y = np.where(t > 0, 1.0, -1.0)
    if kmat is None:
        kmat = kernel_matrix(x, x, kernel, gamma, degree, coef0)
    kmat = np.ascontiguousarray(kmat)
    alpha, rho, converged = smo_solve(kmat, y, float(c), float(tol), int(max_iter))
    coef = alpha * y
    if kernel == "linear":
        return LinearScorer(x.T @ coef, -rho), bool(converged)
    sv = np.flatnonzero(alpha > 0)
    return (KernelScorer(x[sv].copy(), coef[sv].copy(), -rho, kernel, gamma, degree, coef0, sv),
            bool(converged))


def stack_kernel_scorers(x, scorers, absent_value):
    """Merge per-class kernel scorers over the rows of ``x`` into one scorer
    returning a column per class, so the test kernel is evaluated once.

    ``None`` entries mark classes without a model; they score ``absent_value``.
    """
    ref = next(s for s in scorers if s is not None)
    coef = np.zeros((x.shape[0], len(scorers)))
    b = np.full(len(scorers), float(absent_value))
    for c, s in enumerate(scorers):
        if s is None:
            continue
        coef[s.support_index, c] = s.coef
        b[c] = s.b
    used = np.flatnonzero(np.any(coef != 0.0, axis=1))
    return KernelScorer(x[used].copy(), coef[used].copy(), b, ref.kernel, ref.gamma,
                        ref.degree, ref.coef0, used)


def median_distance(x) -> float:
    sq = (x * x).sum(1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    iu = np.triu_indices(x.shape[0], 1)
    if iu[0].size == 0:
        return 1.0
    med = float(np.sqrt(np.median(np.maximum(d2[iu], 0.0))))
    return med if med > 0 else 1.0


def gpc_gamma(x) -> float:
    ell = median_distance(x)
    return 1.0 / (2.0 * ell * ell)


def fit_gpc(x, t, max_iter=50, tol=1e-8, kmat=None, gamma=None):
    """Binary GP classifier with logistic likelihood, Laplace approximation.

    RBF covariance with unit signal variance and lengthscale equal to the
    median pairwise training distance. Newton iterations on the latent mode;
    the score is the predictive latent mean ``k_*^T (t - pi)``.
    """
    if gamma is None:
        gamma = gpc_gamma(x)
    k = kernel_matrix(x, x, "rbf", gamma) if kmat is None else kmat
    n = x.shape[0]
    f = np.zeros(n)
    psi_old = -np.inf
    converged = False
    for _ in range(max_iter):
        pi = 0.5 * (1.0 + np.tanh(0.5 * f))
        w = pi * (1.0 - pi)
        sw = np.sqrt(w)
        b_mat = np.eye(n) + sw[:, None] * k * sw[None, :]
        chol = cho_factor(b_mat, lower=True)
        b = w * f + (t - pi)
        a = b - sw * cho_solve(chol, sw * (k @ b))
        f = k @ a
        psi = -0.5 * a @ f + np.sum(t * f - np.logaddexp(0.0, f))
        if abs(psi - psi_old) < tol:
            converged = True
            break
        psi_old = psi
    pi = 0.5 * (1.0 + np.tanh(0.5 * f))
    return KernelScorer(x.copy(), t - pi, 0.0, "rbf", gamma, support_index=np.arange(n)), converged


@dataclass(frozen=True)
class LdaScorer:
    coef: np.ndarray        # K x d
    intercept: np.ndarray   # K

    def __call__(self, x):
        return x @ self.coef.T + self.intercept


def fit_lda(x, y, k, ridge=1e-6):
    """Gaussian discriminant with a pooled covariance, natively multi-class.

    A ridge of ``ridge * trace / d`` is added to the pooled covariance so a
    singular estimate (few points, collinear features) still inverts.
    """
    n, d = x.shape
    means = np.zeros((k, d))
    counts = np.bincount(y, minlength=k).astype(float)
    scatter = np.zeros((d, d))
    for c in range(k):
        xc = x[y == c]
        if xc.shape[0] == 0:
            continue
        means[c] = xc.mean(0)
        r = xc - means[c]
        scatter += r.T @ r
    dof = n - np.count_nonzero(counts) if n > np.count_nonzero(counts) else n
    cov = scatter / dof
    tr = np.trace(cov)
    cov += (ridge * tr / d if tr > 0 else ridge) * np.eye(d)
    inv_means = np.linalg.solve(cov, means.T).T
    with np.errstate(divide="ignore"):
        log_prior = np.log(counts / n)
    intercept = -0.5 * np.sum(inv_means * means, axis=1) + log_prior
    present = counts > 0
    # absent classes get a finite but dominated score
    intercept = np.where(present, intercept, ABSENT_CLASS_SCORE)
    inv_means[~present] = 0.0
    return LdaScorer(inv_means, intercept), True
