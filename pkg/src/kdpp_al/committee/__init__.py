"""Committee classifiers and the vote matrix they produce.

Every member except LDA is trained one-vs-rest from a binary learner; with
two classes a single binary model is trained and its score ``f`` becomes the
score pair ``(-f, f)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..constants import ABSENT_CLASS_SCORE
from .learners import (
    ConstantScorer,
    fit_gpc,
    fit_lda,
    fit_logistic,
    fit_svm,
    gpc_gamma,
    stack_kernel_scorers,
)
from .smo import kernel_matrix

KINDS = ("logistic", "lda", "svm_linear", "svm_rbf", "svm_poly", "gpc")
_KERNEL_KINDS = ("svm_rbf", "svm_poly", "gpc")

DEFAULT_HYPER = {
    "logistic.l2": 1e-4,
    "logistic.max_iter": 500,
    "logistic.tol": 1e-6,
    "lda.ridge": 1e-6,
    "svm.c": 1.0,
    "svm.gamma": None,       # None means 1/d
    "svm.degree": 3,
    "svm.coef0": 1.0,
    "svm.tol": 1e-3,
    "svm.max_iter": 100_000,
    "gpc.max_iter": 50,
}


@dataclass(frozen=True)
class TrainedModel:
    kind: str
    class_count: int
    n_features: int
    scorers: tuple
    converged: bool = True
    # a single scorer already returning the (m, K) score matrix
    native: bool = field(default=False, repr=False)

    def decision_scores(self, x) -> np.ndarray:
        """``(m, K)`` matrix of per-class scores."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.n_features:
            raise ValueError(
                f"expected inputs with {self.n_features} columns, got shape {x.shape}")
        if self.native:
            return np.asarray(self.scorers[0](x), dtype=np.float64)
        if self.class_count == 2:
            f = np.asarray(self.scorers[0](x), dtype=np.float64)
            return np.column_stack([-f, f])
        return np.column_stack([s(x) for s in self.scorers]).astype(np.float64)

    def predict(self, x) -> np.ndarray:
        # np.argmax returns the first maximum, i.e. the lower class index on ties
        return np.argmax(self.decision_scores(x), axis=1).astype(np.int64)


def _hyper(hyper):
    h = dict(DEFAULT_HYPER)
    if hyper:
        unknown = set(hyper) - set(DEFAULT_HYPER)
        if unknown:
            raise ValueError(f"unknown committee hyperparameters: {sorted(unknown)}")
        h.update(hyper)
    return h


def _binary_fitter(kind, x, h):
    """Binary fit ``t -> (scorer, converged)`` on the rows of ``x``; the Gram
    matrix is shared by all one-vs-rest problems."""
    gamma = h["svm.gamma"] if h["svm.gamma"] is not None else 1.0 / x.shape[1]
    if kind == "logistic":
        return lambda t: fit_logistic(x, t, h["logistic.l2"], int(h["logistic.max_iter"]),
                                      h["logistic.tol"])
    if kind in ("svm_linear", "svm_rbf", "svm_poly"):
        kernel = kind[4:]
        degree = int(h["svm.degree"])
        kmat = kernel_matrix(x, x, kernel, gamma, degree, h["svm.coef0"])
        return lambda t: fit_svm(x, t, kernel, h["svm.c"], gamma, degree, h["svm.coef0"],
                                 h["svm.tol"], int(h["svm.max_iter"]), kmat=kmat)
    if kind == "gpc":
        g = gpc_gamma(x)
        kmat = kernel_matrix(x, x, "rbf", g)
        return lambda t: fit_gpc(x, t, int(h["gpc.max_iter"]), kmat=kmat, gamma=g)
    raise ValueError(f"unknown committee member {kind!r}; choose from {KINDS}")


def fit(kind: str, x, y, k: int, hyper: dict | None = None) -> TrainedModel:
    """Train one committee member on labeled data.

    Non-convergence within the iteration caps is reported through
    ``TrainedModel.converged``; the last iterate is still usable.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if x.ndim != 2 or y.shape != (x.shape[0],):
        raise ValueError("x must be (n, d) and y of length n")
    if y.size and (y.min() < 0 or y.max() >= k):
        raise ValueError("label outside 0..K-1")
    present = np.unique(y)
    if present.size < 2:
        raise ValueError("training set must contain at least two classes")
    h = _hyper(hyper)
    d = x.shape[1]

    if kind == "lda":
        scorer, ok = fit_lda(x, y, k, h["lda.ridge"])
        return TrainedModel(kind, k, d, (scorer,), ok, native=True)

    fitter = _binary_fitter(kind, x, h)
    if k == 2:
        scorer, ok = fitter((y == 1).astype(np.float64))
        return TrainedModel(kind, k, d, (scorer,), bool(ok))
    scorers = []
    all_ok = True
    for c in range(k):
        if c not in present:
            scorers.append(None)
            continue
        scorer, ok = fitter((y == c).astype(np.float64))
        scorers.append(scorer)
        all_ok &= bool(ok)
    if kind in _KERNEL_KINDS:
        merged = stack_kernel_scorers(x, scorers, ABSENT_CLASS_SCORE)
        return TrainedModel(kind, k, d, (merged,), all_ok, native=True)
    scorers = [ConstantScorer(ABSENT_CLASS_SCORE) if s is None else s for s in scorers]
    return TrainedModel(kind, k, d, tuple(scorers), all_ok)


def predict(model: TrainedModel, x) -> np.ndarray:
    return model.predict(x)


def fit_committee(kinds, x, y, k, hyper=None) -> list:
    return [fit(kind, x, y, k, hyper) for kind in kinds]


def vote_matrix(committee, x) -> np.ndarray:
    """``(N, C)`` integer matrix; column ``j`` is member ``j``'s prediction."""
    if not committee:
        raise ValueError("committee is empty")
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("no unlabeled instances to vote on")
    ks = {m.class_count for m in committee}
    ds = {m.n_features for m in committee}
    if len(ks) != 1 or len(ds) != 1:
        raise ValueError("committee members disagree on class count or feature dimension")
    return np.column_stack([m.predict(x) for m in committee]).astype(np.int64)


__all__ = ["KINDS", "DEFAULT_HYPER", "TrainedModel", "fit", "fit_committee", "predict",
           "vote_matrix"]
