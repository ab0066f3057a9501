"""Classification metrics, area under the budget curve, paired t-tests and
average-rank tables."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

METRICS = ("acc", "auc", "f1")


@dataclass(frozen=True)
class BudgetCurve:
    budgets: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.budgets, dtype=np.float64).reshape(-1)
        v = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if b.shape != v.shape:
            raise ValueError("budgets and values differ in length")
        if b.size > 1 and np.any(np.diff(b) <= 0):
            raise ValueError("budgets must be strictly increasing")
        object.__setattr__(self, "budgets", b)
        object.__setattr__(self, "values", v)


def accuracy(y_true, y_pred) -> float:
    y_true = np.asarray(y_true)
    return float(np.mean(y_true == np.asarray(y_pred))) if y_true.size else 0.0


def binary_auc(is_pos, score) -> float:
    """ROC area as the Mann-Whitney statistic; tied scores count one half."""
    is_pos = np.asarray(is_pos, dtype=bool)
    score = np.asarray(score, dtype=np.float64)
    n_pos = int(is_pos.sum())
    n_neg = is_pos.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both positive and negative examples")
    ranks = _average_ranks(score)
    return float((ranks[is_pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def _average_ranks(x) -> np.ndarray:
    """1-based ranks in ascending order; ties share the mean rank."""
    x = np.asarray(x, dtype=np.float64)
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    ranks = np.empty(x.size)
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and xs[j + 1] == xs[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _f1(y_true, y_pred, c) -> float:
    tp = np.sum((y_pred == c) & (y_true == c))
    fp = np.sum((y_pred == c) & (y_true != c))
    fn = np.sum((y_pred != c) & (y_true == c))
    denom = 2 * tp + fp + fn
    return float(2 * tp / denom) if denom else 0.0


def metrics(y_true, y_pred, scores, k: int) -> tuple[float, float, float]:
    """Accuracy, ROC AUC and F1.

    Binary: AUC ranks the class-1 score and F1 treats class 1 as positive.
    Multi-class: AUC is the unweighted one-vs-rest mean over classes that
    occur in ``y_true`` (others are skipped with a warning) and F1 is the
    macro average over classes seen in either ``y_true`` or ``y_pred``.
    """
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    scores = np.asarray(scores, dtype=np.float64)
    if y_true.shape != y_pred.shape:
        raise ValueError("y_true and y_pred differ in length")
    if scores.ndim == 1:
        scores = np.column_stack([-scores, scores])
    if scores.shape != (y_true.size, k):
        raise ValueError(f"scores must have shape ({y_true.size}, {k})")
    acc = accuracy(y_true, y_pred)
    if k == 2:
        auc = binary_auc(y_true == 1, scores[:, 1] - scores[:, 0])
        f1 = _f1(y_true, y_pred, 1)
        return acc, auc, f1
    aucs = []
    for c in range(k):
        pos = y_true == c
        if pos.all() or not pos.any():
            warnings.warn(f"class {c} has no positive or no negative test examples; "
                          "skipped in AUC", RuntimeWarning, stacklevel=2)
            continue
        aucs.append(binary_auc(pos, scores[:, c]))
    auc = float(np.mean(aucs)) if aucs else float("nan")
    labels = np.union1d(y_true, y_pred)
    f1 = float(np.mean([_f1(y_true, y_pred, c) for c in labels]))
    return acc, auc, f1


def aubc(curve) -> float:
    """Trapezoid area under the budget curve divided by the budget range."""
    if not isinstance(curve, BudgetCurve):
        b, v = zip(*curve)
        curve = BudgetCurve(np.array(b), np.array(v))
    b, v = curve.budgets, curve.values
    if b.size < 2:
        raise ValueError("AUBC needs at least two curve points")
    area = float(np.sum(0.5 * (v[1:] + v[:-1]) * np.diff(b)))
    return area / float(b[-1] - b[0])


# -- paired t-test ------------------------------------------------------------

def _betacf(a, b, x, max_iter=300, eps=1e-15):
    # modified Lentz evaluation of the incomplete-beta continued fraction
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = tiny if abs(d) < tiny else d
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function ``I_x(a, b)``."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    lbt = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
           + a * math.log(x) + b * math.log1p(-x))
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(lbt) * _betacf(a, b, x) / a
    return 1.0 - math.exp(lbt) * _betacf(b, a, 1.0 - x) / b


def student_t_sf2(t: float, df: float) -> float:
    """Two-sided tail probability ``P(|T| >= |t|)`` for Student's t."""
    if math.isinf(t):
        return 0.0
    return betainc(0.5 * df, 0.5, df / (df + t * t))


def paired_ttest(a, b) -> float:
    """Two-sided p-value of the paired t-test on ``a - b``.

    All-zero differences give p = 1. Constant nonzero differences have zero
    variance and an infinite statistic, giving p = 0.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("paired samples must be 1-D and of equal length")
    n = a.size
    if n < 2:
        raise ValueError("need at least two pairs")
    d = a - b
    if np.all(d == 0):
        return 1.0
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    if sd == 0.0 or sd <= 1e-15 * abs(mean):
        return 0.0
    t = mean / (sd / math.sqrt(n))
    return student_t_sf2(t, n - 1)


def p_band(p: float) -> str:
    if p < 0.01:
        return "p<0.01"
    if p < 0.05:
        return "0.01<=p<0.05"
    return "p>=0.05"


# -- summary and ranks ----------------------------------------------------------

@dataclass(frozen=True)
class SummaryRow:
    dataset: str
    strategy: str
    batch_size: int
    metric: str
    mean: float
    sd: float
    trials: int


def summarize(values: dict) -> list:
    """``{(dataset, strategy, S, metric): [aubc per trial]}`` -> summary rows."""
    rows = []
    for (ds, strat, s, metric), vals in values.items():
        v = np.asarray(vals, dtype=np.float64)
        sd = float(v.std(ddof=1)) if v.size > 1 else 0.0
        rows.append(SummaryRow(ds, strat, int(s), metric, float(v.mean()), sd, int(v.size)))
    return rows


def rank_table(cells: dict, strategies=None) -> tuple[dict, dict]:
    """Rank strategies within every row (rank 1 = highest value).

    ``cells`` maps a row key, e.g. ``(dataset, S)``, to ``{strategy: value}``.
    Returns ``(row_ranks, average_rank)``; tied values share the mean rank.
    """
    if not cells:
        raise ValueError("no rows to rank")
    if strategies is None:
        strategies = sorted({s for row in cells.values() for s in row})
    strategies = list(strategies)
    row_ranks = {}
    for key, row in cells.items():
        missing = [s for s in strategies if s not in row]
        if missing:
            raise ValueError(f"row {key!r} is missing strategies {missing}")
        vals = np.array([row[s] for s in strategies], dtype=np.float64)
        ranks = _average_ranks(-vals)
        row_ranks[key] = dict(zip(strategies, ranks.tolist()))
    avg = {s: float(np.mean([r[s] for r in row_ranks.values()])) for s in strategies}
    return row_ranks, avg
