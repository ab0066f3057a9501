"""Pool-based batch active learning: the k-DPP multi-criteria strategy and
the uniform, margin and k-center baselines."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import committee as cm
from .dataset import Dataset, apply_standardizer, fit_standardizer, init_pool, split
from .evaluation import BudgetCurve, METRICS, metrics
from .glad import class_probabilities, em_fit, informativeness
from .kdpp import build_L, sample_kdpp
from .kernels import similarity_matrix
from .representativeness import kappa_schedule, kcenter_greedy, pairwise_distances, rep_vectors

STRATEGIES = ("kdpp_multi", "uniform", "margin", "kcenter")

# cumulative PN ratio before any negative label has been acquired
PN_SENTINEL = math.inf


@dataclass(frozen=True)
class ALConfig:
    init_size: int = 20
    train_fraction: float = 0.6
    kernel: str = "laplacian"
    c0: float = 1.0
    d0: float = 3.0
    committee: tuple = cm.KINDS
    committee_hyper: dict = field(default_factory=dict)
    glad_max_iter: int = 100
    glad_tol: float = 1e-5


class Oracle:
    """Ground-truth labels, each index answerable once."""

    def __init__(self, labels):
        self._labels = np.asarray(labels)
        self._asked: set = set()

    def query(self, index) -> int:
        index = int(index)
        if index in self._asked:
            raise ValueError(f"index {index} was already queried")
        self._asked.add(index)
        return int(self._labels[index])

    @property
    def count(self) -> int:
        return len(self._asked)


def oracle(ds: Dataset, index) -> int:
    return int(ds.labels[int(index)])


@dataclass
class Selection:
    round: int
    labeled_before: int
    indices: list            # dataset row indices
    labels: list
    informativeness: list    # mu_i / sum(mu) over the pool
    representativeness: list # similarity row sum / pool total
    diversity: list          # mean distance to the other batch members


@dataclass
class RunRecord:
    dataset: str
    strategy: str
    batch_size: int
    seed: int
    budgets: list = field(default_factory=list)
    scores: dict = field(default_factory=lambda: {m: [] for m in METRICS})
    selections: list = field(default_factory=list)
    beta_trace: list = field(default_factory=list)   # (labeled count, beta) per round
    committee: tuple = ()
    glad_nonconverged: int = 0

    def curve(self, metric: str = "acc") -> BudgetCurve:
        return BudgetCurve(np.array(self.budgets), np.array(self.scores[metric]))

    def acquired_labels(self) -> list:
        return [lab for sel in self.selections for lab in sel.labels]

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "strategy": self.strategy,
            "batch_size": self.batch_size,
            "seed": self.seed,
            "committee": list(self.committee),
            "budgets": list(self.budgets),
            "scores": {m: list(v) for m, v in self.scores.items()},
            "selections": [sel.__dict__ for sel in self.selections],
            "beta_trace": [{"labeled": n, "beta": list(map(float, b))}
                           for n, b in self.beta_trace],
            "glad_nonconverged": self.glad_nonconverged,
        }


class _Trial:
    """State of one active-learning run; positions index the training split."""

    def __init__(self, ds: Dataset, seed: int, config: ALConfig):
        self.ds = ds
        self.config = config
        seeds = np.random.SeedSequence(seed).generate_state(3)
        self.train, self.test = split(ds, config.train_fraction, int(seeds[0]))
        mean, scale = fit_standardizer(ds.features[self.train])
        self.x_train = apply_standardizer(ds.features[self.train], mean, scale)
        self.x_test = apply_standardizer(ds.features[self.test], mean, scale)
        self.y_test = ds.labels[self.test]
        # the pool works in dataset row indices; map them to training positions
        self.pos_of = {int(r): p for p, r in enumerate(self.train)}
        self.pool = init_pool(self.train, ds.labels, config.init_size, int(seeds[1]))
        self.rng = np.random.default_rng(seeds[2])
        self.dist = pairwise_distances(self.x_train)
        self.oracle = Oracle(ds.labels)
        self.eval_model = None

    def positions(self, rows) -> np.ndarray:
        return np.array([self.pos_of[int(r)] for r in rows], dtype=np.int64)

    def labeled_xy(self):
        rows = self.pool.labeled_array
        return self.x_train[self.positions(rows)], np.array(
            [self.pool.acquired_labels[int(r)] for r in rows], dtype=np.int64)

    def evaluate(self):
        x, y = self.labeled_xy()
        self.eval_model = cm.fit("svm_rbf", x, y, self.ds.class_count,
                                 self.config.committee_hyper)
        scores = self.eval_model.decision_scores(self.x_test)
        pred = np.argmax(scores, axis=1)
        return metrics(self.y_test, pred, scores, self.ds.class_count)


def _mean_pair_distance(dist, pos):
    if len(pos) < 2:
        return [float("nan")] * len(pos)
    sub = dist[np.ix_(pos, pos)]
    return (sub.sum(axis=1) / (len(pos) - 1)).tolist()


def _select_kdpp(trial: _Trial, s: int, record: RunRecord):
    cfg = trial.config
    k = trial.ds.class_count
    x_l, y_l = trial.labeled_xy()
    unl_pos = trial.positions(trial.pool.unlabeled)
    lab_pos = trial.positions(trial.pool.labeled_array)
    x_u = trial.x_train[unl_pos]

    committee = cm.fit_committee(cfg.committee, x_l, y_l, k, cfg.committee_hyper)
    votes = cm.vote_matrix(committee, x_u)
    fit = em_fit(votes, k, cfg.glad_max_iter, cfg.glad_tol)
    if not fit.converged:
        record.glad_nonconverged += 1
    record.beta_trace.append((len(trial.pool.labeled), fit.beta.copy()))
    mu = informativeness(class_probabilities(fit, votes, k), k)

    kappa = kappa_schedule(unl_pos.size)
    centers = kcenter_greedy(trial.dist, lab_pos, unl_pos, kappa).centers
    r = rep_vectors(x_u, trial.x_train[centers])
    sim = similarity_matrix(r, cfg.kernel, kappa, cfg.c0, cfg.d0)
    ens = build_L(mu, sim)
    chosen = sample_kdpp(ens, s, trial.rng)

    mu_tot = float(mu.sum())
    row = sim.s.sum(axis=1)
    row_tot = float(row.sum())
    info = (mu[chosen] / mu_tot).tolist() if mu_tot > 0 else [float("nan")] * s
    rep = (row[chosen] / row_tot).tolist() if row_tot != 0 else [float("nan")] * s
    return chosen, info, rep


def _select_margin(trial: _Trial, s: int):
    x_u = trial.x_train[trial.positions(trial.pool.unlabeled)]
    scores = trial.eval_model.decision_scores(x_u)
    top2 = np.sort(scores, axis=1)[:, -2:]
    gap = top2[:, 1] - top2[:, 0]
    return np.argsort(gap, kind="stable")[:s]


def _select_kcenter(trial: _Trial, s: int):
    unl_pos = trial.positions(trial.pool.unlabeled)
    lab_pos = trial.positions(trial.pool.labeled_array)
    centers = kcenter_greedy(trial.dist, lab_pos, unl_pos, s).centers
    # unl_pos is sorted, so positions map back by binary search
    return np.searchsorted(unl_pos, centers)


def run_al(ds: Dataset, strategy: str, budget: int | None, batch_size: int, seed: int,
           config: ALConfig | None = None) -> RunRecord:
    """Run one active-learning trial and record its budget curves.

    ``budget`` is the number of labels to acquire beyond the initial pool;
    ``None`` queries the whole pool. The last batch is smaller when
    ``batch_size`` does not divide ``budget``.
    """
    config = config or ALConfig()
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")
    if batch_size < 1:
        raise ValueError("batch size must be at least 1")
    if strategy == "kdpp_multi" and len(config.committee) < 2:
        raise ValueError("the committee needs at least two members")
    trial = _Trial(ds, seed, config)
    pool_size = trial.pool.unlabeled.size
    if budget is None:
        budget = pool_size
    if budget < 0 or budget > pool_size:
        raise ValueError(f"budget {budget} outside 0..{pool_size} (unlabeled pool size)")

    record = RunRecord(ds.name, strategy, batch_size, seed, committee=tuple(config.committee))

    def log_point():
        acc, auc, f1 = trial.evaluate()
        record.budgets.append(len(trial.pool.labeled))
        for name, val in zip(METRICS, (acc, auc, f1)):
            record.scores[name].append(float(val))

    log_point()
    spent = 0
    rnd = 0
    while spent < budget:
        s = min(batch_size, budget - spent)
        info = rep = [float("nan")] * s
        if strategy == "kdpp_multi":
            chosen, info, rep = _select_kdpp(trial, s, record)
        elif strategy == "uniform":
            chosen = np.sort(trial.rng.choice(trial.pool.unlabeled.size, size=s, replace=False))
        elif strategy == "margin":
            chosen = _select_margin(trial, s)
        else:
            chosen = _select_kcenter(trial, s)
        rows = trial.pool.unlabeled[np.asarray(chosen, dtype=np.int64)]
        labels = [trial.oracle.query(r) for r in rows]
        record.selections.append(Selection(
            round=rnd,
            labeled_before=len(trial.pool.labeled),
            indices=[int(r) for r in rows],
            labels=labels,
            informativeness=[float(v) for v in info],
            representativeness=[float(v) for v in rep],
            diversity=_mean_pair_distance(trial.dist, trial.positions(rows)),
        ))
        trial.pool = trial.pool.add(rows, labels)
        spent += s
        rnd += 1
        log_point()
    return record


def pn_ratio_trace(record: RunRecord, ds: Dataset) -> list:
    """Cumulative positives/negatives among acquired labels after each round.

    Class 1 is positive. Rounds before the first negative report ``PN_SENTINEL``.
    """
    if ds.class_count != 2:
        raise ValueError("PN ratio is defined for binary datasets only")
    pos = neg = 0
    out = []
    for sel in record.selections:
        pos += sum(1 for lab in sel.labels if lab == 1)
        neg += sum(1 for lab in sel.labels if lab != 1)
        out.append(pos / neg if neg else PN_SENTINEL)
    return out
