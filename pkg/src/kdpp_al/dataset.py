"""Datasets: CSV ingestion, synthetic generators, standardization, splits and pools."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SYNTHETIC_KINDS = ("r15", "ex8a_like", "ex8b_like", "gcloud_balance", "gcloud_unbalance")

_MAX_REDRAWS = 1000


@dataclass(frozen=True)
class Dataset:
    """Feature matrix with integer labels in ``0..class_count-1``."""

    name: str
    features: np.ndarray
    labels: np.ndarray
    class_count: int

    def __post_init__(self):
        x = np.array(self.features, dtype=np.float64)
        y = np.array(self.labels, dtype=np.int64)
        if x.ndim != 2:
            raise ValueError("features must be a 2-D array")
        if y.shape != (x.shape[0],):
            raise ValueError("labels must be a vector with one entry per row")
        if self.class_count < 2:
            raise ValueError("a dataset needs at least two classes")
        if y.size and (y.min() < 0 or y.max() >= self.class_count):
            raise ValueError("label outside 0..K-1")
        missing = sorted(set(range(self.class_count)) - set(np.unique(y).tolist()))
        if missing:
            raise ValueError(f"classes never observed: {missing}")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.class_count)


@dataclass(frozen=True)
class PoolState:
    """Labeled/unlabeled partition of the training split (dataset row indices).

    ``labeled`` keeps acquisition order; ``unlabeled`` is sorted.
    """

    labeled: tuple
    unlabeled: np.ndarray
    acquired_labels: dict = field(default_factory=dict)

    def __post_init__(self):
        u = np.array(self.unlabeled, dtype=np.int64)
        u.setflags(write=False)
        object.__setattr__(self, "unlabeled", u)
        object.__setattr__(self, "labeled", tuple(int(i) for i in self.labeled))
        if set(self.labeled) & set(u.tolist()):
            raise ValueError("labeled and unlabeled sets overlap")

    @property
    def labeled_array(self) -> np.ndarray:
        return np.array(self.labeled, dtype=np.int64)

    def add(self, indices, labels) -> "PoolState":
        """Move ``indices`` from the unlabeled to the labeled set."""
        indices = [int(i) for i in indices]
        if len(set(indices)) != len(indices):
            raise ValueError("duplicate indices in batch")
        pos = np.searchsorted(self.unlabeled, indices)
        ok = (pos < self.unlabeled.size) & (self.unlabeled[np.minimum(pos, self.unlabeled.size - 1)] == indices)
        if not np.all(ok):
            raise ValueError("batch contains indices that are not unlabeled")
        acquired = dict(self.acquired_labels)
        acquired.update({i: int(c) for i, c in zip(indices, labels)})
        return PoolState(
            labeled=self.labeled + tuple(indices),
            unlabeled=np.delete(self.unlabeled, pos),
            acquired_labels=acquired,
        )


def load_csv(path, label_column=-1, header: bool = True, name: str | None = None) -> Dataset:
    """Read a comma-separated file; every column except the label is a feature.

    ``label_column`` is a column name (needs ``header``) or a zero-based
    index (negative counts from the end). Labels are re-encoded to
    ``0..K-1`` in order of first appearance.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if header:
        if not rows:
            raise ValueError(f"{path}: empty file")
        columns, rows = [c.strip() for c in rows[0]], rows[1:]
    else:
        columns = None
    if not rows:
        raise ValueError(f"{path}: no data rows")
    width = len(rows[0])
    if isinstance(label_column, str) and not label_column.lstrip("-").isdigit():
        if columns is None:
            raise ValueError("selecting the label column by name requires a header row")
        if label_column not in columns:
            raise ValueError(f"{path}: no column named {label_column!r}")
        label_idx = columns.index(label_column)
    else:
        label_idx = int(label_column)
        if not -width <= label_idx < width:
            raise ValueError(f"{path}: label column {label_idx} out of range")
        label_idx %= width

    feats = np.empty((len(rows), width - 1))
    raw_labels = []
    line_offset = 2 if header else 1
    for r, row in enumerate(rows):
        if len(row) != width:
            raise ValueError(f"{path}: line {r + line_offset} has {len(row)} columns, expected {width}")
        c_out = 0
        for c, cell in enumerate(row):
            if c == label_idx:
                raw_labels.append(cell.strip())
                continue
            try:
                v = float(cell)
            except ValueError:
                raise ValueError(
                    f"{path}: non-numeric feature {cell!r} at row {r + line_offset}, column {c}"
                ) from None
            if not math.isfinite(v):
                raise ValueError(f"{path}: non-finite feature at row {r + line_offset}, column {c}")
            feats[r, c_out] = v
            c_out += 1

    codes: dict[str, int] = {}
    labels = np.array([codes.setdefault(lab, len(codes)) for lab in raw_labels], dtype=np.int64)
    if len(codes) < 2:
        raise ValueError(f"{path}: label column has a single class")
    return Dataset(name or path.stem, feats, labels, len(codes))


def fit_standardizer(x) -> tuple[np.ndarray, np.ndarray]:
    """Column means and scales; zero-variance columns get scale 1 (they map to 0)."""
    x = np.asarray(x, dtype=np.float64)
    mean = x.mean(axis=0)
    sd = x.std(axis=0)
    sd[~(sd > 0)] = 1.0
    return mean, sd


def apply_standardizer(x, mean, scale) -> np.ndarray:
    out = (np.asarray(x, dtype=np.float64) - mean) / scale
    return np.where(np.abs(out) < 1e-300, 0.0, out)


def standardize(ds: Dataset) -> Dataset:
    """Z-score every column of ``ds``; constant columns become all zeros."""
    if ds.n < 2:
        raise ValueError("standardization needs at least two rows")
    mean, scale = fit_standardizer(ds.features)
    return Dataset(ds.name, apply_standardizer(ds.features, mean, scale), ds.labels, ds.class_count)


def split(ds: Dataset, train_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Random train/test split in which both sides contain every class.

    Returns sorted dataset row indices. Redraws the permutation until the
    coverage condition holds.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    counts = ds.class_counts()
    lonely = np.flatnonzero(counts < 2)
    if lonely.size:
        raise ValueError(f"class {int(lonely[0])} has a single sample; it cannot appear in both splits")
    n_train = min(max(int(round(train_fraction * ds.n)), 1), ds.n - 1)
    if n_train < ds.class_count or ds.n - n_train < ds.class_count:
        raise ValueError("split too small to contain every class on both sides")
    rng = np.random.default_rng(seed)
    for _ in range(_MAX_REDRAWS):
        perm = rng.permutation(ds.n)
        train, test = np.sort(perm[:n_train]), np.sort(perm[n_train:])
        if (np.unique(ds.labels[train]).size == ds.class_count
                and np.unique(ds.labels[test]).size == ds.class_count):
            return train, test
    raise ValueError("could not draw a split covering every class")


def init_pool(train, labels, init_size: int, seed: int) -> PoolState:
    """Draw ``init_size`` labeled points uniformly from ``train``.

    Redraws until the labeled set holds at least two distinct classes; the
    committee cannot be trained otherwise.
    """
    train = np.sort(np.asarray(train, dtype=np.int64))
    labels = np.asarray(labels)
    if init_size > train.size:
        raise ValueError(f"init_size {init_size} exceeds the {train.size} training points")
    if init_size < 2 or np.unique(labels[train]).size < 2:
        raise ValueError("an initial pool covering two classes is impossible")
    rng = np.random.default_rng(seed)
    for _ in range(_MAX_REDRAWS):
        chosen = rng.choice(train, size=init_size, replace=False)
        if np.unique(labels[chosen]).size >= 2:
            break
    else:
        raise ValueError("could not draw an initial pool covering two classes")
    rest = np.setdiff1d(train, chosen)
    return PoolState(tuple(chosen.tolist()), rest, {int(i): int(labels[i]) for i in chosen})


# -- synthetic data ---------------------------------------------------------

def _gaussian_pair(rng, n0, n1, separation, name):
    # equal isotropic covariance, means `separation` standard deviations apart
    shift = separation / math.sqrt(2.0)
    x0 = rng.normal(0.0, 1.0, size=(n0, 2))
    x1 = rng.normal(0.0, 1.0, size=(n1, 2)) + shift
    x = np.vstack([x0, x1])
    y = np.repeat([0, 1], [n0, n1])
    return Dataset(name, x, y, 2)


def _r15(rng):
    centers = [(0.0, 0.0)]
    for k in range(7):
        t = 2.0 * math.pi * k / 7
        centers.append((2.0 * math.cos(t), 2.0 * math.sin(t)))
    for k in range(7):
        t = 2.0 * math.pi * (k + 0.5) / 7
        centers.append((6.0 * math.cos(t), 6.0 * math.sin(t)))
    x = np.vstack([rng.normal(c, 0.35, size=(40, 2)) for c in centers])
    return Dataset("r15", x, np.repeat(np.arange(15), 40), 15)


def _ex8a_like(rng):
    # disk (class 0) inside a ring (class 1) with a narrow jittered gap
    n0, n1 = 432, 431
    r0 = np.sqrt(rng.uniform(0.0, 1.0, n0))
    r1 = np.sqrt(rng.uniform(1.25 ** 2, 2.0 ** 2, n1))
    t = rng.uniform(0.0, 2.0 * math.pi, n0 + n1)
    r = np.concatenate([r0, r1])
    x = np.column_stack([r * np.cos(t), r * np.sin(t)]) + rng.normal(0.0, 0.1, size=(n0 + n1, 2))
    return Dataset("ex8a_like", x, np.repeat([0, 1], [n0, n1]), 2)


def _ex8b_like(rng):
    # two Gaussians stretched along the boundary x0 + x1 = 0 (sd 6 along it,
    # 0.8 across), resampled until every point clears a margin of 0.1
    n = 103
    across = np.array([1.0, 1.0]) / math.sqrt(2.0)
    along = np.array([1.0, -1.0]) / math.sqrt(2.0)
    out = []
    for sign in (-1.0, 1.0):
        pts = []
        while len(pts) < n:
            a = rng.normal(0.0, 6.0)
            c = rng.normal(sign * 0.8, 0.8)
            if sign * c >= 0.1:
                pts.append(a * along + c * across)
        out.append(np.array(pts))
    return Dataset("ex8b_like", np.vstack(out), np.repeat([0, 1], [n, n]), 2)


def gen_synthetic(kind: str, seed: int = 0) -> Dataset:
    """Generate one of the synthetic benchmark datasets."""
    rng = np.random.default_rng(seed)
    if kind == "r15":
        return _r15(rng)
    if kind == "ex8a_like":
        return _ex8a_like(rng)
    if kind == "ex8b_like":
        return _ex8b_like(rng)
    if kind == "gcloud_balance":
        return _gaussian_pair(rng, 500, 500, 2.6, kind)
    if kind == "gcloud_unbalance":
        # class 1 is the majority (positive) class, 643:357 ~ 1.8
        return _gaussian_pair(rng, 357, 643, 3.2, kind)
    raise ValueError(f"unknown synthetic dataset {kind!r}; choose from {SYNTHETIC_KINDS}")


def write_csv(ds: Dataset, path) -> None:
    """Write ``ds`` as ``x0..x{d-1},label`` with a header row."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{j}" for j in range(ds.dim)] + ["label"])
        for row, lab in zip(ds.features, ds.labels):
            w.writerow([repr(float(v)) for v in row] + [int(lab)])
