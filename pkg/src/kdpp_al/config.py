"""Experiment configuration: flat ``key = value`` files with dotted sections."""
from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field
from pathlib import Path

from . import committee as cm
from .alcore import STRATEGIES, ALConfig
from .dataset import SYNTHETIC_KINDS
from .kernels import KERNEL_KINDS

WORKERS_ENV = "KDPP_AL_WORKERS"

DEFAULTS = {
    "datasets": "gcloud_balance",
    "strategies": "kdpp_multi,uniform,margin,kcenter",
    "batch_sizes": "1,5,10",
    "trials": "10",
    "base_seed": "0",
    "budget": "exhaust",
    "init_size": "20",
    "train_fraction": "0.6",
    "synthetic_seed": "0",
    "kernel.kind": "laplacian",
    "kernel.c0": "1.0",
    "kernel.d0": "3",
    "committee.members": ",".join(cm.KINDS),
    "glad.max_iter": "100",
    "glad.tol": "1e-5",
    "output": "results",
    "workers": "",
    "csv.label_column": "-1",
    "csv.header": "true",
}
_HYPER_KEYS = {f"committee.{k}": k for k in cm.DEFAULT_HYPER}


@dataclass(frozen=True)
class RunConfig:
    datasets: tuple
    strategies: tuple
    batch_sizes: tuple
    trials: int
    base_seed: int
    budget: int | None          # None = query the whole pool
    al: ALConfig
    output: Path
    workers: int
    synthetic_seed: int = 0
    label_column: str = "-1"
    header: bool = True
    raw: dict = field(default_factory=dict)

    @property
    def config_hash(self) -> str:
        canon = "\n".join(f"{k}={self.raw[k]}" for k in sorted(self.raw) if k not in
                          ("output", "workers"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def parse_lines(text: str) -> dict:
    """``key = value`` pairs; ``#`` starts a comment, blank lines are skipped."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key = value")
        key, value = (p.strip() for p in line.split("=", 1))
        if not key:
            raise ValueError(f"config line {lineno}: empty key")
        out[key] = value
    return out


def _split_list(value: str) -> tuple:
    return tuple(v.strip() for v in value.split(",") if v.strip())


def _as_bool(key, value):
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"{key}: expected a boolean, got {value!r}")


def _as_int(key, value):
    try:
        return int(value)
    except ValueError:
        raise ValueError(f"{key}: expected an integer, got {value!r}") from None


def _as_float(key, value):
    try:
        return float(value)
    except ValueError:
        raise ValueError(f"{key}: expected a number, got {value!r}") from None


def _hyper_value(key, value):
    if value.lower() == "none":
        return None
    default = cm.DEFAULT_HYPER[_HYPER_KEYS[key]]
    if isinstance(default, int) and not isinstance(default, bool):
        return _as_int(key, value)
    return _as_float(key, value)


def build_config(values: dict, base_dir: Path | None = None) -> RunConfig:
    """Validate raw key/value pairs (merged over the defaults)."""
    unknown = set(values) - set(DEFAULTS) - set(_HYPER_KEYS)
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    raw = dict(DEFAULTS)
    raw.update(values)
    base_dir = base_dir or Path.cwd()

    datasets = []
    for name in _split_list(raw["datasets"]):
        if name in SYNTHETIC_KINDS:
            datasets.append(name)
            continue
        path = Path(name)
        if not path.is_absolute():
            path = base_dir / path
        if not path.is_file():
            raise ValueError(f"dataset {name!r} is neither a synthetic kind "
                             f"{SYNTHETIC_KINDS} nor an existing CSV file")
        datasets.append(str(path))
    if not datasets:
        raise ValueError("datasets: at least one dataset is required")

    strategies = _split_list(raw["strategies"])
    bad = [s for s in strategies if s not in STRATEGIES]
    if bad or not strategies:
        raise ValueError(f"strategies: unknown {bad}; choose from {STRATEGIES}")
    if len(set(strategies)) != len(strategies):
        raise ValueError("strategies: duplicates")

    batch_sizes = tuple(_as_int("batch_sizes", s) for s in _split_list(raw["batch_sizes"]))
    if not batch_sizes or min(batch_sizes) < 1:
        raise ValueError("batch_sizes: need one or more positive integers")

    trials = _as_int("trials", raw["trials"])
    if trials < 1:
        raise ValueError("trials must be at least 1")
    budget = None if raw["budget"].strip().lower() == "exhaust" else _as_int("budget", raw["budget"])
    if budget is not None and budget < 0:
        raise ValueError("budget must be nonnegative or 'exhaust'")

    members = _split_list(raw["committee.members"])
    bad = [m for m in members if m not in cm.KINDS]
    if bad:
        raise ValueError(f"committee.members: unknown {bad}; choose from {cm.KINDS}")
    if len(members) < 2 and "kdpp_multi" in strategies:
        raise ValueError("committee.members: kdpp_multi needs at least two members")
    hyper = {_HYPER_KEYS[k]: _hyper_value(k, v) for k, v in raw.items() if k in _HYPER_KEYS}

    kind = raw["kernel.kind"]
    if kind not in KERNEL_KINDS:
        raise ValueError(f"kernel.kind: unknown {kind!r}; choose from {KERNEL_KINDS}")

    al = ALConfig(
        init_size=_as_int("init_size", raw["init_size"]),
        train_fraction=_as_float("train_fraction", raw["train_fraction"]),
        kernel=kind,
        c0=_as_float("kernel.c0", raw["kernel.c0"]),
        d0=_as_float("kernel.d0", raw["kernel.d0"]),
        committee=members,
        committee_hyper=hyper,
        glad_max_iter=_as_int("glad.max_iter", raw["glad.max_iter"]),
        glad_tol=_as_float("glad.tol", raw["glad.tol"]),
    )
    if not 0 < al.train_fraction < 1:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    if al.init_size < 2:
        raise ValueError("init_size must be at least 2")

    workers = resolve_workers(raw["workers"])
    output = Path(raw["output"])
    if not output.is_absolute():
        output = base_dir / output

    return RunConfig(
        datasets=tuple(datasets), strategies=strategies, batch_sizes=batch_sizes,
        trials=trials, base_seed=_as_int("base_seed", raw["base_seed"]), budget=budget,
        al=al, output=output, workers=workers,
        synthetic_seed=_as_int("synthetic_seed", raw["synthetic_seed"]),
        label_column=raw["csv.label_column"], header=_as_bool("csv.header", raw["csv.header"]),
        raw=raw,
    )


def resolve_workers(configured: str = "") -> int:
    """Worker count: environment variable, then config, then CPU count."""
    env = os.environ.get(WORKERS_ENV, "").strip()
    value = env or str(configured).strip()
    if value:
        n = _as_int(WORKERS_ENV if env else "workers", value)
        if n < 1:
            raise ValueError("worker count must be at least 1")
        return n
    return os.cpu_count() or 1


def load_config(path, overrides: dict | None = None) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ValueError(f"config file not found: {path}")
    values = parse_lines(path.read_text(encoding="utf-8"))
    values.update(overrides or {})
    return build_config(values, base_dir=path.parent)
