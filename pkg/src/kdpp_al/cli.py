"""Command-line experiment runner.

    kdpp-al run <config> [--key=value ...]
    kdpp-al plot <curves.csv> [--out=DIR]
    kdpp-al gen <kind> <out.csv> [--seed=N]
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import os
import shutil
import sys
import tempfile
import warnings
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .alcore import run_al
from .config import RunConfig, load_config
from .dataset import SYNTHETIC_KINDS, gen_synthetic, load_csv, write_csv
from .evaluation import METRICS, aubc, p_band, paired_ttest, rank_table, summarize

CURVE_COLUMNS = ("dataset", "strategy", "S", "trial", "budget") + METRICS


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _resolve_dataset(cfg: RunConfig, ref: str):
    if ref in SYNTHETIC_KINDS:
        return gen_synthetic(ref, cfg.synthetic_seed)
    return load_csv(ref, cfg.label_column, cfg.header)


def _run_cell(args):
    ds, strategy, s, trial, seed, budget, al = args
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        record = run_al(ds, strategy, budget, s, seed, al)
    return (ds.name, strategy, s, trial), record.to_dict()


def _check_writable(out: Path):
    try:
        out.mkdir(parents=True, exist_ok=True)
        with tempfile.NamedTemporaryFile(dir=out):
            pass
    except OSError as exc:
        raise ValueError(f"output directory {out} is not writable: {exc}") from None


def execute(cfg: RunConfig) -> dict:
    """Run every (dataset, strategy, S, trial) cell and write all outputs.

    Returns ``{cell key: record dict}``. Nothing is written to the output
    directory until every cell has finished.
    """
    _check_writable(cfg.output)
    datasets = [_resolve_dataset(cfg, ref) for ref in cfg.datasets]
    names = [d.name for d in datasets]
    if len(set(names)) != len(names):
        raise ValueError(f"dataset names collide: {names}")
    jobs = [(ds, strat, s, t, cfg.base_seed + t, cfg.budget, cfg.al)
            for ds, strat, s, t in itertools.product(
                datasets, cfg.strategies, cfg.batch_sizes, range(cfg.trials))]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.workers, len(jobs))) as pool:
            results = dict(pool.map(_run_cell, jobs))
    else:
        results = dict(map(_run_cell, jobs))
    files = render_outputs(cfg, names, results)
    _commit(cfg.output, files)
    return results


def _commit(out: Path, files: dict):
    """Stage every file in a scratch directory, then move them into place."""
    stage = Path(tempfile.mkdtemp(prefix=".staging-", dir=out))
    try:
        for rel, text in files.items():
            p = stage / rel
            p.parent.mkdir(parents=True, exist_ok=True)
            p.write_text(text, encoding="utf-8")
        for rel in files:
            dest = out / rel
            dest.parent.mkdir(parents=True, exist_ok=True)
            os.replace(stage / rel, dest)
    finally:
        shutil.rmtree(stage, ignore_errors=True)


def _csv_text(cfg: RunConfig, header, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# config_hash={cfg.config_hash} base_seed={cfg.base_seed}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def render_outputs(cfg: RunConfig, names, results: dict) -> dict:
    """Relative path -> file contents for every output file."""
    files = {}
    cells = [(d, st, s, t) for d in names for st in cfg.strategies
             for s in cfg.batch_sizes for t in range(cfg.trials)]

    for key in cells:
        d, st, s, t = key
        files[f"records/{d}__{st}__S{s}__t{t}.json"] = json.dumps(
            results[key], sort_keys=True, indent=1) + "\n"

    curve_rows = []
    aubcs = defaultdict(list)
    for key in cells:
        rec = results[key]
        for i, b in enumerate(rec["budgets"]):
            curve_rows.append(list(key) + [b] + [rec["scores"][m][i] for m in METRICS])
        if len(rec["budgets"]) >= 2:
            for m in METRICS:
                aubcs[(key[0], key[1], key[2], m)].append(
                    aubc(list(zip(rec["budgets"], rec["scores"][m]))))
    files["curves.csv"] = _csv_text(cfg, CURVE_COLUMNS, curve_rows)

    summary = {(r.dataset, r.strategy, r.batch_size, r.metric): r for r in summarize(aubcs)}
    summary_rows = []
    for m in METRICS:
        table = {(d, s): {st: summary[(d, st, s, m)].mean for st in cfg.strategies}
                 for d in names for s in cfg.batch_sizes if (d, cfg.strategies[0], s, m) in summary}
        ranks, avg = rank_table(table, cfg.strategies) if table else ({}, {})
        for (d, s), row in table.items():
            for st in cfg.strategies:
                r = summary[(d, st, s, m)]
                summary_rows.append([d, st, s, m, r.mean, r.sd, r.trials,
                                     ranks[(d, s)][st], avg[st]])
    files["summary.csv"] = _csv_text(
        cfg, ("dataset", "strategy", "S", "metric", "mean_aubc", "sd_aubc", "trials",
              "rank", "avg_rank"), summary_rows)

    t_rows = []
    for d in names:
        for s in cfg.batch_sizes:
            for m in METRICS:
                for a, b in itertools.combinations(cfg.strategies, 2):
                    va, vb = aubcs.get((d, a, s, m), []), aubcs.get((d, b, s, m), [])
                    if len(va) >= 2 and len(va) == len(vb):
                        p = paired_ttest(va, vb)
                        t_rows.append([d, s, m, a, b, p, p_band(p)])
                    else:
                        t_rows.append([d, s, m, a, b, float("nan"), "n/a"])
    files["ttest.csv"] = _csv_text(
        cfg, ("dataset", "S", "metric", "strategy_a", "strategy_b", "p_value", "band"), t_rows)

    sel_rows = []
    for key in cells:
        for sel in results[key]["selections"]:
            for j, idx in enumerate(sel["indices"]):
                sel_rows.append(list(key) + [sel["round"], sel["labeled_before"], idx,
                                             sel["labels"][j], sel["informativeness"][j],
                                             sel["representativeness"][j],
                                             sel["diversity"][j]])
    files["selections.csv"] = _csv_text(
        cfg, ("dataset", "strategy", "S", "trial", "round", "labeled_before", "index", "label",
              "informativeness", "representativeness", "diversity"), sel_rows)
    return files


# -- plot -----------------------------------------------------------------------

def read_curves(path) -> list:
    path = Path(path)
    if not path.is_file():
        raise ValueError(f"curves file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader, None)
    if header is None or tuple(header) != CURVE_COLUMNS:
        raise ValueError(f"{path}: expected header {','.join(CURVE_COLUMNS)}")
    rows = []
    for lineno, row in enumerate(reader, 2):
        if len(row) != len(CURVE_COLUMNS):
            raise ValueError(f"{path}: row {lineno} has {len(row)} fields")
        try:
            rows.append((row[0], row[1], int(row[2]), int(row[3]), int(row[4]),
                         *(float(v) for v in row[5:])))
        except ValueError:
            raise ValueError(f"{path}: row {lineno} is not numeric where expected") from None
    return rows


def plot_data(curves_path, out_dir=None) -> list:
    """Write one whitespace-delimited mean-curve file per (dataset, metric).

    Columns are the budget, then one mean-over-trials column per
    ``strategy_S{S}`` combination; ``nan`` marks budgets a combination never
    reached.
    """
    rows = read_curves(curves_path)
    if not rows:
        raise ValueError("curves file holds no strategies")
    out_dir = Path(out_dir) if out_dir is not None else Path(curves_path).parent
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for dataset in dict.fromkeys(r[0] for r in rows):
        sub = [r for r in rows if r[0] == dataset]
        combos = list(dict.fromkeys((r[1], r[2]) for r in sub))
        budgets = sorted({r[4] for r in sub})
        for mi, metric in enumerate(METRICS):
            acc = defaultdict(list)
            for r in sub:
                acc[(r[1], r[2], r[4])].append(r[5 + mi])
            lines = ["# budget " + " ".join(f"{st}_S{s}" for st, s in combos)]
            for b in budgets:
                vals = [float(np.mean(acc[(st, s, b)])) if acc.get((st, s, b)) else float("nan")
                        for st, s in combos]
                lines.append(" ".join([str(b)] + [repr(v) for v in vals]))
            path = out_dir / f"{dataset}_{metric}.dat"
            path.write_text("\n".join(lines) + "\n", encoding="utf-8")
            written.append(path)
    return written


# -- entry point ------------------------------------------------------------------

def _parse_overrides(extra) -> dict:
    out = {}
    for tok in extra:
        if not tok.startswith("--") or "=" not in tok:
            raise ValueError(f"unrecognized argument {tok!r}; overrides look like --key=value")
        key, value = tok[2:].split("=", 1)
        out[key.strip()] = value.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kdpp-al", description="k-DPP batch active learning benchmarks")
    sub = p.add_subparsers(dest="verb", required=True)
    r = sub.add_parser("run", help="run the experiment grid of a config file")
    r.add_argument("config")
    pl = sub.add_parser("plot", help="mean budget curves for external plotting")
    pl.add_argument("curves")
    pl.add_argument("--out", default=None)
    g = sub.add_parser("gen", help="write a synthetic dataset to CSV")
    g.add_argument("kind", choices=SYNTHETIC_KINDS)
    g.add_argument("out")
    g.add_argument("--seed", type=int, default=0)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    try:
        if args.verb == "run":
            cfg = load_config(args.config, _parse_overrides(extra))
            execute(cfg)
            print(f"wrote results to {cfg.output}")
        else:
            if extra:
                parser.error(f"unrecognized arguments: {' '.join(extra)}")
            if args.verb == "plot":
                for path in plot_data(args.curves, args.out):
                    print(path)
            else:
                write_csv(gen_synthetic(args.kind, args.seed), args.out)
    except (ValueError, OSError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"kdpp-al: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
