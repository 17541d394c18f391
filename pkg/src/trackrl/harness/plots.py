"""Merge per-seed metrics files into plot-ready CSV tables.

For each algorithm found in the input directory this writes two files:

``plot_returns_<algo>.csv``
    header ``step,mean,sd,n``: mean and population standard deviation
    of the evaluation return over seeds, and the seed count.

``plot_kpis_<algo>.csv``
    header ``step`` followed by ``<q>_mean,<q>_sd`` for each of
    ``ect, egamma, ex, ay, alat, along, laps`` in that order, aggregated
    the same way.

Rows cover the evaluation steps present in every merged seed file, in
increasing order, so one straggler seed cannot invent rows the others
lack. ``best_k`` keeps only the k seeds with the highest final return
(ties broken toward the lower seed number) before aggregating.
"""

import os
import re

import numpy as np

from ..errors import ConfigError, UsageError
from .run import CSV_HEADER

_METRICS_RE = re.compile(r"^metrics_(.+)_seed(\d+)\.csv$")
_KPI_NAMES = ("ect", "egamma", "ex", "ay", "alat", "along", "laps")
# Column index in the metrics CSV for each aggregated quantity.
_COLS = {"return": 2, "ect": 3, "egamma": 4, "ex": 5, "ay": 6,
         "alat": 7, "along": 8, "laps": 9}


def read_metrics(path):
    """Parse one per-seed metrics CSV into a list of typed row dicts."""
    with open(path) as f:
        header = f.readline().strip()
        if header != CSV_HEADER:
            raise ConfigError(f"{path}: unexpected metrics header {header!r}")
        rows = []
        for raw in f:
            cells = raw.strip().split(",")
            if len(cells) != len(CSV_HEADER.split(",")):
                raise ConfigError(f"{path}: malformed row {raw!r}")
            row = {"step": int(cells[0]), "seed": int(cells[1]),
                   "termination": cells[10]}
            for name, col in _COLS.items():
                row[name] = float(cells[col])
            rows.append(row)
    return rows


def _discover(in_dir):
    if not os.path.isdir(in_dir):
        raise UsageError(f"metrics directory {in_dir} does not exist")
    groups = {}
    for name in sorted(os.listdir(in_dir)):
        m = _METRICS_RE.match(name)
        if m is None:
            continue
        algo, seed = m.group(1), int(m.group(2))
        groups.setdefault(algo, {})[seed] = \
            read_metrics(os.path.join(in_dir, name))
    return groups


def _select_best(per_seed, best_k):
    """Seeds ranked by final-evaluation return, highest first."""
    finals = []
    for seed, rows in per_seed.items():
        if not rows:
            raise ConfigError(f"seed {seed} has no evaluation rows")
        finals.append((-rows[-1]["return"], seed))
    finals.sort()
    keep = {seed for _, seed in finals[:best_k]}
    return {s: rows for s, rows in per_seed.items() if s in keep}


def emit_plots(in_dir, out_dir, best_k=None):
    """Aggregate per-seed metrics into per-algorithm plot tables."""
    groups = _discover(in_dir)
    if not groups:
        raise UsageError(f"no metrics files found in {in_dir}")
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for algo in sorted(groups):
        per_seed = groups[algo]
        if best_k is not None:
            if not 1 <= best_k <= len(per_seed):
                raise ConfigError(
                    f"best_k {best_k} out of range for {len(per_seed)} seeds")
            per_seed = _select_best(per_seed, best_k)
        by_seed = {seed: {r["step"]: r for r in rows}
                   for seed, rows in per_seed.items()}
        steps = None
        for table in by_seed.values():
            steps = set(table) if steps is None else steps & set(table)
        steps = sorted(steps)
        if not steps:
            raise ConfigError(f"{algo}: seeds share no evaluation steps")
        seeds = sorted(by_seed)

        ret_path = os.path.join(out_dir, f"plot_returns_{algo}.csv")
        with open(ret_path, "w", newline="") as f:
            f.write("step,mean,sd,n\n")
            for step in steps:
                vals = np.array([by_seed[s][step]["return"] for s in seeds])
                f.write(f"{step},{repr(float(vals.mean()))},"
                        f"{repr(float(vals.std()))},{len(seeds)}\n")
        written.append(ret_path)

        kpi_path = os.path.join(out_dir, f"plot_kpis_{algo}.csv")
        with open(kpi_path, "w", newline="") as f:
            cols = ["step"]
            for name in _KPI_NAMES:
                cols += [f"{name}_mean", f"{name}_sd"]
            f.write(",".join(cols) + "\n")
            for step in steps:
                cells = [str(step)]
                for name in _KPI_NAMES:
                    vals = np.array([by_seed[s][step][name] for s in seeds])
                    cells += [repr(float(vals.mean())),
                              repr(float(vals.std()))]
                f.write(",".join(cells) + "\n")
        written.append(kpi_path)
    return written
