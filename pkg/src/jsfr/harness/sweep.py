"""Sweep orchestration and CSV output.

CSV columns, in order:

* one column per sweep axis, named as in the config (``alpha``, ``osnr_db``, ...)
* ``trial``       trial index within the point (0-based)
* ``seed``        trial seed passed to :func:`run_trial`
* ``ber``, ``evm`` (dB), ``q_db``
* ``converged``   1 if the equalizer converged and sync succeeded, else 0
* ``errors``, ``bits``  raw bit-error counts behind ``ber``
* ``note``        failure reason, empty when none

Floats are written with ``repr`` precision (``.17g``), independent of locale.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import ExperimentConfig, sweep_points, validate
from .pipeline import run_trial, trial_seed

METRIC_COLUMNS = ("trial", "seed", "ber", "evm", "q_db", "converged", "errors", "bits", "note")


@dataclass
class SweepResult:
    axes: list
    rows: list = field(default_factory=list)  # dicts keyed by axes + METRIC_COLUMNS

    @property
    def columns(self):
        return list(self.axes) + list(METRIC_COLUMNS)

    def column(self, name):
        return np.array([r[name] for r in self.rows])

    def select(self, **where):
        """Rows whose axis values match ``where`` (floats compared to 1e-12)."""
        return [r for r in self.rows
                if all(math.isclose(r[k], v, rel_tol=0, abs_tol=1e-12) if isinstance(v, float)
                       else r[k] == v for k, v in where.items())]


def _task(args):
    cfg, point, trial, seed = args
    m = run_trial(cfg, point, seed)
    row = dict(point)
    row.update(trial=trial, seed=seed, ber=m.ber, evm=m.evm, q_db=m.q_db,
               converged=m.converged, errors=m.errors, bits=m.bits, note=m.note)
    return row


def sweep(cfg: ExperimentConfig, workers=1):
    """Run every (point, trial) of the config's sweep; row order is fixed by
    the config (points in Cartesian order, trials inner) whatever ``workers`` is."""
    validate(cfg)
    points = sweep_points(cfg)
    axes = list(cfg.sweep.axes)
    tasks = [(cfg, p, t, trial_seed(cfg.seed, t))
             for p in points for t in range(cfg.trials_per_point)]
    if workers <= 1 or len(tasks) <= 1:
        rows = [_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    return SweepResult(axes, rows)


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if hasattr(v, "value"):
        return str(v.value)
    return str(v)


def emit_csv(result: SweepResult, path):
    """Write ``result`` as CSV (header always present); ``path`` may be an open text file."""
    if hasattr(path, "write"):
        _write_rows(result, path)
        return
    with open(path, "w", newline="", encoding="utf-8") as fh:
        _write_rows(result, fh)


def _write_rows(result, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(result.columns)
    for r in result.rows:
        w.writerow([_fmt(r[c]) for c in result.columns])


def summarize(result: SweepResult, over=()):
    """Mean BER per point; axes listed in ``over`` are reduced with max (worst case)."""
    keep = [a for a in result.axes if a not in over]
    groups = {}
    for r in result.rows:
        groups.setdefault(tuple(r[a] for a in result.axes), []).append(r["ber"])
    per_point = {k: float(np.mean(v)) for k, v in groups.items()}
    out = {}
    for k, ber in per_point.items():
        key = tuple(v for a, v in zip(result.axes, k) if a in keep)
        out[key] = max(out.get(key, 0.0), ber)
    return keep, out
