"""Simulation benchmarks: selection accuracy and prediction error.

Two protocols are provided.

``run_table1``
    Rank all predictors marginally (FBIS importance measure, or absolute
    Pearson correlation for SIS) and count how many true variables land in
    the top ``top_k``.
``run_table2``
    Run IFBIS, then score false positives, false negatives and the mean
    squared prediction error on a fresh test sample drawn from the same
    design, noise included.

Replicate ``r`` of every cell uses data seed ``seed_base + r``; its test
sample uses ``seed_base + r + TEST_SEED_OFFSET``.  Replicates may run in
worker processes; results are collected by replicate index, so the output
does not depend on completion order or on the number of workers.

Runtime
-------
Measured on one core of a current laptop-class CPU at ``n=400, p=1000``:
an FBIS ranking takes about 2 s, SIS a few milliseconds, and an IFBIS
replicate (with its 10,000-point test prediction) 15 to 35 s.  The full
experiment of 100 replicates over all 12 cells therefore needs roughly
``100 * 12 * 2 s`` (about 40 minutes) for table 1 and
``100 * 12 * 30 s`` (about 10 hours) for table 2 on a single core; see
:func:`estimate_runtime`.  Wall time scales down with ``workers``.
"""

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from itertools import product

import numpy as np

from .datagen import SimSpec, gen_example
from .errors import FBISError, IndexOutOfRange
from .ifbis import IfbisConfig, ifbis_predict, ifbis_run
from .screening import ScreeningConfig, fbis_rank, sis_rank

__all__ = [
    "BenchResult",
    "CellStats",
    "STANDARD_GRID",
    "TEST_SEED_OFFSET",
    "estimate_runtime",
    "evaluate_selection",
    "mspe",
    "standard_grid",
    "run_table1",
    "run_table2",
]

TEST_SEED_OFFSET = 1 << 32

# seconds per replicate, single core, n=400 and p=1000
_SECONDS_PER_REPLICATE = {"table1": 2.0, "table2": 30.0}

CSV_HEADER = ("example", "rho", "sigma2", "method", "metric", "mean", "se", "reps")


def standard_grid(examples=(1, 2, 3), rhos=(0.0, 0.5), sigma2s=(1.0, 2.0), n=400, p=1000):
    """All ``(example, rho, sigma2)`` design cells as :class:`SimSpec` objects."""
    return [
        SimSpec(example=e, n=n, p=p, rho=r, sigma2=s)
        for e, r, s in product(examples, rhos, sigma2s)
    ]


STANDARD_GRID = tuple(standard_grid())


def evaluate_selection(selected, truth, p):
    """Set-based selection metrics.

    Parameters
    ----------
    selected, truth : iterable of int
        0-based variable indices.
    p : int
        Number of predictors; every index must lie in ``[0, p)``.

    Returns
    -------
    fp, fn, captured : int
    """
    selected = {int(j) for j in selected}
    truth = {int(j) for j in truth}
    bad = sorted(j for j in selected | truth if not 0 <= j < p)
    if bad:
        raise IndexOutOfRange(f"indices {bad} outside 0..{p - 1}", variables=bad)
    captured = len(selected & truth)
    return len(selected - truth), len(truth - selected), captured


def mspe(predict, test):
    """Mean squared prediction error of ``predict(test.X)`` against ``test.y``."""
    y = np.asarray(test.y, dtype=float)
    if y.size == 0:
        raise ValueError("test set is empty")
    pred = np.asarray(predict(test.X), dtype=float)
    return float(np.mean((y - pred) ** 2))


@dataclass
class CellStats:
    """Replicate values of one metric in one cell, with mean and standard error.

    The standard error is the sample standard deviation over ``sqrt(reps)``;
    with a single replicate it is reported as 0.
    """

    values: list

    @property
    def mean(self):
        return float(np.mean(self.values)) if self.values else float("nan")

    @property
    def se(self):
        if len(self.values) < 2:
            return 0.0
        return float(np.std(self.values, ddof=1) / np.sqrt(len(self.values)))


@dataclass
class BenchResult:
    """Aggregated benchmark output.

    ``cells`` maps ``(example, rho, sigma2, method, metric)`` to
    :class:`CellStats`; keys keep insertion order, which follows the grid.
    """

    reps: int
    cells: dict = field(default_factory=dict)
    settings: dict = field(default_factory=dict)
    fingerprint: str = ""
    notes: list = field(default_factory=list)

    def get(self, example, rho, sigma2, method, metric):
        return self.cells[(example, float(rho), float(sigma2), method, metric)]

    def rows(self):
        for (example, rho, sigma2, method, metric), stats in self.cells.items():
            yield example, rho, sigma2, method, metric, stats.mean, stats.se, len(stats.values)

    def to_csv(self):
        lines = [",".join(CSV_HEADER)]
        for example, rho, sigma2, method, metric, mean, se, reps in self.rows():
            lines.append(
                f"{example},{rho:.17g},{sigma2:.17g},{method},{metric},{mean:.17g},{se:.17g},{reps}"
            )
        return "\n".join(lines) + "\n"

    def to_dict(self):
        return {
            "reps": self.reps,
            "fingerprint": self.fingerprint,
            "settings": self.settings,
            "notes": list(self.notes),
            "cells": [
                {
                    "example": k[0],
                    "rho": k[1],
                    "sigma2": k[2],
                    "method": k[3],
                    "metric": k[4],
                    "mean": s.mean,
                    "se": s.se,
                    "values": list(s.values),
                }
                for k, s in self.cells.items()
            ],
        }

    @classmethod
    def from_dict(cls, d):
        cells = {
            (c["example"], float(c["rho"]), float(c["sigma2"]), c["method"], c["metric"]): CellStats(
                list(c["values"])
            )
            for c in d["cells"]
        }
        return cls(
            reps=d["reps"],
            cells=cells,
            settings=d.get("settings", {}),
            fingerprint=d.get("fingerprint", ""),
            notes=list(d.get("notes", [])),
        )

    def __eq__(self, other):
        if not isinstance(other, BenchResult):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def _fingerprint(settings):
    blob = json.dumps(settings, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()


def _config_dict(cfg):
    return json.loads(json.dumps(asdict(cfg), default=str))


def _annotate(exc, spec, r):
    where = f"example {spec.example}, rho={spec.rho}, sigma2={spec.sigma2}, replicate {r}"
    if isinstance(exc, FBISError):
        exc.args = (f"{where}: {exc}",) + exc.args[1:]
        return exc
    return RuntimeError(f"{where}: {exc!r}")


def _table1_job(args):
    spec, r, seed_base, methods, top_k, cfg = args
    rep = replace(spec, seed=seed_base + r)
    try:
        data = gen_example(rep)
        out = {}
        for method in methods:
            ranking = fbis_rank(data, cfg) if method == "FBIS" else sis_rank(data)
            _, _, captured = evaluate_selection(ranking[:top_k], data.truth, data.p)
            out[method] = {"captured": captured}
        return out
    except Exception as exc:  # annotate with the cell and replicate
        raise _annotate(exc, spec, r) from exc


def _table2_job(args):
    spec, r, seed_base, test_n, cfg = args
    rep = replace(spec, seed=seed_base + r)
    try:
        data = gen_example(rep)
        trace = ifbis_run(data, cfg)
        fp, fn, _ = evaluate_selection(trace.final_set, data.truth, data.p)
        test = gen_example(replace(rep, n=test_n, seed=rep.seed + TEST_SEED_OFFSET))
        err = mspe(lambda X: ifbis_predict(trace, data, X), test)
        return {"IFBIS": {"fp": fp, "fn": fn, "mspe": err}}
    except Exception as exc:
        raise _annotate(exc, spec, r) from exc


def _run(job, tasks, workers):
    if workers is None or workers <= 1 or len(tasks) <= 1:
        return [job(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map preserves submission order
        return list(pool.map(job, tasks))


def _collect(grid, reps, outputs, settings):
    result = BenchResult(reps=reps, settings=settings, fingerprint=_fingerprint(settings))
    it = iter(outputs)
    for spec in grid:
        for r in range(reps):
            for method, metrics in next(it).items():
                for metric, value in metrics.items():
                    key = (spec.example, float(spec.rho), float(spec.sigma2), method, metric)
                    result.cells.setdefault(key, CellStats([])).values.append(value)
    if reps == 1 and result.cells:
        result.notes.append("single replicate: standard errors reported as 0 by convention")
    return result


def run_table1(grid=STANDARD_GRID, reps=100, methods=("FBIS", "SIS"), top_k=20, seed_base=0,
               cfg=None, workers=1):
    """Marginal ranking accuracy: true variables captured in the top ``top_k``.

    Parameters
    ----------
    grid : sequence of SimSpec
        Design cells; their ``seed`` fields are ignored.
    reps : int
        Replicates per cell.
    methods : sequence of {"FBIS", "SIS"}
    top_k : int
    seed_base : int
    cfg : ScreeningConfig, optional
    workers : int
        Worker processes; 1 runs inline.

    Returns
    -------
    BenchResult
        Metric ``captured`` per (cell, method).
    """
    cfg = cfg or ScreeningConfig()
    methods = tuple(methods)
    unknown = set(methods) - {"FBIS", "SIS"}
    if unknown:
        raise ValueError(f"unknown methods {sorted(unknown)}")
    if reps < 1 or top_k < 1:
        raise ValueError("reps and top_k must be at least 1")
    grid = list(grid)
    tasks = [(spec, r, seed_base, methods, top_k, cfg) for spec in grid for r in range(reps)]
    settings = {
        "protocol": "table1",
        "grid": [asdict(s) for s in grid],
        "reps": reps,
        "methods": list(methods),
        "top_k": top_k,
        "seed_base": seed_base,
        "screening": _config_dict(cfg),
    }
    return _collect(grid, reps, _run(_table1_job, tasks, workers), settings)


def run_table2(grid=STANDARD_GRID, reps=100, test_n=10000, seed_base=0, cfg=None, workers=1):
    """IFBIS false positives, false negatives and test-sample MSPE per cell.

    Returns
    -------
    BenchResult
        Metrics ``fp``, ``fn`` and ``mspe`` under method ``IFBIS``.
    """
    cfg = cfg or IfbisConfig()
    if reps < 1 or test_n < 1:
        raise ValueError("reps and test_n must be at least 1")
    grid = list(grid)
    tasks = [(spec, r, seed_base, test_n, cfg) for spec in grid for r in range(reps)]
    settings = {
        "protocol": "table2",
        "grid": [asdict(s) for s in grid],
        "reps": reps,
        "test_n": test_n,
        "seed_base": seed_base,
        "test_seed_offset": TEST_SEED_OFFSET,
        "ifbis": _config_dict(cfg),
    }
    return _collect(grid, reps, _run(_table2_job, tasks, workers), settings)


def estimate_runtime(table, reps=100, cells=12, workers=1):
    """Rough single-machine wall time in seconds for a benchmark run."""
    per = _SECONDS_PER_REPLICATE[table]
    return per * reps * cells / max(1, workers)
