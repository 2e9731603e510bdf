"""Sweep orchestration: expand a config into runs, execute them, write one CSV."""
from __future__ import annotations

import csv
import io
import os
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass, fields

from ..dispatcher import find_critical_point
from ..errors import ConfigError
from ..families import make_test_objective
from ..oracle import HessianMode
from ..reduction import reduction_to_unbounded
from ..restarted import restarted_agd


@dataclass(frozen=True)
class ResultRow:
    run_id: str
    family: str
    d: int
    method: str
    epsilon: float
    n_H: int
    oracle_mode: str
    delta: float
    grad_queries: object
    hess_queries: object
    iterations: object
    final_grad_norm: object
    f_final: object
    terminated: str
    wall_ms: object
    seed: int


FIELDS = tuple(f.name for f in fields(ResultRow))


@dataclass(frozen=True)
class Cell:
    run_id: str
    config: object
    eps: float
    n_H: int
    seed: int
    method: str


@dataclass
class SweepResult:
    rows: list
    summary: dict
    path: object = None
    errors: list = None


def expand(config):
    """Cells in (eps, n_H, seed, method, repeat) order with zero-padded run ids."""
    cells = []
    i = 0
    for eps in config.eps_list:
        for n_H in config.n_H_list:
            for seed in config.seeds:
                for method in config.methods:
                    for _ in range(config.repeat):
                        cells.append(Cell(f"{config.name}-{i:05d}", config, eps, n_H, seed, method))
                        i += 1
    return cells


def _solve(cell):
    cfg = cell.config
    obj = make_test_objective(cfg.family, cfg.d, cfg.params, cell.seed)
    mode = HessianMode.parse(cfg.oracle, cfg.delta, cell.seed)
    delta = mode.certified_delta(obj) if cfg.oracle == "zero" else cfg.delta
    kwargs = dict(scale=cfg.scale, max_iterations=cfg.max_iterations, record_trace=False)
    if cfg.max_grad_queries is not None:
        kwargs["max_grad_queries"] = cfg.max_grad_queries
    if cell.method == "dispatch":
        report, decision = find_critical_point(obj, delta, cell.eps, cell.n_H, mode, **kwargs)
        label = f"dispatch:{decision.branch}"
    elif cell.method == "restarted":
        report, label = restarted_agd(obj, delta, cell.eps, cell.n_H, mode, **kwargs), "restarted"
    else:
        report = reduction_to_unbounded(obj, delta, cell.eps, cell.n_H, mode, **kwargs)
        label = "reduction"
    return report, label, delta


def run_cell(cell):
    """Run one cell; failures become an ``error:<Type>`` row instead of raising."""
    cfg = cell.config
    start = time.perf_counter()
    try:
        report, label, delta = _solve(cell)
    except Exception as exc:  # recorded in-row so the sweep continues
        wall = (time.perf_counter() - start) * 1e3
        row = ResultRow(cell.run_id, cfg.family, cfg.d, cell.method, cell.eps, cell.n_H, cfg.oracle,
                        cfg.delta, "", "", "", "", "", f"error:{type(exc).__name__}",
                        round(wall, 3) if cfg.record_timing else "", cell.seed)
        return row, f"{cell.run_id}: {type(exc).__name__}: {exc}"
    wall = (time.perf_counter() - start) * 1e3
    row = ResultRow(
        cell.run_id, cfg.family, cfg.d, label, cell.eps, cell.n_H, cfg.oracle, float(delta),
        report.ledger.grad_count, report.ledger.hess_count, report.iterations,
        report.grad_norm_final, report.f_final, report.terminated,
        round(wall, 3) if cfg.record_timing else "", cell.seed)
    return row, None


def worker_count(n_cells, requested=None):
    cap = os.environ.get("CRITPOINT_THREADS")
    n = requested or os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError as exc:
            raise ConfigError(f"CRITPOINT_THREADS must be an integer, got {cap!r}") from exc
    return max(1, min(n, n_cells))


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def rows_to_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(FIELDS)
    for row in rows:
        writer.writerow([_fmt(v) for v in astuple(row)])
    return buf.getvalue()


def summarize(rows):
    """Median grad_queries per (experiment, n_H), successful runs only."""
    groups = {}
    for row in rows:
        if row.terminated.startswith("error"):
            continue
        key = (row.run_id.rsplit("-", 1)[0], row.n_H)
        groups.setdefault(key, []).append(row.grad_queries)
    return {key: statistics.median(vals) for key, vals in sorted(groups.items())}


def format_summary(summary):
    lines = [f"{'experiment':<20} {'n_H':>6} {'median grad_queries':>22}"]
    for (name, n_H), med in summary.items():
        lines.append(f"{name:<20} {n_H:>6} {med:>22.1f}")
    return "\n".join(lines)


def run_sweep(configs, out=None, workers=None):
    """Run every cell of every config, sorted by run id, and write the CSV when a path is known."""
    if not isinstance(configs, (list, tuple)):
        configs = [configs]
    cells = [cell for cfg in configs for cell in expand(cfg)]
    path = out or next((c.out for c in configs if c.out), None)
    if path is not None:
        parent = os.path.dirname(os.path.abspath(path))
        if not os.path.isdir(parent) or not os.access(parent, os.W_OK):
            raise OSError(f"output directory {parent} is not writable")
    n = worker_count(len(cells), workers)
    if n == 1:
        results = [run_cell(c) for c in cells]
    else:
        with ProcessPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(run_cell, cells))
    results.sort(key=lambda r: r[0].run_id)
    rows = [r for r, _ in results]
    errors = [e for _, e in results if e]
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(rows_to_csv(rows))
    return SweepResult(rows, summarize(rows), path, errors)
