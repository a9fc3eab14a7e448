"""Monte Carlo estimation of success probabilities.

Estimates are reproducible by construction: trial i draws from a stream that
depends only on (master seed, i), trials are aggregated in fixed chunks with
integer counters, and the thread count only changes who runs which chunk.
Wilson score intervals are used throughout; unlike the normal-approximation
interval they stay sane at p_hat = 0 or 1, which lazy strategies produce.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from math import sqrt
from typing import Optional

import numpy as np

from .samplers import make_sampler
from .schedule import Schedule
from .strategies import Strategy, strategy_from_spec
from .walk import Problem

SCHEMA_VERSION = 1
_CHUNK = 4096
_Z95 = 1.959963984540054


def wilson_interval(successes: int, trials: int, z: float = _Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion (default 95%)."""
    if trials == 0:
        return 0.0, 1.0
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = (z / denom) * sqrt(p * (1.0 - p) / trials + z * z / (4.0 * trials * trials))
    # the exact interval always contains p; keep that under float roundoff
    return max(0.0, min(center - half, p)), min(1.0, max(center + half, p))


@dataclass(frozen=True)
class McConfig:
    """One estimation task: problem, strategy spec, trial count, master seed."""

    problem: Problem
    strategy: dict
    trials: int
    master_seed: int
    threads: int = 1
    per_window: bool = False
    store_failures: int = 0
    schedule: Optional[Schedule] = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")


@dataclass
class EstimateReport:
    """Success estimate with Wilson interval and optional per-stage counters."""

    problem: Problem
    strategy: dict
    trials: int
    master_seed: int
    successes: int
    p_hat: float
    wilson_lo: float
    wilson_hi: float
    stage_stats: Optional[list[dict]] = None
    failures: Optional[list] = None
    wall_time_s: float = 0.0
    threads: int = 1

    def to_json_dict(self, include_runtime: bool = True) -> dict:
        out = {
            "schema_version": SCHEMA_VERSION,
            "problem": {"d": self.problem.d, "n": self.problem.n, "m": self.problem.m},
            "strategy": self.strategy,
            "trials": self.trials,
            "master_seed": self.master_seed,
            "successes": self.successes,
            "p_hat": self.p_hat,
            "wilson_lo": self.wilson_lo,
            "wilson_hi": self.wilson_hi,
        }
        if self.stage_stats is not None:
            out["stage_stats"] = self.stage_stats
        if self.failures is not None:
            out["failures"] = self.failures
        if include_runtime:
            out["runtime"] = {"wall_time_s": self.wall_time_s, "threads": self.threads}
        return out

    def to_json(self, include_runtime: bool = True) -> str:
        return json.dumps(self.to_json_dict(include_runtime), indent=2, sort_keys=True)


def _stage_rows(counters: dict[str, np.ndarray], schedule: Schedule) -> list[dict]:
    rows = []
    for k in range(1, schedule.u + 2):
        cond = int(counters["cond"][k])
        stay = int(counters["cond_stay"][k])
        row = {
            "stage": k,
            "t_prev": schedule.times[k - 1],
            "t_k": schedule.times[k],
            "half_width": schedule.half_widths[k],
            "cond_events": cond,
            "stay_events": stay,
            "no_hit_events": int(counters["cond_nohit"][k]),
            "overshoot_events": int(counters["cond_overshoot"][k]),
            "failed_prior_events": int(counters["cond_failed_prior"][k]),
            "alive_trials": int(counters["alive"][k]),
            "hit_trials": int(counters["hit"][k]),
            "overshoot_trials": int(counters["overshoot"][k]),
        }
        if cond > 0:
            lo, hi = wilson_interval(stay, cond)
            row.update(p_stay=stay / cond, wilson_lo=lo, wilson_hi=hi,
                       status="ok")
        else:
            row.update(p_stay=None, wilson_lo=None, wilson_hi=None,
                       status="insufficient data")
        rows.append(row)
    return rows


def _resolve_strategy(config: McConfig) -> tuple[Strategy, Optional[Schedule]]:
    strat = strategy_from_spec(config.strategy, config.problem, config.schedule)
    sched = config.schedule
    if sched is None:
        inner = getattr(strat, "inner", strat)
        sched = getattr(inner, "schedule", None)
    return strat, sched


def estimate_success(config: McConfig, force_generic: bool = False) -> EstimateReport:
    """Monte Carlo success estimate over independent trials.

    Identical configs give identical reports (wall time aside) at any thread
    count.  A strategy that violates admissibility aborts the whole batch
    with the offending trial index.
    """
    t0 = time.perf_counter()
    strategy, schedule = _resolve_strategy(config)
    sampler = make_sampler(strategy, config.problem, force_generic=force_generic)
    chunks = [(lo, min(lo + _CHUNK, config.trials))
              for lo in range(0, config.trials, _CHUNK)]

    def run(span):
        lo, hi = span
        return sampler.run_chunk(config.master_seed, lo, hi,
                                 keep_failures=config.store_failures)

    if config.threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            results = list(pool.map(run, chunks))
    else:
        results = [run(span) for span in chunks]

    successes = sum(r.successes for r in results)
    counters = None
    if sampler.collects_stages:
        counters = {}
        for r in results:
            for key, arr in r.stage_counters.items():
                if key in counters:
                    counters[key] = counters[key] + arr
                else:
                    counters[key] = arr.copy()
    failures = None
    if config.store_failures:
        failures = []
        for r in results:
            if r.failure_samples:
                failures.extend(r.failure_samples)
            if len(failures) >= config.store_failures:
                break
        failures = failures[:config.store_failures]

    lo, hi = wilson_interval(successes, config.trials)
    stage_stats = _stage_rows(counters, schedule) if counters is not None else None
    return EstimateReport(
        problem=config.problem, strategy=strategy.spec_dict(),
        trials=config.trials, master_seed=config.master_seed,
        successes=successes, p_hat=successes / config.trials,
        wilson_lo=lo, wilson_hi=hi, stage_stats=stage_stats,
        failures=failures, wall_time_s=time.perf_counter() - t0,
        threads=config.threads)


def window_conditionals(config: McConfig,
                        schedule: Optional[Schedule] = None) -> dict:
    """Per-stage window-passage estimates for a windowed strategy.

    For each stage k: the frequency of landing inside window k at t_k among
    trials that were inside window k-1 at t_{k-1}, with its Wilson interval
    and the split of failures into "origin never hit" and "hit but drifted
    out" (plus trials that had already failed an earlier stage).  Also
    reports the product of the stage estimates next to the overall success
    rate; the product is the staged lower-bound shape of the success
    argument and should not exceed the overall rate by more than Monte Carlo
    noise.
    """
    if schedule is not None and config.schedule is None:
        config = replace(config, schedule=schedule, per_window=True)
    report = estimate_success(config)
    if report.stage_stats is None:
        raise ValueError("window_conditionals needs a windowed strategy")
    product = 1.0
    product_defined = True
    for row in report.stage_stats:
        if row["p_stay"] is None:
            product_defined = False
            break
        product *= row["p_stay"]
    return {
        "schema_version": SCHEMA_VERSION,
        "stages": report.stage_stats,
        "stage_product": product if product_defined else None,
        "p_hat": report.p_hat,
        "successes": report.successes,
        "trials": report.trials,
        "report": report,
    }


def _sweep_cell_result(cell: dict, master_seed: int, default_trials: int,
                       threads: int) -> dict:
    problem = Problem(d=cell.get("d", 1), n=cell["n"], m=cell["m"])
    spec = dict(cell["strategy"])
    trials = int(cell.get("trials", default_trials))
    config = McConfig(problem=problem, strategy=spec, trials=trials,
                      master_seed=master_seed, threads=threads)
    report = estimate_success(config)
    return {
        "d": problem.d, "n": problem.n, "m": problem.m,
        "strategy": spec.get("name"), "delayed": bool(spec.get("delayed", False)),
        "params": json.dumps({k: v for k, v in spec.items()
                              if k not in ("name", "delayed")}, sort_keys=True),
        "trials": trials, "master_seed": master_seed,
        "successes": report.successes, "p_hat": report.p_hat,
        "wilson_lo": report.wilson_lo, "wilson_hi": report.wilson_hi,
        "status": "ok", "error": "",
    }


SWEEP_COLUMNS = ("cell", "d", "n", "m", "strategy", "delayed", "params",
                 "trials", "master_seed", "successes", "p_hat",
                 "wilson_lo", "wilson_hi", "status", "error")


def report_to_csv(report: EstimateReport, fh) -> None:
    """One-row CSV rendering of an estimate (sweep column layout)."""
    import csv

    spec = dict(report.strategy)
    row = {
        "cell": 0, "d": report.problem.d, "n": report.problem.n,
        "m": report.problem.m, "strategy": spec.pop("name", ""),
        "delayed": bool(spec.pop("delayed", False)),
        "params": json.dumps(spec, sort_keys=True),
        "trials": report.trials, "master_seed": report.master_seed,
        "successes": report.successes, "p_hat": report.p_hat,
        "wilson_lo": report.wilson_lo, "wilson_hi": report.wilson_hi,
        "status": "ok", "error": "",
    }
    writer = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS)
    writer.writeheader()
    writer.writerow(row)


def sweep(cells: list[dict], master_seed: int, default_trials: int = 10_000,
          threads: int = 1, out_dir: Optional[str] = None) -> list[dict]:
    """Run estimate_success over a grid of cells; failures don't stop the sweep.

    Every cell uses the master seed directly (common random numbers across
    cells, and a one-cell sweep reproduces estimate_success exactly).  With
    ``out_dir`` set, each finished cell is written to cell_NNNN.json and
    skipped on a rerun, making sweeps resumable per cell.
    """
    import os

    rows = []
    for idx, cell in enumerate(cells):
        marker = None
        if out_dir is not None:
            os.makedirs(out_dir, exist_ok=True)
            marker = os.path.join(out_dir, f"cell_{idx:04d}.json")
            if os.path.exists(marker):
                with open(marker) as fh:
                    row = json.load(fh)
                row["cell"] = idx
                rows.append(row)
                continue
        try:
            row = _sweep_cell_result(cell, master_seed, default_trials, threads)
        except Exception as exc:  # record and continue
            row = {"d": cell.get("d", 1), "n": cell.get("n"), "m": cell.get("m"),
                   "strategy": cell.get("strategy", {}).get("name"),
                   "delayed": bool(cell.get("strategy", {}).get("delayed", False)),
                   "params": "", "trials": cell.get("trials", default_trials),
                   "master_seed": master_seed, "successes": None, "p_hat": None,
                   "wilson_lo": None, "wilson_hi": None,
                   "status": "error", "error": f"{type(exc).__name__}: {exc}"}
        row["cell"] = idx
        if marker is not None:
            with open(marker, "w") as fh:
                json.dump(row, fh, sort_keys=True)
        rows.append(row)
    return rows


def sweep_to_csv(rows: list[dict], fh) -> None:
    import csv

    writer = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS)
    writer.writeheader()
    for row in rows:
        writer.writerow({k: row.get(k, "") for k in SWEEP_COLUMNS})
