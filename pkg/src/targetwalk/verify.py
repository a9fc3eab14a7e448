"""Pinned property suites behind the ``verify`` subcommand.

Each suite returns (check name, passed, detail) tuples; the CLI prints one
line per check and exits nonzero if any fails.  Default sizes match the
acceptance settings; ``fast`` shrinks them for smoke tests.
"""

from __future__ import annotations

import math

import numpy as np

from . import analysis as _analysis
from . import exact as _exact
from . import strategies as _strategies
from . import walk as _walk
from .mc import McConfig, estimate_success
from .rng import trial_generator
from .schedule import ScheduleParams1D, ScheduleParams2D, build_schedule_1d, build_schedule_2d
from .walk import Problem

Result = tuple[str, bool, str]


def _suite_reflection(trials, seed, fast) -> list[Result]:
    xmax, lmax = (8, 80) if fast else (20, 400)
    rep = _analysis.check_reflection(xmax=xmax, lmax=lmax)
    detail = (f"{rep.checked_pairs} opposite-parity pairs equal exactly, "
              f"{rep.excluded_same_parity} same-parity pairs excluded")
    if rep.mismatches:
        detail = f"mismatches at (x,l): {rep.mismatches[:8]}"
    return [("reflection.identity", rep.passed, detail)]


def _hoeffding_one(problem: Problem, schedule, spec, trials, seed) -> Result:
    config = McConfig(problem=problem, strategy=spec, trials=trials,
                      master_seed=seed, schedule=schedule)
    report = estimate_success(config)
    hrep = _analysis.check_hoeffding(schedule, report.stage_stats)
    worst = max((r.freq - r.bound for r in hrep.rows
                 if r.status == "ok" and r.freq is not None), default=0.0)
    detail = (f"d={problem.d} n={problem.n} m={problem.m}: all stage overshoot "
              f"frequencies within bound+3se (worst freq-bound {worst:.2e})")
    if not hrep.passed:
        bad = [r.stage for r in hrep.rows if r.status == "ok" and not r.within]
        detail = f"d={problem.d}: overshoot above bound at stages {bad}"
    return (f"hoeffding.d{problem.d}", hrep.passed, detail)


def _suite_hoeffding(trials, seed, fast) -> list[Result]:
    trials = trials or (2000 if fast else 10_000)
    out = []
    if fast:
        p1 = Problem(d=1, n=10_000, m=100)
        p2 = Problem(d=2, n=10_000, m=100)
    else:
        p1 = Problem(d=1, n=1_000_000, m=10_000)
        p2 = Problem(d=2, n=1_000_000, m=1_000)
    s1 = build_schedule_1d(ScheduleParams1D(n=p1.n, m=p1.m, eta=0.5))
    out.append(_hoeffding_one(p1, s1, {"name": "windowed_1d", "eta": 0.5},
                              trials, seed))
    s2 = build_schedule_2d(ScheduleParams2D(n=p2.n, m=p2.m, epsilon=0.5))
    out.append(_hoeffding_one(p2, s2, {"name": "windowed_2d", "epsilon": 0.5},
                              trials, seed))
    return out


def _suite_localtime(trials, seed, fast) -> list[Result]:
    horizons = tuple(2 ** k for k in ((10, 11, 12) if fast else (10, 11, 12, 13, 14)))
    rep = _analysis.check_local_time_ratio(horizons=horizons)
    detail = (f"min ratio {rep.min_ratio:.4f} > {rep.ratio_floor}, "
              f"den/log stability {rep.log_stability:.4f} <= 1.1")
    return [("localtime.ratio", rep.passed, detail)]


def _dominance_strategies(problem: Problem):
    yield _strategies.always_step()
    yield _strategies.lazy_max(problem)
    yield _strategies.lazy_then_sprint(problem)
    if problem.n > problem.m and problem.m >= 2:
        try:
            sched = build_schedule_1d(ScheduleParams1D(n=problem.n, m=problem.m))
            yield _strategies.windowed_1d(sched, problem)
        except Exception:
            pass


def _suite_dominance(trials, seed, fast) -> list[Result]:
    ns = (64,) if fast else (64, 256, 1024)
    ms = (4, 16) if fast else (4, 16, 64)
    tol = 1e-10
    worst = -math.inf
    worst_at = None
    ok = True
    for n in ns:
        for m in ms:
            problem = Problem(d=1, n=n, m=m)
            opt, _ = _exact.optimal_value(problem)
            for strat in _dominance_strategies(problem):
                val = _exact.evaluate_strategy_exact(strat, problem)
                gap = val - opt
                if gap > worst:
                    worst, worst_at = gap, (n, m, strat.name)
                if gap > tol:
                    ok = False
    detail = (f"max strategy-value minus optimal over grid: {worst:.3e} "
              f"at {worst_at} (tolerance {tol})")
    return [("dominance.grid", ok, detail)]


def _suite_invariants(trials, seed, fast) -> list[Result]:
    out = []
    reps = 100 if fast else 300
    # trajectory invariants under every built-in strategy
    problems = [Problem(d=1, n=60, m=4), Problem(d=2, n=40, m=3)]
    bad = None
    for problem in problems:
        strategies = [_strategies.always_step(), _strategies.lazy_max(problem),
                      _strategies.lazy_then_sprint(problem)]
        if problem.d == 1:
            sched = build_schedule_1d(ScheduleParams1D(n=problem.n, m=problem.m))
            strategies.append(_strategies.windowed_1d(sched, problem))
        strategies += [_strategies.delayed_wrapper(s, problem)
                       for s in list(strategies)]
        for strat in strategies:
            for t in range(reps):
                g = trial_generator(seed + t, t)
                try:
                    traj, _ = _walk.run_trajectory(strat, problem, g)
                    _walk.validate_trajectory(traj, problem)
                except Exception as exc:
                    bad = f"{strat.name} on d={problem.d}: {exc}"
                    break
            if bad:
                break
        if bad:
            break
    out.append(("invariants.trajectories", bad is None,
                bad or f"{reps} runs per strategy satisfy all invariants"))

    # with m = 1 the process is pure SSRW: endpoint law must match exactly
    p = Problem(d=1, n=10, m=1)
    n_trials = trials or (20_000 if fast else 100_000)
    config = McConfig(problem=p, strategy={"name": "lazy_max"}, trials=n_trials,
                      master_seed=seed)
    rep = estimate_success(config)
    exact_p = _exact.ssrw_return_probability(10, 1)
    se = math.sqrt(exact_p * (1 - exact_p) / n_trials)
    ok = abs(rep.p_hat - exact_p) <= 3 * se
    out.append(("invariants.m1_ssrw_law", ok,
                f"lazy_max at m=1 returns {rep.p_hat:.5f} vs SSRW {exact_p:.5f} "
                f"(3se = {3 * se:.5f})"))

    # delayed mode: step count over a pure-delayed horizon is Binomial(n, 1/m)
    p = Problem(d=1, n=20, m=4)
    strat = _strategies.delayed_wrapper(_strategies.lazy_max(p), p)
    counts = []
    for t in range(n_trials // 10):
        traj, _ = _walk.run_trajectory(strat, p, trial_generator(seed + 1, t))
        steps = sum(1 for a, b in zip(traj.positions, traj.positions[1:]) if a != b)
        counts.append(steps)
    mean = float(np.mean(counts))
    expected = p.n / p.m
    se = math.sqrt(p.n * (1 / p.m) * (1 - 1 / p.m) / len(counts))
    ok = abs(mean - expected) <= 3 * se
    out.append(("invariants.delayed_step_mean", ok,
                f"mean true steps {mean:.3f} vs n/m = {expected} (3se = {3 * se:.3f})"))
    return out


_SUITES = {
    "reflection": _suite_reflection,
    "hoeffding": _suite_hoeffding,
    "localtime": _suite_localtime,
    "dominance": _suite_dominance,
    "invariants": _suite_invariants,
}


def run_suite(name: str, trials: int | None = None, seed: int = 20240601,
              fast: bool = False) -> list[Result]:
    if name not in _SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {sorted(_SUITES)}")
    return _SUITES[name](trials, seed, fast)
