"""Law-exact per-trial samplers behind the Monte Carlo engine.

Naive step-by-step simulation costs one draw per time step, which is
hopeless at horizons of 10^6.  The built-in strategies all decompose a
trajectory into segments whose endpoint laws are known exactly:

* seek segments (step every time until the origin is hit) are simulated
  step-by-step but cost O(sqrt(stage length)) in expectation;
* hold / lazy segments take one SSRW step every m-th time step, so the
  checkpoint displacement is an endpoint of a fair +/-1 walk with a known
  number of steps (or a Binomial(len, 1/m) number in delayed mode);
* after a stage fails the strategy steps for the whole remaining horizon,
  so every later checkpoint increment is again a plain walk endpoint.

Each trial consumes only its own counter-based stream, so results are
independent of chunking and thread count.  The generic sampler runs any
strategy one step at a time and is the reference the fast paths are tested
against.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import rng as _rng
from .errors import AdmissibilityError
from .schedule import Schedule
from .strategies import (AlwaysStep, DelayedWrapper, LazyMax, LazyThenSprint,
                         Strategy, Windowed)
from .walk import Problem, is_origin, run_trajectory

_BLOCK0 = 256
_BLOCK_MAX = 16384


@dataclass
class StageOutcome:
    """Checkpoint summary for one trial of a windowed strategy."""

    alive: bool      # the strategy had not failed before this stage
    hit: bool        # the seek reached the origin within the stage
    w: object        # position at the stage's checkpoint time


@dataclass
class TrialOutcome:
    success: bool
    final: object
    stages: Optional[list[StageOutcome]] = None


def _walk_endpoint_1d(g: np.random.Generator, steps: int) -> int:
    if steps == 0:
        return 0
    return 2 * int(g.binomial(steps, 0.5)) - steps


def _walk_endpoint_2d(g: np.random.Generator, steps: int) -> tuple[int, int]:
    # diagonal coordinates of a 2d SSRW are independent 1d walks
    s1 = _walk_endpoint_1d(g, steps)
    s2 = _walk_endpoint_1d(g, steps)
    return ((s1 + s2) // 2, (s1 - s2) // 2)


def _sign_blocks(g: np.random.Generator, length: int, streams: int) -> np.ndarray:
    """(streams, length) array of fair +/-1 signs, 8 steps per random byte."""
    nbytes = streams * ((length + 7) // 8)
    raw = np.frombuffer(g.bytes(nbytes), dtype=np.uint8)
    bits = np.unpackbits(raw.reshape(streams, -1), axis=1)[:, :length]
    return bits.astype(np.int8) * 2 - 1


def _seek_1d(g: np.random.Generator, x: int, t_cur: int, t_end: int):
    """Step every time until the position hits 0 or t_end is reached.

    Returns (tau, x_end): tau is the hit time in (t_cur, t_end] or None.
    Draws signs in growing blocks; cost is proportional to the hit time.
    """
    block = _BLOCK0
    while t_cur < t_end:
        length = min(block, t_end - t_cur)
        signs = _sign_blocks(g, length, 1)[0]
        pos = x + np.cumsum(signs, dtype=np.int64)
        hits = np.nonzero(pos == 0)[0]
        if hits.size:
            idx = int(hits[0])
            return t_cur + idx + 1, 0
        x = int(pos[-1])
        t_cur += length
        block = min(block * 4, _BLOCK_MAX)
    return None, x


def _seek_2d(g: np.random.Generator, x: tuple[int, int], t_cur: int, t_end: int):
    a, b = x[0] + x[1], x[0] - x[1]
    block = _BLOCK0
    while t_cur < t_end:
        length = min(block, t_end - t_cur)
        signs = _sign_blocks(g, length, 2)
        pa = a + np.cumsum(signs[0], dtype=np.int64)
        pb = b + np.cumsum(signs[1], dtype=np.int64)
        hits = np.nonzero((pa == 0) & (pb == 0))[0]
        if hits.size:
            idx = int(hits[0])
            return t_cur + idx + 1, (0, 0)
        a, b = int(pa[-1]), int(pb[-1])
        t_cur += length
        block = min(block * 4, _BLOCK_MAX)
    return None, ((a + b) // 2, (a - b) // 2)


def _windowed_trial(g: np.random.Generator, schedule: Schedule, delayed: bool,
                    d: int) -> TrialOutcome:
    m = schedule.m
    times = schedule.times
    u = schedule.u
    origin = 0 if d == 1 else (0, 0)
    seek = _seek_1d if d == 1 else _seek_2d
    endpoint = _walk_endpoint_1d if d == 1 else _walk_endpoint_2d
    x = origin
    t = 0
    failed = False
    stages = []
    for k in range(1, u + 2):
        t_end = times[k]
        if failed:
            inc = endpoint(g, t_end - t)
            x = x + inc if d == 1 else (x[0] + inc[0], x[1] + inc[1])
            stages.append(StageOutcome(alive=False, hit=False, w=x))
            t = t_end
            continue
        tau, x = seek(g, x, t, t_end)
        if tau is None:
            if k <= u:
                failed = True
            stages.append(StageOutcome(alive=True, hit=False, w=x))
            t = t_end
            continue
        hold_len = t_end - tau
        if delayed:
            steps = int(g.binomial(hold_len, 1.0 / m)) if hold_len else 0
        elif k == u + 1:
            steps = 0                      # terminal stage stands to the horizon
        else:
            steps = hold_len // m
        x = endpoint(g, steps)
        stages.append(StageOutcome(alive=True, hit=True, w=x))
        t = t_end
    return TrialOutcome(success=is_origin(x), final=x, stages=stages)


def _lazy_sprint_trial(g: np.random.Generator, problem: Problem,
                       delayed: bool) -> TrialOutcome:
    n, m, d = problem.n, problem.m, problem.d
    endpoint = _walk_endpoint_1d if d == 1 else _walk_endpoint_2d
    seek = _seek_1d if d == 1 else _seek_2d
    switch = n - m
    if switch >= 1:
        steps = int(g.binomial(switch, 1.0 / m)) if delayed else switch // m
        x = endpoint(g, steps)
        t = switch
    else:
        x = 0 if d == 1 else (0, 0)
        t = 0
    tau, x = seek(g, x, t, n)
    if tau is None:
        return TrialOutcome(success=False, final=x)
    if delayed:
        steps = int(g.binomial(n - tau, 1.0 / m)) if n > tau else 0
        x = endpoint(g, steps)
    else:
        x = 0 if d == 1 else (0, 0)
    return TrialOutcome(success=is_origin(x), final=x)


@dataclass
class ChunkCounts:
    """Deterministic integer aggregates for one block of trials."""

    successes: int = 0
    n_trials: int = 0
    stage_counters: Optional[dict[str, np.ndarray]] = None
    failure_samples: Optional[list] = None


_STAGE_KEYS = ("cond", "cond_stay", "cond_nohit", "cond_overshoot",
               "cond_failed_prior", "alive", "hit", "overshoot")


def _new_stage_counters(u: int) -> dict[str, np.ndarray]:
    return {key: np.zeros(u + 2, dtype=np.int64) for key in _STAGE_KEYS}


def _tally_stages(counters: dict[str, np.ndarray], schedule: Schedule,
                  stages: list[StageOutcome]) -> None:
    prev_in = True                      # W_0 is the origin, inside window 0
    for k, rec in enumerate(stages, start=1):
        in_k = schedule.in_window(rec.w, k)
        if prev_in:
            counters["cond"][k] += 1
            if in_k:
                counters["cond_stay"][k] += 1
            if not rec.alive:
                counters["cond_failed_prior"][k] += 1
            elif not rec.hit:
                counters["cond_nohit"][k] += 1
            elif not in_k:
                counters["cond_overshoot"][k] += 1
        if rec.alive:
            counters["alive"][k] += 1
            if rec.hit:
                counters["hit"][k] += 1
                if not in_k:
                    counters["overshoot"][k] += 1
        prev_in = in_k


class Sampler:
    """Base chunk runner; subclasses fill run_chunk."""

    collects_stages = False

    def run_chunk(self, master_seed: int, lo: int, hi: int,
                  keep_failures: int = 0) -> ChunkCounts:
        raise NotImplementedError


class EndpointSampler(Sampler):
    """Strategies whose whole trajectory is one batch of fair steps.

    Covers always_step (n steps) and lazy_max (floor(n/m) steps, one forced
    step per stand block).  Endpoints come from the vectorized counter-based
    bit stream, so a 10^6-trial estimate is a handful of array operations.
    """

    def __init__(self, problem: Problem, steps: int):
        self.problem = problem
        self.steps = steps

    def run_chunk(self, master_seed, lo, hi, keep_failures=0):
        idx = np.arange(lo, hi, dtype=np.uint64)
        d = self.problem.d
        if d == 1:
            end = _rng.bit_sum_walk(master_seed, idx, self.steps)
            ok = end == 0
        else:
            n_words = (self.steps + 63) // 64
            s1 = _rng.bit_sum_walk(master_seed, idx, self.steps, word_offset=0)
            s2 = _rng.bit_sum_walk(master_seed, idx, self.steps, word_offset=n_words)
            ok = (s1 == 0) & (s2 == 0)
        out = ChunkCounts(successes=int(ok.sum()), n_trials=hi - lo)
        if keep_failures:
            bad = np.nonzero(~ok)[0][:keep_failures]
            if d == 1:
                out.failure_samples = [(int(lo + i), int(end[i])) for i in bad]
            else:
                out.failure_samples = [
                    (int(lo + i), ((int(s1[i]) + int(s2[i])) // 2,
                                   (int(s1[i]) - int(s2[i])) // 2)) for i in bad]
        return out


class PerTrialSampler(Sampler):
    """Chunk runner that loops trials, one Philox stream per trial."""

    def __init__(self, problem: Problem):
        self.problem = problem

    def run_trial(self, g: np.random.Generator) -> TrialOutcome:
        raise NotImplementedError

    def run_chunk(self, master_seed, lo, hi, keep_failures=0):
        out = ChunkCounts(n_trials=hi - lo)
        if self.collects_stages:
            out.stage_counters = _new_stage_counters(self.schedule.u)
        for i in range(lo, hi):
            g = _rng.trial_generator(master_seed, i)
            try:
                res = self.run_trial(g)
            except AdmissibilityError as exc:
                exc.trial_index = i
                raise
            if res.success:
                out.successes += 1
            elif keep_failures and (out.failure_samples is None
                                    or len(out.failure_samples) < keep_failures):
                if out.failure_samples is None:
                    out.failure_samples = []
                out.failure_samples.append((i, res.final))
            if out.stage_counters is not None and res.stages is not None:
                _tally_stages(out.stage_counters, self.schedule, res.stages)
        return out


class WindowedSampler(PerTrialSampler):
    collects_stages = True

    def __init__(self, problem: Problem, schedule: Schedule, delayed: bool):
        super().__init__(problem)
        self.schedule = schedule
        self.delayed = delayed

    def run_trial(self, g):
        return _windowed_trial(g, self.schedule, self.delayed, self.problem.d)


class LazySprintSampler(PerTrialSampler):
    def __init__(self, problem: Problem, delayed: bool):
        super().__init__(problem)
        self.delayed = delayed

    def run_trial(self, g):
        return _lazy_sprint_trial(g, self.problem, self.delayed)


class DelayedEndpointSampler(PerTrialSampler):
    """Delayed lazy_max: Binomial(n, 1/m) true steps, then a walk endpoint."""

    def __init__(self, problem: Problem):
        super().__init__(problem)

    def run_trial(self, g):
        steps = int(g.binomial(self.problem.n, 1.0 / self.problem.m))
        if self.problem.d == 1:
            x = _walk_endpoint_1d(g, steps)
        else:
            x = _walk_endpoint_2d(g, steps)
        return TrialOutcome(success=is_origin(x), final=x)


class GenericSampler(PerTrialSampler):
    """Reference path: run any strategy one step at a time."""

    def __init__(self, problem: Problem, strategy: Strategy):
        super().__init__(problem)
        self.strategy = strategy

    def run_trial(self, g):
        traj, success = run_trajectory(self.strategy, self.problem, g)
        return TrialOutcome(success=success, final=traj.positions[-1])


def make_sampler(strategy: Strategy, problem: Problem,
                 force_generic: bool = False) -> Sampler:
    """Pick the fastest law-exact sampler for a strategy."""
    if force_generic:
        return GenericSampler(problem, strategy)
    delayed = isinstance(strategy, DelayedWrapper)
    inner = strategy.inner if delayed else strategy
    if isinstance(inner, AlwaysStep):
        return EndpointSampler(problem, steps=problem.n)
    if isinstance(inner, LazyMax):
        if delayed and problem.m > 1:
            return DelayedEndpointSampler(problem)
        return EndpointSampler(problem, steps=problem.n // problem.m)
    if isinstance(inner, LazyThenSprint):
        return LazySprintSampler(problem, delayed=delayed)
    if isinstance(inner, Windowed):
        return WindowedSampler(problem, inner.schedule, delayed=delayed)
    return GenericSampler(problem, strategy)
