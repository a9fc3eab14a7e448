"""Exact computations: optimal value by backward induction, exact strategy
evaluation by forward distribution propagation, and SSRW functionals used as
oracles elsewhere (hitting tails, return probabilities, local times).

All float routines use 64-bit arithmetic; the small-instance oracles
(``brute_force_value``, the integer hitting-tail counts) use exact integer /
rational arithmetic so they can back equality assertions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Optional

import numpy as np
from scipy.special import gammaln

from .errors import AdmissibilityError, BudgetError, SignatureError
from .strategies import Strategy
from .walk import Decision, Problem

_LN2 = math.log(2.0)

DEFAULT_DP_BUDGET = 2.0e9          # backward-induction transitions
DEFAULT_EVAL_BUDGET = 6.0e8        # forward-propagation cell-steps
_FULL_TABLE_CELLS = 5.0e7          # cap for keeping every time slice


# ---------------------------------------------------------------------------
# SSRW point probabilities and derived quantities
# ---------------------------------------------------------------------------

def ssrw_pmf_1d(steps, offset) -> np.ndarray:
    """P(Y_steps = offset) for 1d SSRW, vectorized over either argument."""
    steps = np.asarray(steps, dtype=np.int64)
    offset = np.asarray(offset, dtype=np.int64)
    valid = ((steps + offset) % 2 == 0) & (np.abs(offset) <= steps)
    k = (steps + offset) // 2
    with np.errstate(invalid="ignore"):
        logp = (gammaln(steps + 1.0) - gammaln(k + 1.0) - gammaln(steps - k + 1.0)
                - steps * _LN2)
    out = np.where(valid, np.exp(np.where(valid, logp, 0.0)), 0.0)
    if out.ndim == 0:
        return float(out)
    return out


def ssrw_return_probability(steps: int, d: int) -> float:
    """P(Y_steps = 0) for SSRW on Z^d, d in {1, 2}.

    In two dimensions the diagonal coordinates (x+y, x-y) are independent 1d
    walks, so the return probability is the 1d value squared.
    """
    p1 = ssrw_pmf_1d(steps, 0)
    return float(p1) if d == 1 else float(p1) ** 2


def return_probabilities_2d(x: tuple[int, int], horizon: int) -> np.ndarray:
    """p_i = P(Y_i = (0,0) | Y_0 = x) for i = 1..horizon, 2d SSRW.

    Uses the diagonal decomposition: with a = x0 + x1, b = x0 - x1 the two
    diagonal coordinates are independent 1d walks started at a and b.
    """
    a, b = x[0] + x[1], x[0] - x[1]
    i = np.arange(1, horizon + 1, dtype=np.int64)
    return ssrw_pmf_1d(i, -a) * ssrw_pmf_1d(i, -b)


def expected_local_time(x: tuple[int, int], horizon: int) -> float:
    """Expected number of visits to the origin in 1..horizon from start x."""
    return float(return_probabilities_2d(x, horizon).sum())


# ---------------------------------------------------------------------------
# First-passage tails for the 1d walk
# ---------------------------------------------------------------------------

def hitting_survivor_counts(x: int, lmax: int) -> list[int]:
    """Exact path counts c_l with P(tau_0 > l | start x) = c_l / 2**l.

    Absorbing-barrier convolution over integer path counts: a walk from
    ``x != 0`` is killed on its first visit to 0; c_l counts the surviving
    length-l paths.
    """
    x = abs(int(x))
    if x == 0:
        raise ValueError("start must be nonzero")
    # counts[y-1] = number of surviving paths currently at y >= 1
    counts = [0] * (x + lmax + 2)
    counts[x - 1] = 1
    out = [1]
    for _ in range(lmax):
        nxt = [0] * len(counts)
        for y_idx in range(x + lmax):
            c = counts[y_idx]
            if c:
                if y_idx > 0:      # y_idx == 0 is y = 1; moving down absorbs
                    nxt[y_idx - 1] += c
                nxt[y_idx + 1] += c
        counts = nxt
        out.append(sum(counts))
    return out


def reflection_window_count(x: int, l: int) -> int:
    """Exact count with P(-|x| < Y_l < |x|) = count / 2**l for SSRW from 0."""
    x = abs(int(x))
    total = 0
    for y in range(max(-x + 1, -l), min(x, l + 1)):
        if (l + y) % 2 == 0:
            total += math.comb(l, (l + y) // 2)
    return total


@dataclass(frozen=True)
class HittingTail:
    """Exact first-passage tail from x plus the reflection-formula value.

    The two agree exactly when l and |x| have opposite parity; the flag lets
    callers separate genuine mismatches from the parity caveat.
    """

    x: int
    l: int
    tail: float
    reflection: float
    opposite_parity: bool


def hitting_tail_1d(x: int, l: int) -> HittingTail:
    """P(tau_0 > l | start x) for the 1d walk, by absorbing convolution."""
    if x == 0:
        raise ValueError("start must be nonzero")
    opp = (abs(x) + l) % 2 == 1
    if l <= 2048:
        tail = float(Fraction(hitting_survivor_counts(x, l)[l], 2 ** l))
        refl = float(Fraction(reflection_window_count(x, l), 2 ** l))
    else:
        tail = hitting_tail_curve(x, [l])[l]
        ys = np.arange(-abs(x) + 1, abs(x))
        refl = float(np.sum(ssrw_pmf_1d(np.int64(l), ys)))
    return HittingTail(x=x, l=l, tail=tail, reflection=refl, opposite_parity=opp)


def hitting_tail_curve(x: int, l_points, clip_sigmas: float = 6.0) -> dict[int, float]:
    """P(tau_0 > l | start x) at each requested l, float64 absorbing sweep.

    The state space is clipped at x + clip_sigmas*sqrt(lmax); clipped mass is
    counted as surviving, which biases the tail upward by at most the
    probability of ever reaching the clip boundary (~2*Phi(-clip_sigmas),
    below 1e-8 at the default).
    """
    x = abs(int(x))
    if x == 0:
        raise ValueError("start must be nonzero")
    l_points = sorted(set(int(l) for l in l_points))
    lmax = l_points[-1]
    top = x + int(math.ceil(clip_sigmas * math.sqrt(max(lmax, 1)))) + 16
    q = np.zeros(top + 1)          # q[y] = mass at y, live range y = 1..top-1
    q[x] = 1.0
    absorbed = 0.0
    out = {}
    want = set(l_points)
    if 0 in want:
        out[0] = 1.0
    for l in range(1, lmax + 1):
        absorbed += 0.5 * q[1]
        nxt = np.zeros_like(q)
        # mass stepping up from top-1 leaves the grid for good; it can never
        # come back to absorb, so dropping it only inflates the tail by the
        # (negligible) escape probability
        nxt[1:top] = 0.5 * (q[2:top + 1] + q[0:top - 1])
        q = nxt
        if l in want:
            out[l] = float(1.0 - absorbed)
    return out


# ---------------------------------------------------------------------------
# Optimal value by backward induction
# ---------------------------------------------------------------------------

@dataclass
class ValueTable:
    """Backward-induction output: the optimal value and, when kept, the
    per-time-slice value function and extracted policy.

    Positions are stored on a centered grid of half-width n; ``values[i]``
    has shape (2n+3,) x m in one dimension and (2n+3, 2n+3, m) in two (one
    guard cell on each side).  ``policy[i]`` uses 1 for STAND, 0 for STEP.
    """

    problem: Problem
    value: float
    keep: str = "none"
    values: Optional[list] = None
    policy: Optional[list] = None

    @property
    def center(self) -> int:
        return self.problem.n + 1

    def value_at(self, i: int, x, j: int) -> float:
        if self.values is None:
            raise ValueError("table was built with keep='none'")
        c = self.center
        if self.problem.d == 1:
            return float(self.values[i][c + x, j])
        return float(self.values[i][c + x[0], c + x[1], j])

    def policy_at(self, i: int, x, j: int) -> Decision:
        if self.policy is None:
            raise ValueError("policy was not requested")
        c = self.center
        if self.problem.d == 1:
            stand = self.policy[i][c + x, j]
        else:
            stand = self.policy[i][c + x[0], c + x[1], j]
        return Decision.STAND if stand else Decision.STEP

    def policy_runs(self, i: int, j: int) -> list[tuple[int, int, Decision]]:
        """Run-length view of the d=1 policy row at (i, j): (x_lo, x_hi, decision)."""
        if self.problem.d != 1 or self.policy is None:
            raise ValueError("run-length view needs a kept d=1 policy")
        n, c = self.problem.n, self.center
        runs = []
        xs = range(-n, n + 1)
        cur = None
        start = None
        for x in xs:
            val = bool(self.policy[i][c + x, j])
            if cur is None:
                cur, start = val, x
            elif val != cur:
                runs.append((start, x - 1, Decision.STAND if cur else Decision.STEP))
                cur, start = val, x
        runs.append((start, n, Decision.STAND if cur else Decision.STEP))
        return runs

    def to_csv(self, fh) -> None:
        """Write rows i,x,j,V,policy for every reachable state (d=1 only)."""
        if self.problem.d != 1:
            raise ValueError("CSV export supports d=1 tables")
        if self.values is None:
            raise ValueError("table was built with keep='none'")
        n, m, c = self.problem.n, self.problem.m, self.center
        fh.write("i,x,j,V,policy\n")
        for i in range(n + 1):
            reach = min(i, n)
            for x in range(-reach, reach + 1):
                for j in range(m):
                    v = self.values[i][c + x, j]
                    if self.policy is not None and i < n:
                        pi = "stand" if self.policy[i][c + x, j] else "step"
                    else:
                        pi = ""
                    fh.write(f"{i},{x},{j},{v!r},{pi}\n")


def _dp_budget_check(problem: Problem, budget: float) -> None:
    width = 2 * problem.n + 1
    transitions = float(width) ** problem.d * problem.m * problem.n
    slice_bytes = 2 * (width + 2.0) ** problem.d * problem.m * 8
    if transitions > budget:
        raise BudgetError(
            f"backward induction needs ~{transitions:.3g} transitions "
            f"(budget {budget:.3g}) and ~{slice_bytes / 1e6:.0f} MB of slices; "
            f"raise the budget to force the run",
            required_transitions=transitions, required_bytes=slice_bytes)


def optimal_value(problem: Problem, budget: float = DEFAULT_DP_BUDGET,
                  keep: str = "none", want_policy: bool = False
                  ) -> tuple[float, ValueTable]:
    """Optimal probability of ending at the origin, with policy extraction.

    Backward induction over states (x, j): the value of a state is the max
    of standing (allowed while j+1 <= m-1) and stepping (average over the 2d
    neighbors with counter reset).  Ties prefer STAND, so the extracted
    policy is deterministic and takes as few random steps as possible.

    keep: "none" (value only), "full" (every time slice, small instances).
    """
    if keep not in ("none", "full"):
        raise ValueError(f"keep must be 'none' or 'full', got {keep!r}")
    _dp_budget_check(problem, budget)
    n, m = problem.n, problem.m
    width = 2 * n + 3
    c = n + 1
    if keep == "full" or want_policy:
        cells = (n + 1.0) * width ** problem.d * m
        if cells > _FULL_TABLE_CELLS:
            raise BudgetError(
                f"keeping the full table needs {cells:.3g} cells "
                f"(cap {_FULL_TABLE_CELLS:.3g}); use keep='none'",
                required_bytes=cells * 8)
    if problem.d == 1:
        value, values, policy = _optimal_1d(n, m, width, c, keep, want_policy)
    else:
        value, values, policy = _optimal_2d(n, m, width, c, keep, want_policy)
    table = ValueTable(problem=problem, value=value, keep=keep,
                       values=values, policy=policy)
    return value, table


def _optimal_1d(n, m, width, c, keep, want_policy):
    v = np.zeros((width, m))
    v[c, :] = 1.0
    values = [None] * (n + 1) if keep == "full" else None
    policy = [None] * n if want_policy else None
    if values is not None:
        values[n] = v.copy()
    for i in range(n - 1, -1, -1):
        step = np.zeros(width)
        step[1:-1] = 0.5 * (v[:-2, 0] + v[2:, 0])
        nv = np.empty_like(v)
        nv[:, m - 1] = step
        if m >= 2:
            stand = v[:, 1:m]
            nv[:, : m - 1] = np.maximum(step[:, None], stand)
        if policy is not None:
            pol = np.zeros((width, m), dtype=np.int8)
            if m >= 2:
                pol[:, : m - 1] = (stand >= step[:, None]).astype(np.int8)
            policy[i] = pol
        v = nv
        if values is not None:
            values[i] = v.copy()
    return float(v[c, 0]), values, policy


def _optimal_2d(n, m, width, c, keep, want_policy):
    v = np.zeros((width, width, m))
    nv = np.zeros((width, width, m))
    v[c, c, :] = 1.0
    values = [None] * (n + 1) if keep == "full" else None
    policy = [None] * n if want_policy else None
    if values is not None:
        values[n] = v.copy()
    for i in range(n - 1, -1, -1):
        # states farther than n - i from the origin in sup-norm cannot reach
        # it in time, so their value is zero; the live box grows by one cell
        # per backward step, which keeps the reused buffers consistent
        a = min(n - i, n)
        lo, hi = c - a, c + a + 1
        v0 = v[:, :, 0]
        step = 0.25 * (
            v0[lo - 1:hi - 1, lo:hi] + v0[lo + 1:hi + 1, lo:hi]
            + v0[lo:hi, lo - 1:hi - 1] + v0[lo:hi, lo + 1:hi + 1])
        nv[lo:hi, lo:hi, m - 1] = step
        if m >= 2:
            stand = v[lo:hi, lo:hi, 1:m]
            nv[lo:hi, lo:hi, : m - 1] = np.maximum(step[:, :, None], stand)
        if policy is not None:
            pol = np.zeros((width, width, m), dtype=np.int8)
            if m >= 2:
                pol[lo:hi, lo:hi, : m - 1] = (stand >= step[:, :, None]).astype(np.int8)
            policy[i] = pol
        v, nv = nv, v
        if values is not None:
            values[i] = v.copy()
    return float(v[c, c, 0]), values, policy


# ---------------------------------------------------------------------------
# Exhaustive small-instance oracles (exact rational arithmetic)
# ---------------------------------------------------------------------------

def _trailing_stands(positions: tuple) -> int:
    j = 0
    t = len(positions) - 1
    while t > 0 and positions[t] == positions[t - 1]:
        j += 1
        t -= 1
    return j


def _moves(d: int):
    return (1, -1) if d == 1 else ((1, 0), (-1, 0), (0, 1), (0, -1))


def _shift(w, mv, d):
    return w + mv if d == 1 else (w[0] + mv[0], w[1] + mv[1])


def brute_force_value(problem: Problem) -> Fraction:
    """Sup over all full-history strategies, by raw recursion on histories.

    No Markov compression and no memoization: the recursion carries the full
    position sequence and recomputes the stand-still counter from it, so it
    is an independent oracle for the backward-induction value.  Exponential;
    intended for n <= 8 or so.
    """
    n, m, d = problem.n, problem.m, problem.d
    if n > 12:
        raise BudgetError(f"brute force oracle is exponential; n={n} is too large")
    moves = _moves(d)
    p = Fraction(1, len(moves))

    def rec(positions: tuple) -> Fraction:
        i = len(positions) - 1
        if i == n:
            return Fraction(int(positions[-1] == problem.origin))
        w = positions[-1]
        best = sum((rec(positions + (_shift(w, mv, d),)) for mv in moves),
                   Fraction(0)) * p
        if _trailing_stands(positions) + 1 <= m - 1:
            stand = rec(positions + (w,))
            if stand > best:
                best = stand
        return best

    return rec((problem.origin,))


def enumerate_decision_trees_value(problem: Problem) -> Fraction:
    """Literal maximum over all decision trees (every history node assigned a
    fixed admissible decision), for very small instances (n <= 3, d = 1)."""
    n, m, d = problem.n, problem.m, problem.d
    if n > 3 or d != 1:
        raise BudgetError("tree enumeration is doubly exponential; use n <= 3, d = 1")
    moves = _moves(d)

    nodes: list[tuple] = []
    options: dict[tuple, list[Decision]] = {}

    def collect(positions: tuple):
        i = len(positions) - 1
        if i >= n:
            return
        opts = [Decision.STEP]
        if _trailing_stands(positions) + 1 <= m - 1:
            opts.append(Decision.STAND)
        nodes.append(positions)
        options[positions] = opts
        for mv in moves:
            collect(positions + (_shift(positions[-1], mv, d),))
        if Decision.STAND in opts:
            collect(positions + (positions[-1],))

    collect((problem.origin,))

    def evaluate(assign: dict[tuple, Decision], positions: tuple) -> Fraction:
        i = len(positions) - 1
        if i == n:
            return Fraction(int(positions[-1] == problem.origin))
        w = positions[-1]
        if assign[positions] is Decision.STAND:
            return evaluate(assign, positions + (w,))
        return sum((evaluate(assign, positions + (_shift(w, mv, d),))
                    for mv in moves), Fraction(0)) / len(moves)

    best = Fraction(0)
    for combo in product(*(options[nd] for nd in nodes)):
        assign = dict(zip(nodes, combo))
        val = evaluate(assign, (problem.origin,))
        if val > best:
            best = val
    return best


# ---------------------------------------------------------------------------
# Exact strategy evaluation by forward propagation
# ---------------------------------------------------------------------------

def evaluate_strategy_exact(strategy: Strategy, problem: Problem,
                            budget: float = DEFAULT_EVAL_BUDGET) -> float:
    """Exact success probability of a Markov-signature strategy.

    Pushes the state distribution over (position, counter, phase) forward
    from the origin, applying the strategy's deterministic decision per
    state.  Exact up to float accumulation.  Full-history strategies are
    refused: their state space is the trajectory itself.
    """
    if strategy.signature not in ("wj", "wji", "wjip"):
        raise SignatureError(
            f"strategy {strategy.name!r} declares signature {strategy.signature!r}; "
            "exact evaluation supports wj / wji / wjip only (use Monte Carlo)")
    width = 2 * problem.n + 1
    cells = float(width) ** problem.d * problem.n
    if cells > budget:
        raise BudgetError(
            f"forward propagation needs ~{cells:.3g} cell-steps (budget {budget:.3g})",
            required_transitions=cells)
    if strategy.w_independent and strategy.zero_split_ok:
        if problem.d == 1:
            return _propagate_1d(strategy, problem)
        return _propagate_2d(strategy, problem)
    return _propagate_scalar(strategy, problem)


def _band_add(store: dict, key, off: int, arr: np.ndarray, owned: bool) -> None:
    """Accumulate a 1d band (offset, values) into store[key]."""
    if key not in store:
        store[key] = (off, arr if owned else arr.copy())
        return
    o2, a2 = store[key]
    lo = min(off, o2)
    hi = max(off + len(arr), o2 + len(a2))
    if lo == o2 and hi == o2 + len(a2):
        a2[off - o2: off - o2 + len(arr)] += arr
        return
    merged = np.zeros(hi - lo)
    merged[o2 - lo: o2 - lo + len(a2)] += a2
    merged[off - lo: off - lo + len(arr)] += arr
    store[key] = (lo, merged)


def _deposit_split_1d(store, p_zero, p_away, j2, off, arr, owned):
    """Deposit a band, routing the mass at x = 0 to its own phase."""
    if p_zero == p_away:
        _band_add(store, (p_zero, j2), off, arr, owned)
        return
    idx = -off
    z = arr[idx] if 0 <= idx < len(arr) else 0.0
    if z != 0.0:
        if not owned:
            arr = arr.copy()
            owned = True
        arr[idx] = 0.0
        _band_add(store, (p_zero, j2), 0, np.array([z]), True)
    _band_add(store, (p_away, j2), off, arr, owned)


def _propagate_1d(strategy: Strategy, problem: Problem) -> float:
    n, m = problem.n, problem.m
    inv_m = 1.0 / m
    cur = {(strategy.start_phase(problem), 0): (0, np.array([1.0]))}
    for i in range(n):
        new: dict = {}
        for (p, j), (off, arr) in cur.items():
            dec = strategy.decide(None, j, i, p)
            if dec is Decision.STAND:
                j2 = j + 1
                if j2 > m - 1:
                    raise AdmissibilityError(
                        f"strategy {strategy.name!r} stands at time {i + 1} with "
                        f"counter {j}", time_step=i + 1)
                pz, pa = strategy.zero_split(p, i + 1, j2)
                _deposit_split_1d(new, pz, pa, j2, off, arr, owned=False)
            elif dec is Decision.STEP:
                pz, pa = strategy.zero_split(p, i + 1, 0)
                res = np.zeros(len(arr) + 2)
                res[:-2] += 0.5 * arr
                res[2:] += 0.5 * arr
                _deposit_split_1d(new, pz, pa, 0, off - 1, res, owned=True)
            else:
                pz, pa = strategy.zero_split(p, i + 1, 0)
                _deposit_split_1d(new, pz, pa, 0, off, (1.0 - inv_m) * arr, owned=True)
                res = np.zeros(len(arr) + 2)
                res[:-2] += 0.5 * inv_m * arr
                res[2:] += 0.5 * inv_m * arr
                _deposit_split_1d(new, pz, pa, 0, off - 1, res, owned=True)
        cur = new
    total = 0.0
    for (_, _), (off, arr) in cur.items():
        idx = -off
        if 0 <= idx < len(arr):
            total += float(arr[idx])
    return total


def _box_add(store: dict, key, off: tuple[int, int], arr: np.ndarray, owned: bool) -> None:
    if key not in store:
        store[key] = (off, arr if owned else arr.copy())
        return
    (ox2, oy2), a2 = store[key]
    ox, oy = off
    lx = min(ox, ox2)
    ly = min(oy, oy2)
    hx = max(ox + arr.shape[0], ox2 + a2.shape[0])
    hy = max(oy + arr.shape[1], oy2 + a2.shape[1])
    if (lx, ly) == (ox2, oy2) and (hx, hy) == (ox2 + a2.shape[0], oy2 + a2.shape[1]):
        a2[ox - ox2: ox - ox2 + arr.shape[0], oy - oy2: oy - oy2 + arr.shape[1]] += arr
        return
    merged = np.zeros((hx - lx, hy - ly))
    merged[ox2 - lx: ox2 - lx + a2.shape[0], oy2 - ly: oy2 - ly + a2.shape[1]] += a2
    merged[ox - lx: ox - lx + arr.shape[0], oy - ly: oy - ly + arr.shape[1]] += arr
    store[key] = ((lx, ly), merged)


def _deposit_split_2d(store, p_zero, p_away, j2, off, arr, owned):
    if p_zero == p_away:
        _box_add(store, (p_zero, j2), off, arr, owned)
        return
    ix, iy = -off[0], -off[1]
    z = 0.0
    if 0 <= ix < arr.shape[0] and 0 <= iy < arr.shape[1]:
        z = arr[ix, iy]
    if z != 0.0:
        if not owned:
            arr = arr.copy()
            owned = True
        arr[ix, iy] = 0.0
        _box_add(store, (p_zero, j2), (0, 0), np.array([[z]]), True)
    _box_add(store, (p_away, j2), off, arr, owned)


def _propagate_2d(strategy: Strategy, problem: Problem) -> float:
    n, m = problem.n, problem.m
    inv_m = 1.0 / m
    cur = {(strategy.start_phase(problem), 0): ((0, 0), np.array([[1.0]]))}
    for i in range(n):
        new: dict = {}
        for (p, j), (off, arr) in cur.items():
            dec = strategy.decide(None, j, i, p)
            if dec is Decision.STAND:
                j2 = j + 1
                if j2 > m - 1:
                    raise AdmissibilityError(
                        f"strategy {strategy.name!r} stands at time {i + 1} with "
                        f"counter {j}", time_step=i + 1)
                pz, pa = strategy.zero_split(p, i + 1, j2)
                _deposit_split_2d(new, pz, pa, j2, off, arr, owned=False)
                continue
            if dec is Decision.STEP:
                parts = ((1.0, None),)
            else:
                parts = ((inv_m, None), (1.0 - inv_m, "stay"))
            pz, pa = strategy.zero_split(p, i + 1, 0)
            for weight, kind in parts:
                if kind == "stay":
                    _deposit_split_2d(new, pz, pa, 0, off, weight * arr, owned=True)
                    continue
                h, w = arr.shape
                res = np.zeros((h + 2, w + 2))
                q = 0.25 * weight * arr
                res[:-2, 1:-1] += q
                res[2:, 1:-1] += q
                res[1:-1, :-2] += q
                res[1:-1, 2:] += q
                _deposit_split_2d(new, pz, pa, 0, (off[0] - 1, off[1] - 1), res,
                                  owned=True)
        cur = new
    total = 0.0
    for (_, _), (off, arr) in cur.items():
        ix, iy = -off[0], -off[1]
        if 0 <= ix < arr.shape[0] and 0 <= iy < arr.shape[1]:
            total += float(arr[ix, iy])
    return total


def state_distribution(strategy: Strategy, problem: Problem,
                       at_time: int | None = None) -> dict:
    """Probability mass over (phase, j, position) atoms at a fixed time.

    Scalar reference propagation: handles position-dependent decisions and
    arbitrary phase transitions, at quadratic cost.  The banded engines are
    validated against it on small instances.
    """
    n, m, d = problem.n, problem.m, problem.d
    if at_time is None:
        at_time = n
    if not 0 <= at_time <= n:
        raise ValueError(f"time must lie in [0, {n}], got {at_time}")
    inv_m = 1.0 / m
    moves = _moves(d)
    pstep = 1.0 / len(moves)
    cur = {(strategy.start_phase(problem), 0, problem.origin): 1.0}
    for i in range(at_time):
        new: dict = {}
        for (p, j, x), mass in cur.items():
            dec = strategy.decide(x, j, i, p)
            if dec is Decision.STAND:
                j2 = j + 1
                if j2 > m - 1:
                    raise AdmissibilityError(
                        f"strategy {strategy.name!r} stands at time {i + 1} with "
                        f"counter {j}", time_step=i + 1)
                p2 = strategy.next_phase(p, i + 1, x, j2)
                key = (p2, j2, x)
                new[key] = new.get(key, 0.0) + mass
                continue
            targets = []
            if dec is Decision.DELAYED_STEP:
                p2 = strategy.next_phase(p, i + 1, x, 0)
                targets.append(((p2, 0, x), (1.0 - inv_m) * mass))
                w_step = inv_m * mass
            else:
                w_step = mass
            for mv in moves:
                x2 = _shift(x, mv, d)
                p2 = strategy.next_phase(p, i + 1, x2, 0)
                targets.append(((p2, 0, x2), w_step * pstep))
            for key, val in targets:
                new[key] = new.get(key, 0.0) + val
        cur = new
    return cur


def _propagate_scalar(strategy: Strategy, problem: Problem) -> float:
    dist = state_distribution(strategy, problem)
    return float(sum(mass for (p, j, x), mass in dist.items()
                     if x == problem.origin))
