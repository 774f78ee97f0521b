"""Independent reference oracles used only by the tests.

Each one is deliberately naive and shares no code with the package
implementation it checks: brute-force subset enumeration, an LP feasibility
test, and tick-by-tick re-simulations of SRPT and the stack algorithm that
recompute every decision from scratch at every tick.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog

from throughput_sched.core import Instance, Job
from throughput_sched.oracle import feasible_subset_slots

INF = math.inf


def brute_opt(jobs: list[Job], m: int) -> int:
    """Largest feasible subset by enumerating every subset, largest first."""
    for k in range(len(jobs), 0, -1):
        for combo in itertools.combinations(jobs, k):
            if feasible_subset_slots(list(combo), m):
                return k
    return 0


def lp_feasible(jobs: list[Job], m: int) -> bool:
    """Continuous-time preemptive feasibility as a linear program.

    Variable ``y[j, k]`` is the work of job ``j`` in elementary span ``k``.
    """
    if not jobs:
        return True
    points = sorted({p for j in jobs for p in (j.release, j.deadline)})
    spans = list(zip(points, points[1:]))
    var = [(a, k) for a, j in enumerate(jobs) for k, (lo, hi) in enumerate(spans)
           if j.release <= lo and hi <= j.deadline]
    if not var:
        return False
    n_var = len(var)
    a_eq = np.zeros((len(jobs), n_var))
    b_eq = np.array([j.size for j in jobs], dtype=float)
    a_ub = np.zeros((len(spans), n_var))
    b_ub = np.array([m * (hi - lo) for lo, hi in spans], dtype=float)
    bounds = []
    for v, (a, k) in enumerate(var):
        a_eq[a, v] = 1
        a_ub[k, v] = 1
        bounds.append((0, spans[k][1] - spans[k][0]))
    res = linprog(np.zeros(n_var), A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs")
    return res.status == 0


def horizon(instance: Instance) -> int:
    return max((j.deadline for j in instance.jobs), default=0)


def naive_srpt(instance: Instance, m: int | None = None) -> tuple[list[set[int]], list[tuple[int, int]]]:
    """Per-tick SRPT: running set for every tick and the completion list."""
    m = instance.machines if m is None else m
    rem = {j.id: j.size for j in instance.jobs}
    running_per_tick: list[set[int]] = []
    completions: list[tuple[int, int]] = []
    for t in range(horizon(instance) + 1):
        cands = [j for j in instance.jobs if j.release <= t and rem[j.id] > 0 and t + rem[j.id] <= j.deadline]
        cands.sort(key=lambda j: (rem[j.id], j.id))
        chosen = {j.id for j in cands[:m]}
        running_per_tick.append(chosen)
        for jid in chosen:
            rem[jid] -= 1
            if rem[jid] == 0:
                completions.append((jid, t + 1))
    completions.sort(key=lambda c: (c[1], c[0]))
    return running_per_tick, completions


@dataclass
class NaiveMlaxResult:
    completions: list[tuple[int, int]] = field(default_factory=list)
    # (t, job, action, stack)
    decisions: list[tuple[int, int, str, int | None]] = field(default_factory=list)
    expiries: list[tuple[int, int]] = field(default_factory=list)
    counters: dict[str, int] = field(default_factory=lambda: {
        "pushes": 0, "replaces": 0, "completion_pops": 0, "infeasible_pops": 0})


def naive_mlax(instance: Instance, alpha: int, viability: Fraction, replace: Fraction | None,
               strict_half: bool = False, m: int | None = None) -> NaiveMlaxResult:
    """Tick-by-tick stack algorithm written straight from the rule text.

    ``replace=None`` selects the lax variant: no replacement quorum, and the
    push gate ``strict_half`` (half the laxity must remain) when requested.
    """
    m = instance.machines if m is None else m
    jobs = {j.id: j for j in instance.jobs}
    lax = {j.id: j.deadline - j.release - j.size for j in instance.jobs}
    rem = {j.id: j.size for j in instance.jobs}
    stacks: list[list[int]] = [[] for _ in range(m)]
    pending: set[int] = set()
    out = NaiveMlaxResult()
    k_viable = math.ceil(viability * m)
    k_replace = None if replace is None else math.ceil(replace * m)

    def top_lax(i: int) -> float:
        return lax[stacks[i][-1]] if stacks[i] else INF

    def second_lax(i: int) -> float:
        return lax[stacks[i][-2]] if len(stacks[i]) >= 2 else INF

    def top_alpha_size(i: int) -> float:
        return alpha * jobs[stacks[i][-1]].size if stacks[i] else INF

    for t in range(horizon(instance) + 1):
        for i in range(m):
            s = stacks[i]
            if s and rem[s[-1]] == 0:
                out.completions.append((s.pop(), t))
                out.counters["completion_pops"] += 1
                while s and t + rem[s[-1]] > jobs[s[-1]].deadline:
                    s.pop()
                    out.counters["infeasible_pops"] += 1
        pending |= {jid for jid, j in jobs.items() if j.release == t}
        while True:
            viable = [jid for jid in pending
                      if sum(1 for i in range(m) if top_alpha_size(i) >= lax[jid]) >= k_viable]
            if not viable:
                break
            jid = min(viable, key=lambda x: (lax[x], x))
            pending.discard(jid)
            job = jobs[jid]
            a = alpha * job.size
            gate = True
            if replace is None and strict_half:
                gate = 2 * (job.deadline - t - job.size) >= lax[jid]
            absorbing = [i for i in range(m) if a <= top_lax(i)]
            if gate and absorbing:
                i = absorbing[0]
                stacks[i].append(jid)
                out.counters["pushes"] += 1
                out.decisions.append((t, jid, "push", i))
                continue
            qualified = [i for i in range(m) if stacks[i] and a <= second_lax(i)]
            if k_replace is not None and len(qualified) < k_replace:
                out.decisions.append((t, jid, "noop", None))
                continue
            cands = [i for i in qualified if lax[jid] > top_lax(i)]
            if not cands:
                out.decisions.append((t, jid, "noop", None))
                continue
            i = min(cands, key=lambda x: (top_lax(x), x))
            stacks[i][-1] = jid
            out.counters["replaces"] += 1
            out.decisions.append((t, jid, "replace", i))
        for jid in sorted(pending):
            j = jobs[jid]
            if 2 * t >= 2 * j.release + lax[jid]:
                pending.discard(jid)
                out.expiries.append((t, jid))
        for s in stacks:
            if s:
                rem[s[-1]] -= 1
    assert not any(stacks), "stacks must drain by the last deadline"
    out.completions.sort(key=lambda c: (c[1], c[0]))
    return out


def running_per_tick(trace, ticks: int) -> list[set[int]]:
    """Expand a trace's run intervals into the set of running jobs per tick."""
    sets: list[set[int]] = [set() for _ in range(ticks)]
    for iv in trace.run_intervals:
        for t in range(iv.start, iv.end):
            if t < ticks:
                sets[t].add(iv.job)
    return sets
