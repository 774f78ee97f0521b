"""Exact offline optimum for preemptive, migratory throughput on m machines.

``feasible_subset`` decides whether every job of a set can be completed via
an integral max-flow over elementary intervals.  ``feasible_subset_slots``
answers the same question by matching job work units to unit time slots and
shares no code with the flow path; the two must always agree.
``opt_throughput`` searches subsets largest-first and relies on downward
closure: a set that cannot be scheduled has no schedulable superset.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from functools import reduce
from typing import Sequence

from .core import Job

DEFAULT_SEARCH_CAP = 16
DEFAULT_SLOT_LIMIT = 20_000


class ScaleError(ValueError):
    """The unit-slot oracle would need more slots than allowed."""


class MaxFlow:
    """Dinic's algorithm on an adjacency-list residual graph with integer capacities."""

    def __init__(self, n: int) -> None:
        self.n = n
        self.adj: list[list[int]] = [[] for _ in range(n)]
        self.to: list[int] = []
        self.cap: list[int] = []

    def add_edge(self, u: int, v: int, c: int) -> None:
        self.adj[u].append(len(self.to))
        self.to.append(v)
        self.cap.append(c)
        self.adj[v].append(len(self.to))
        self.to.append(u)
        self.cap.append(0)

    def _levels(self, s: int, t: int) -> list[int] | None:
        level = [-1] * self.n
        level[s] = 0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for e in self.adj[u]:
                v = self.to[e]
                if self.cap[e] > 0 and level[v] < 0:
                    level[v] = level[u] + 1
                    queue.append(v)
        return level if level[t] >= 0 else None

    def max_flow(self, s: int, t: int) -> int:
        total = 0
        to, cap, adj = self.to, self.cap, self.adj
        while True:
            level = self._levels(s, t)
            if level is None:
                return total
            it = [0] * self.n

            def push(u: int, limit: int) -> int:
                if u == t:
                    return limit
                while it[u] < len(adj[u]):
                    e = adj[u][it[u]]
                    v = to[e]
                    if cap[e] > 0 and level[v] == level[u] + 1:
                        got = push(v, min(limit, cap[e]))
                        if got:
                            cap[e] -= got
                            cap[e ^ 1] += got
                            return got
                    it[u] += 1
                return 0

            while True:
                f = push(s, math.inf)
                if not f:
                    break
                total += f


def build_network(jobs: Sequence[Job], m: int) -> tuple[MaxFlow, int, int, int]:
    """Source -> job (size) -> elementary interval (length) -> sink (m * length).

    Returns the network, source, sink and the total demand.
    """
    points = sorted({p for j in jobs for p in (j.release, j.deadline)})
    spans = list(zip(points, points[1:]))
    n_jobs = len(jobs)
    source = 0
    sink = 1 + n_jobs + len(spans)
    net = MaxFlow(sink + 1)
    for k, (a, b) in enumerate(spans):
        net.add_edge(1 + n_jobs + k, sink, m * (b - a))
    for idx, job in enumerate(jobs):
        net.add_edge(source, 1 + idx, job.size)
        for k, (a, b) in enumerate(spans):
            if job.release <= a and b <= job.deadline:
                net.add_edge(1 + idx, 1 + n_jobs + k, b - a)
    return net, source, sink, sum(j.size for j in jobs)


def feasible_subset(jobs: Sequence[Job], m: int) -> bool:
    """Can every job in ``jobs`` finish by its deadline on ``m`` machines?"""
    if not jobs:
        return True
    if m <= 0:
        return False
    net, s, t, demand = build_network(jobs, m)
    return net.max_flow(s, t) == demand


def feasible_subset_slots(jobs: Sequence[Job], m: int, slot_limit: int = DEFAULT_SLOT_LIMIT) -> bool:
    """Same question answered by unit-slot b-matching with BFS augmenting paths.

    Times are divided by their common gcd first, which leaves the answer unchanged.
    """
    if not jobs:
        return True
    if m <= 0:
        return False
    g = reduce(math.gcd, (v for j in jobs for v in (j.release, j.size, j.deadline)))
    lo = min(j.release for j in jobs) // g
    hi = max(j.deadline for j in jobs) // g
    horizon = hi - lo
    if horizon * m > slot_limit:
        raise ScaleError(f"{horizon} slots x {m} machines exceeds limit {slot_limit}")
    windows = [range(j.release // g - lo, j.deadline // g - lo) for j in jobs]
    demand = [j.size // g for j in jobs]
    if sum(demand) > horizon * m:
        return False
    slot_jobs: list[list[int]] = [[] for _ in range(horizon)]
    job_slots: list[set[int]] = [set() for _ in jobs]

    def augment(job: int) -> bool:
        # BFS over slots; parent[s] = (slot the mover leaves, mover that enters s)
        parent: dict[int, tuple[int | None, int]] = {}
        queue: deque[int] = deque()
        for s in windows[job]:
            if s not in job_slots[job]:
                parent[s] = (None, job)
                queue.append(s)
        while queue:
            s = queue.popleft()
            if len(slot_jobs[s]) < m:
                cur: int | None = s
                while cur is not None:
                    prev, mover = parent[cur]
                    slot_jobs[cur].append(mover)
                    job_slots[mover].add(cur)
                    if prev is not None:
                        slot_jobs[prev].remove(mover)
                        job_slots[mover].discard(prev)
                    cur = prev
                return True
            for other in slot_jobs[s]:
                for s2 in windows[other]:
                    if s2 not in parent and s2 not in job_slots[other]:
                        parent[s2] = (s, other)
                        queue.append(s2)
        return False

    for job in range(len(jobs)):
        for _ in range(demand[job]):
            if not augment(job):
                return False
    return True


@dataclass
class OptResult:
    best_count: int
    witness: list[int] = field(default_factory=list)
    explored: int = 0
    proven_optimal: bool = True

    def as_dict(self) -> dict:
        return {
            "best_count": self.best_count,
            "witness_ids": sorted(self.witness),
            "proven_optimal": self.proven_optimal,
            "explored": self.explored,
        }


def opt_throughput(
    jobs: Sequence[Job],
    m: int,
    budget: int = 200_000,
    search_cap: int = DEFAULT_SEARCH_CAP,
) -> OptResult:
    """Largest subset of ``jobs`` completable on ``m`` machines.

    Depth-first include/exclude over jobs (smallest first), bounded by the
    best count found.  ``budget`` limits the number of feasibility tests; if it
    runs out the best set found is returned with ``proven_optimal=False``.
    Above ``search_cap`` jobs the budget is clamped to the default so large
    inputs degrade to a lower bound instead of running unbounded.
    """
    order = sorted(jobs, key=lambda j: (j.size, j.deadline - j.release, j.id))
    n = len(order)
    if n > search_cap:
        budget = min(budget, 200_000)
    if n and feasible_subset(order, m):
        return OptResult(n, [j.id for j in order], 1, True)
    best: list[Job] = []
    explored = 1
    exhausted = False
    infeasible: set[frozenset[int]] = set()

    def known_infeasible(ids: frozenset[int]) -> bool:
        return any(bad <= ids for bad in infeasible)

    def dfs(i: int, chosen: list[Job]) -> None:
        nonlocal best, explored, exhausted
        if exhausted:
            return
        if len(chosen) + (n - i) <= len(best):
            return
        if i == n:
            best = list(chosen)
            return
        job = order[i]
        trial = chosen + [job]
        ids = frozenset(j.id for j in trial)
        if not known_infeasible(ids):
            explored += 1
            if explored > budget:
                exhausted = True
                return
            if feasible_subset(trial, m):
                dfs(i + 1, trial)
            elif len(infeasible) < 4096:
                infeasible.add(ids)
        dfs(i + 1, chosen)

    dfs(0, [])
    return OptResult(len(best), [j.id for j in best], explored, not exhausted)


def capacity_upper_bound(jobs: Sequence[Job], m: int) -> int:
    """Flow-based bound on the optimum for sets too large to search.

    A schedulable set routes its whole work through the network built on all
    jobs, so its total size is at most that network's max flow.  The largest
    k whose k smallest sizes fit under the flow therefore bounds the optimum.
    """
    if not jobs or m <= 0:
        return 0
    net, s, t, _ = build_network(jobs, m)
    capacity = net.max_flow(s, t)
    count = 0
    for total in itertools.accumulate(sorted(j.size for j in jobs)):
        if total > capacity:
            break
        count += 1
    return count
