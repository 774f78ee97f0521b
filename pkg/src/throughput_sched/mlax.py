"""Stack-based scheduler for low-laxity jobs, plus the single-quorum Lax variant.

Each machine ``i`` owns a stack whose top job runs on ``i``; an empty stack
behaves as if an infinitely large, infinitely lax sentinel sat at its bottom.
A released job waits until its pseudo-release time: the first instant in
``[release, release + laxity/2]`` at which enough frontier jobs ``j'``
satisfy ``alpha * size(j') >= laxity(j)``.  At that instant it is pushed onto
a stack whose top can absorb it (``alpha * size(j) <= laxity(top)``), or it
replaces the least-lax top of an eligible stack, or it is dropped.  On a
completion the stack is popped, then popped again while the exposed top is
infeasible.
"""

from __future__ import annotations

import heapq
import math
from bisect import bisect_left, insort
from dataclasses import dataclass
from enum import Enum
from itertools import compress, count, repeat
from operator import le
from fractions import Fraction
from typing import Any, Sequence

from .core import Job
from .engine import Policy, PolicyEvent

INF = math.inf


class Variant(str, Enum):
    MLAX = "mlax"
    LAX_VARIANT = "lax_variant"


@dataclass(frozen=True)
class MlaxConfig:
    alpha: int = 24
    viability_fraction: Fraction = Fraction(7, 8)
    replace_fraction: Fraction = Fraction(3, 4)
    variant: Variant = Variant.MLAX
    strict_half_laxity: bool = True

    def __post_init__(self) -> None:
        if not isinstance(self.alpha, int) or self.alpha < 1:
            raise ValueError("alpha must be an integer >= 1")
        object.__setattr__(self, "viability_fraction", Fraction(self.viability_fraction))
        object.__setattr__(self, "replace_fraction", Fraction(self.replace_fraction))
        object.__setattr__(self, "variant", Variant(self.variant))
        if not 0 < self.replace_fraction <= self.viability_fraction <= 1:
            raise ValueError("need 0 < replace_fraction <= viability_fraction <= 1")

    @classmethod
    def lax_variant(cls, alpha: int = 24, strict_half_laxity: bool = True) -> "MlaxConfig":
        # replace_fraction is unused by the variant; kept equal to satisfy the ordering invariant
        return cls(alpha, Fraction(1, 2), Fraction(1, 2), Variant.LAX_VARIANT, strict_half_laxity)

    def viability_quorum(self, m: int) -> int:
        return math.ceil(self.viability_fraction * m)

    def replace_quorum(self, m: int) -> int:
        return math.ceil(self.replace_fraction * m)

    def as_dict(self) -> dict[str, Any]:
        return {
            "alpha": self.alpha,
            "viability_fraction": str(self.viability_fraction),
            "replace_fraction": str(self.replace_fraction),
            "variant": self.variant.value,
            "strict_half_laxity": self.strict_half_laxity,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "MlaxConfig":
        return cls(
            int(d["alpha"]),
            Fraction(d["viability_fraction"]),
            Fraction(d["replace_fraction"]),
            Variant(d["variant"]),
            bool(d.get("strict_half_laxity", True)),
        )


# -- pure rule helpers, shared by the policy and by tests ------------------
# A frontier is given as a sequence of Jobs or None (sentinel), one per stack.

def check_viability(job: Job, frontier: Sequence[Job | None], cfg: MlaxConfig) -> bool:
    """Enough frontier jobs are large relative to ``job``'s laxity."""
    lax = job.laxity
    count = sum(1 for top in frontier if top is None or cfg.alpha * top.size >= lax)
    return count >= cfg.viability_quorum(len(frontier))


def is_strictly_feasible(job: Job, remaining: int, t: int, frontier: Sequence[Job | None], alpha: int) -> bool:
    """Half the original laxity is still left and some frontier job can absorb ``job``."""
    remaining_laxity = job.deadline - t - remaining
    if 2 * remaining_laxity < job.laxity:
        return False
    return any(top is None or alpha * job.size <= top.laxity for top in frontier)


def lax_variant_gate(job: Job, remaining: int, t: int, frontier: Sequence[Job | None], cfg: MlaxConfig) -> bool:
    """Push gate of the variant: strict feasibility, or just rule-a absorption when disabled."""
    if cfg.strict_half_laxity:
        return is_strictly_feasible(job, remaining, t, frontier, cfg.alpha)
    return any(top is None or cfg.alpha * job.size <= top.laxity for top in frontier)


def _lax(job: Job | None) -> float:
    return INF if job is None else job.laxity


def choose_action(
    job: Job,
    stacks: Sequence[Sequence[Job]],
    t: int,
    cfg: MlaxConfig,
) -> tuple[str, int | None]:
    """Decide what happens at ``job``'s pseudo-release given the stacks (bottom first).

    Returns ``("push", i)``, ``("replace", i)`` or ``("noop", None)``.
    """
    a = cfg.alpha * job.size
    tops = [s[-1] if s else None for s in stacks]
    seconds = [s[-2] if len(s) >= 2 else None for s in stacks]
    push_ok = True
    if cfg.variant is Variant.LAX_VARIANT:
        push_ok = lax_variant_gate(job, job.size, t, tops, cfg)
    if push_ok:
        for i, top in enumerate(tops):
            if a <= _lax(top):
                return "push", i
    eligible = [i for i, sec in enumerate(seconds) if a <= _lax(sec)]
    if cfg.variant is Variant.MLAX and len(eligible) < cfg.replace_quorum(len(stacks)):
        return "noop", None
    best = None
    for i in eligible:
        top = tops[i]
        if top is not None and job.laxity > top.laxity:
            key = (top.laxity, i)
            if best is None or key < best:
                best = key
    if best is None:
        return "noop", None
    return "replace", best[1]


def on_completion_pop(stack: list[Job], remaining: dict[int, int], t: int) -> list[tuple[str, int]]:
    """Pop the completed top of ``stack`` then every infeasible top beneath it (in place)."""
    popped = [("completion_pop", stack.pop().id)]
    while stack:
        top = stack[-1]
        if remaining[top.id] > 0 and t + remaining[top.id] <= top.deadline:
            break
        popped.append(("infeasible_pop", stack.pop().id))
    return popped


def mlax_run_set(stacks: Sequence[Sequence[int]]) -> dict[int, int]:
    """Top of stack ``i`` runs on machine ``i``; sentinel tops leave the machine idle."""
    return {i: s[-1] for i, s in enumerate(stacks) if s}


class MlaxPolicy(Policy):
    name = "mlax"

    def __init__(self, machines: int, cfg: MlaxConfig | None = None,
                 log: list[PolicyEvent] | None = None, machine_offset: int = 0):
        super().__init__(machines, log, machine_offset)
        self.cfg = cfg or MlaxConfig()
        self.name = self.cfg.variant.value
        self.stacks: list[list[int]] = [[] for _ in range(machines)]
        self.jobs: dict[int, Job] = {}
        self.rem: dict[int, int] = {}
        self.stack_of: dict[int, int] = {}
        self.top_since = [0] * machines
        self.top_finish: list[int | None] = [None] * machines
        self._finish_heap: list[tuple[int, int, int]] = []
        # sorted alpha*size and laxity of the current tops (INF for sentinels)
        self._sizes: list[float] = [INF] * machines
        self._laxes: list[float] = [INF] * machines
        # per-stack laxity of top and second-top (INF for sentinels)
        self.top_lax: list[float] = [INF] * machines
        self.sec_lax: list[float] = [INF] * machines
        self.top_size: list[float] = [INF] * machines
        self._secs: list[float] = [INF] * machines
        self._pending_by_lax: list[tuple[int, int]] = []
        self._pending_by_end: list[tuple[int, int]] = []
        self.status: dict[int, str] = {}
        self.pseudo_release: dict[int, int] = {}
        self.completed: list[int] = []
        self.completed_at: dict[int, int] = {}
        self.counters = {"pushes": 0, "replaces": 0, "completion_pops": 0, "infeasible_pops": 0}
        self._viable_k = self.cfg.viability_quorum(machines)
        self._replace_k = self.cfg.replace_quorum(machines)

    def config(self) -> dict[str, Any]:
        return {"policy": self.name, **self.cfg.as_dict()}

    # -- state views ------------------------------------------------------
    def remaining(self, job: int, t: int) -> int:
        i = self.stack_of.get(job)
        if i is not None and self.stacks[i] and self.stacks[i][-1] == job:
            return self.rem[job] - (t - self.top_since[i])
        return self.rem.get(job, 0)

    def frontier(self) -> list[Job | None]:
        return [self.jobs[s[-1]] if s else None for s in self.stacks]

    def stack_jobs(self) -> list[list[Job]]:
        return [[self.jobs[j] for j in s] for s in self.stacks]

    # -- top bookkeeping ---------------------------------------------------
    @staticmethod
    def _swap(values: list[float], old: float, new: float) -> None:
        if old != new:
            del values[bisect_left(values, old)]
            insort(values, new)

    def _settle_top(self, i: int, t: int) -> int | None:
        stack = self.stacks[i]
        if not stack:
            return None
        top = stack[-1]
        self.rem[top] -= t - self.top_since[i]
        return top

    def _expose(self, i: int, t: int) -> None:
        """Stack ``i`` has a new top (or none) from time ``t``."""
        stack = self.stacks[i]
        new_top = stack[-1] if stack else None
        jobs = self.jobs
        if new_top is None:
            size = lax = INF
        else:
            top = jobs[new_top]
            size, lax = self.cfg.alpha * top.size, top.deadline - top.release - top.size
        sec = jobs[stack[-2]].laxity if len(stack) >= 2 else INF
        self._swap(self._sizes, self.top_size[i], size)
        self._swap(self._laxes, self.top_lax[i], lax)
        self._swap(self._secs, self.sec_lax[i], sec)
        self.top_size[i], self.top_lax[i], self.sec_lax[i] = size, lax, sec
        self.top_since[i] = t
        if new_top is None:
            self.top_finish[i] = None
            self.running.clear(i)
        else:
            fin = t + self.rem[new_top]
            self.top_finish[i] = fin
            heapq.heappush(self._finish_heap, (fin, i, new_top))
            self.running.assign(i, new_top)

    # -- callbacks ---------------------------------------------------------
    def on_release(self, job: Job, t: int) -> None:
        j = job.id
        self.jobs[j] = job
        self.rem[j] = job.size
        self.status[j] = "pending"
        heapq.heappush(self._pending_by_lax, (job.laxity, j))
        heapq.heappush(self._pending_by_end, (job.window_end, j))

    def advance(self, t: int) -> None:
        heap = self._finish_heap
        while heap and heap[0][0] <= t:
            fin, i, j = heapq.heappop(heap)
            if self.top_finish[i] != fin or not self.stacks[i] or self.stacks[i][-1] != j:
                continue
            self._complete(i, j, t)

    def _complete(self, i: int, j: int, t: int) -> None:
        stack = self.stacks[i]
        stack.pop()
        self.rem[j] = 0
        self.status[j] = "completed"
        self.completed.append(j)
        self.completed_at[j] = t
        self.counters["completion_pops"] += 1
        self.emit(t, "completion_pop", j, i)
        while stack:
            top = stack[-1]
            if t + self.rem[top] <= self.jobs[top].deadline:
                break
            stack.pop()
            self.status[top] = "infeasible"
            self.counters["infeasible_pops"] += 1
            self.emit(t, "infeasible_pop", top, i, remaining=self.rem[top])
        self._expose(i, t)

    def _threshold(self) -> float:
        # k-th largest alpha*size on the frontier
        return self._sizes[self.machines - self._viable_k]

    def on_tick_boundary(self, t: int) -> None:
        if self.machines == 0:
            return
        by_lax = self._pending_by_lax
        while by_lax:
            lax, j = by_lax[0]
            if self.status[j] != "pending":
                heapq.heappop(by_lax)
                continue
            if lax > self._threshold():
                break
            heapq.heappop(by_lax)
            self._pseudo_release(j, t)
        by_end = self._pending_by_end
        while by_end and by_end[0][0] <= t:
            _, j = heapq.heappop(by_end)
            if self.status[j] == "pending":
                self.status[j] = "expired"
                self.emit(t, "window_expiry", j)

    def _pseudo_release(self, j: int, t: int) -> None:
        job = self.jobs[j]
        self.status[j] = "stacked"
        self.pseudo_release[j] = t
        action, i = self._decide(job, t)
        self.emit(t, "pseudo_release", j, i, action=action)
        if action == "push":
            old = self._settle_top(i, t)
            self.stacks[i].append(j)
            self.stack_of[j] = i
            self.counters["pushes"] += 1
            self.emit(t, "push", j, i, under=old)
            self._expose(i, t)
        elif action == "replace":
            old = self._settle_top(i, t)
            self.stacks[i][-1] = j
            self.stack_of[j] = i
            self.status[old] = "evicted"
            self.counters["replaces"] += 1
            self.emit(t, "replace", j, i, evicted=old)
            self._expose(i, t)
        else:
            self.status[j] = "dropped"

    def _decide(self, job: Job, t: int) -> tuple[str, int | None]:
        a = self.cfg.alpha * job.size
        push_ok = True
        if self.cfg.variant is Variant.LAX_VARIANT and self.cfg.strict_half_laxity:
            push_ok = 2 * (job.deadline - t - job.size) >= job.laxity
        if push_ok and self._laxes[-1] >= a:
            # lowest index with a <= top laxity, scanned at C speed
            return "push", next(compress(count(), map(le, repeat(a), self.top_lax)))
        if self.cfg.variant is Variant.MLAX:
            # rule a failed, so no stack is empty and every second-top counts
            if self.machines - bisect_left(self._secs, a) < self._replace_k:
                return "noop", None
        best: tuple[float, int] | None = None
        lj = job.laxity
        top_lax = self.top_lax
        stacks = self.stacks
        for i, sec in enumerate(self.sec_lax):
            if sec < a or not stacks[i]:
                continue
            tl = top_lax[i]
            if lj > tl and (best is None or tl < best[0]):
                best = (tl, i)
        if best is None:
            return "noop", None
        return "replace", best[1]

    def next_event_time(self, t: int) -> int | None:
        best = None
        heap = self._finish_heap
        while heap:
            fin, i, j = heap[0]
            if self.top_finish[i] == fin and self.stacks[i] and self.stacks[i][-1] == j:
                best = fin
                break
            heapq.heappop(heap)
        by_end = self._pending_by_end
        while by_end and self.status[by_end[0][1]] != "pending":
            heapq.heappop(by_end)
        if by_end and (best is None or by_end[0][0] < best):
            best = by_end[0][0]
        return best
