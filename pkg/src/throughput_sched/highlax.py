"""Schedulers for the high-laxity side of the composite.

The slot is pluggable.  The default, admission-controlled global EDF, is a
runnable stand-in and carries no competitiveness guarantee.  A release is
admitted only if simulating EDF over the admitted backlog plus the newcomer
finishes everything on time; admitted jobs are never dropped.  Because the
live schedule is the same deterministic EDF as the admission simulation,
every admitted job meets its deadline.
"""

from __future__ import annotations

import heapq
from typing import Callable, Iterable

from .core import Job
from .engine import Policy, PolicyEvent
from .srpt import SrptPolicy


def edf_completes_all(backlog: Iterable[tuple[int, int, int]], machines: int, t: int) -> bool:
    """Global EDF from ``t`` on ``(deadline, id, remaining)`` triples, all already released."""
    items = sorted(backlog)
    if not items:
        return True
    if machines <= 0:
        return False
    work = {jid: rem for _, jid, rem in items}
    order = [(d, jid) for d, jid, _ in items]
    now = t
    while order:
        active = order[:machines]
        step = min(work[jid] for _, jid in active)
        now += step
        finished = []
        for d, jid in active:
            work[jid] -= step
            if work[jid] == 0:
                if now > d:
                    return False
                finished.append((d, jid))
        # a running job that can no longer make it fails the whole backlog
        for d, jid in active:
            if work[jid] and now + work[jid] > d:
                return False
        done = set(finished)
        order = [x for x in order if x not in done]
        for d, jid in order[machines:]:
            if now + work[jid] > d:
                return False
    return True


class AdmissionEdfPolicy(Policy):
    name = "admission_edf"

    def __init__(self, machines: int, log: list[PolicyEvent] | None = None, machine_offset: int = 0):
        super().__init__(machines, log, machine_offset)
        self.deadline: dict[int, int] = {}
        self.rem: dict[int, int] = {}
        self.since: dict[int, int] = {}
        self.admitted: set[int] = set()
        self.active: set[int] = set()
        self.rejected: list[int] = []
        self.completed: list[int] = []
        self.completed_at: dict[int, int] = {}

    def remaining(self, job: int, t: int) -> int:
        if job in self.since:
            return self.rem[job] - (t - self.since[job])
        return self.rem.get(job, 0)

    def _settle(self, t: int) -> None:
        for j, s in self.since.items():
            self.rem[j] -= t - s
            self.since[j] = t

    def on_release(self, job: Job, t: int) -> None:
        self._settle(t)
        j = job.id
        backlog = [(self.deadline[a], a, self.rem[a]) for a in self.active]
        backlog.append((job.deadline, j, job.size))
        if edf_completes_all(backlog, self.machines, t):
            self.deadline[j] = job.deadline
            self.rem[j] = job.size
            self.admitted.add(j)
            self.active.add(j)
            self.emit(t, "admit", j)
        else:
            self.rejected.append(j)
            self.emit(t, "reject", j)

    def advance(self, t: int) -> None:
        self._settle(t)
        for j in sorted(j for j in self.since if self.rem[j] == 0):
            del self.since[j]
            self.active.discard(j)
            self.completed.append(j)
            self.completed_at[j] = t
            self.running.clear(self.running.machine_of(j))

    def on_tick_boundary(self, t: int) -> None:
        self._settle(t)
        chosen = sorted(self.active, key=lambda a: (self.deadline[a], a))[: self.machines]
        keep = set(chosen)
        for j in list(self.since):
            if j not in keep:
                self.rem[j] = self.remaining(j, t)
                del self.since[j]
                self.running.clear(self.running.machine_of(j))
        busy = {self.running.machine_of(j) for j in self.since}
        free = (i for i in range(self.machines) if i not in busy)
        for j in chosen:
            if j not in self.since:
                self.since[j] = t
                self.running.assign(next(free), j)

    def next_event_time(self, t: int) -> int | None:
        if not self.since:
            return None
        return min(self.rem[j] - (t - s) + t for j, s in self.since.items())


def admission_edf_run_set(deadlines: dict[int, int], admitted: Iterable[int], machines: int) -> list[int]:
    """EDF selection over the admitted, unfinished jobs."""
    return sorted(admitted, key=lambda a: (deadlines[a], a))[:machines]


HighLaxFactory = Callable[[int, "list[PolicyEvent] | None", int], Policy]

HIGHLAX_POLICIES: dict[str, HighLaxFactory] = {
    "admission_edf": lambda m, log, off: AdmissionEdfPolicy(m, log, off),
    "srpt": lambda m, log, off: SrptPolicy(m, log, off),
}


def make_highlax(name: str, machines: int, log: list[PolicyEvent] | None = None, offset: int = 0) -> Policy:
    try:
        factory = HIGHLAX_POLICIES[name]
    except KeyError:
        raise ValueError(f"unknown high-laxity policy {name!r}; choose from {sorted(HIGHLAX_POLICIES)}") from None
    return factory(machines, log, offset)
