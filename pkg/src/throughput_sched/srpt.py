"""SRPT restricted to feasible jobs.

Run the ``m`` feasible jobs with the shortest remaining processing time, ties
by lower job id.  Running jobs all lose work at the same rate, so their
relative order is fixed and is tracked by predicted finish time.  Waiting jobs
keep their remaining time, so the run set only changes at releases and
completions; infeasible waiting jobs are discarded when they surface.
"""

from __future__ import annotations

import heapq

from .core import Job, JobState, is_feasible
from .engine import Policy, PolicyEvent


def srpt_run_set(states: dict[int, JobState], machines: int, t: int) -> list[int]:
    """Reference selection: ids of the ``machines`` feasible jobs with least remaining."""
    feasible = [s for s in states.values() if is_feasible(s, t)]
    feasible.sort(key=lambda s: (s.remaining, s.job.id))
    return [s.job.id for s in feasible[:machines]]


class SrptPolicy(Policy):
    name = "srpt"

    def __init__(self, machines: int, log: list[PolicyEvent] | None = None, machine_offset: int = 0,
                 emit_completions: bool = False):
        super().__init__(machines, log, machine_offset)
        self.emit_completions = emit_completions
        self.deadline: dict[int, int] = {}
        self.rem: dict[int, int] = {}          # waiting: remaining; running: remaining at `since`
        self.finish: dict[int, int] = {}       # running job -> predicted finish
        self._finish_heap: list[tuple[int, int]] = []
        self._max_heap: list[tuple[int, int]] = []
        self._waiting: list[tuple[int, int]] = []
        self._free = list(range(machines))
        self.completed: list[int] = []
        self.completed_at: dict[int, int] = {}

    def remaining(self, job: int, t: int) -> int:
        if job in self.finish:
            return self.finish[job] - t
        return self.rem[job]

    def _start(self, job: int, machine: int, t: int) -> None:
        fin = t + self.rem[job]
        self.finish[job] = fin
        heapq.heappush(self._finish_heap, (fin, job))
        heapq.heappush(self._max_heap, (-fin, -job))
        self.running.assign(machine, job)

    def _max_running(self) -> tuple[int, int]:
        heap = self._max_heap
        while True:
            neg_fin, neg_job = heap[0]
            if self.finish.get(-neg_job) == -neg_fin:
                return -neg_fin, -neg_job
            heapq.heappop(heap)

    def on_release(self, job: Job, t: int) -> None:
        j = job.id
        self.deadline[j] = job.deadline
        self.rem[j] = job.size
        if self._free:
            self._start(j, heapq.heappop(self._free), t)
            return
        if self.machines == 0:
            heapq.heappush(self._waiting, (job.size, j))
            return
        fin, victim = self._max_running()
        if (job.size, j) < (fin - t, victim):
            machine = self.running.machine_of(victim)
            del self.finish[victim]
            self.rem[victim] = fin - t
            heapq.heappush(self._waiting, (fin - t, victim))
            self.running.clear(machine)
            self._start(j, machine, t)
        else:
            heapq.heappush(self._waiting, (job.size, j))

    def advance(self, t: int) -> None:
        heap = self._finish_heap
        freed = False
        while heap and heap[0][0] <= t:
            fin, j = heapq.heappop(heap)
            if self.finish.get(j) != fin:
                continue
            del self.finish[j]
            self.rem[j] = 0
            machine = self.running.machine_of(j)
            self.running.clear(machine)
            heapq.heappush(self._free, machine)
            self.completed.append(j)
            self.completed_at[j] = t
            if self.emit_completions:
                self.emit(t, "virtual_completion", j, machine, policy=self.name)
            freed = True
        if freed:
            self._fill(t)

    def _fill(self, t: int) -> None:
        waiting = self._waiting
        while self._free and waiting:
            rem, j = heapq.heappop(waiting)
            if t + rem > self.deadline[j]:
                continue
            self._start(j, heapq.heappop(self._free), t)

    def next_event_time(self, t: int) -> int | None:
        heap = self._finish_heap
        while heap and self.finish.get(heap[0][1]) != heap[0][0]:
            heapq.heappop(heap)
        return heap[0][0] if heap else None
