"""Event-driven simulation kernel.

The kernel owns physical time and physical remaining work.  A policy owns its
own view of the jobs and publishes its decisions through a :class:`RunSet`
(machine -> job) whose change log lets the kernel touch only machines whose
assignment actually changed.  Between events the run set is constant and
every running job loses one tick of work per tick.

Per-instant order: physical completions, ``on_completion`` notices,
``advance`` (policy-side completions), releases, ``on_tick_boundary``.
"""

from __future__ import annotations

import gc
import heapq
from dataclasses import dataclass, field
from typing import Any, Iterable, NamedTuple

from .core import Instance, Job


class PolicyViolation(RuntimeError):
    """The policy asked for something the machine model forbids."""


class RunInterval(NamedTuple):
    machine: int
    job: int
    start: int
    end: int


class PolicyEvent(NamedTuple):
    t: int
    kind: str
    job: int | None
    machine: int | None = None
    extra: dict[str, Any] = {}


@dataclass
class Trace:
    machines: int
    run_intervals: list[RunInterval] = field(default_factory=list)
    completions: list[tuple[int, int]] = field(default_factory=list)
    policy_events: list[PolicyEvent] = field(default_factory=list)
    config: dict[str, Any] = field(default_factory=dict)
    instance_hash: str = ""
    # number of distinct event instants processed; diagnostic only, not serialized
    events: int = field(default=0, compare=False)

    @property
    def completed(self) -> set[int]:
        return {j for j, _ in self.completions}

    def intervals_of(self, job: int) -> list[RunInterval]:
        return [iv for iv in self.run_intervals if iv.job == job]


class RunSet:
    """Machine -> job assignment that remembers which machines changed."""

    __slots__ = ("machines", "_by_machine", "_by_job", "_dirty")

    def __init__(self, machines: int) -> None:
        self.machines = machines
        self._by_machine: dict[int, int] = {}
        self._by_job: dict[int, int] = {}
        self._dirty: set[int] = set()

    def assign(self, machine: int, job: int | None) -> None:
        if not 0 <= machine < self.machines:
            raise PolicyViolation(f"machine {machine} outside 0..{self.machines - 1}")
        old = self._by_machine.get(machine)
        if old == job:
            return
        if job is not None:
            other = self._by_job.get(job)
            if other is not None:
                raise PolicyViolation(f"job {job} already runs on machine {other}")
        if old is not None:
            del self._by_job[old]
        if job is None:
            del self._by_machine[machine]
        else:
            self._by_machine[machine] = job
            self._by_job[job] = machine
        self._dirty.add(machine)

    def clear(self, machine: int) -> None:
        self.assign(machine, None)

    def job_on(self, machine: int) -> int | None:
        return self._by_machine.get(machine)

    def machine_of(self, job: int) -> int | None:
        return self._by_job.get(job)

    def __contains__(self, job: int) -> bool:
        return job in self._by_job

    def __len__(self) -> int:
        return len(self._by_machine)

    def drain(self) -> set[int]:
        dirty = self._dirty
        self._dirty = set()
        return dirty

    def as_dict(self) -> dict[int, int]:
        return dict(self._by_machine)


class Policy:
    """Base class for scheduling policies driven by :func:`simulate`.

    Subclasses keep ``self.running`` up to date and report any self-generated
    future instant (own completions, window expiries) from ``next_event_time``.
    """

    name = "policy"

    def __init__(self, machines: int, log: list[PolicyEvent] | None = None, machine_offset: int = 0):
        self.machines = machines
        self.running = RunSet(machines)
        self.log: list[PolicyEvent] = [] if log is None else log
        self.machine_offset = machine_offset

    def emit(self, t: int, kind: str, job: int | None, machine: int | None = None, **extra: Any) -> None:
        if machine is not None:
            machine += self.machine_offset
        self.log.append(PolicyEvent(t, kind, job, machine, extra))

    def on_release(self, job: Job, t: int) -> None:
        pass

    def on_completion(self, job: Job, t: int) -> None:
        pass

    def advance(self, t: int) -> None:
        pass

    def on_tick_boundary(self, t: int) -> None:
        pass

    def next_event_time(self, t: int) -> int | None:
        return None

    def run_set(self, t: int) -> dict[int, int]:
        return self.running.as_dict()

    def remaining(self, job: int, t: int) -> int:
        raise NotImplementedError

    def config(self) -> dict[str, Any]:
        return {"policy": self.name}


@dataclass
class SimConfig:
    # Extra instants at which the kernel re-queries the policy; must not change the trace.
    extra_times: Iterable[int] = ()
    max_events: int | None = None


def next_event_time(
    t: int,
    running_remaining: Iterable[int],
    next_release: int | None,
    registered: int | None = None,
) -> int | None:
    """Earliest of: next release, predicted completion of a running job, registered policy time."""
    candidates = [t + r for r in running_remaining]
    if next_release is not None:
        candidates.append(next_release)
    if registered is not None:
        candidates.append(registered)
    return min(candidates) if candidates else None


def _coalesce(intervals: list[RunInterval]) -> list[RunInterval]:
    intervals.sort(key=lambda iv: (iv.machine, iv.start))
    merged: list[RunInterval] = []
    for iv in intervals:
        if merged:
            last = merged[-1]
            if last.machine == iv.machine and last.job == iv.job and last.end == iv.start:
                merged[-1] = RunInterval(last.machine, last.job, last.start, iv.end)
                continue
        merged.append(iv)
    merged.sort(key=lambda iv: (iv.start, iv.machine, iv.job))
    return merged


def simulate(instance: Instance, policy: Policy, config: SimConfig | None = None) -> Trace:
    """Run ``policy`` on ``instance`` and return the physical trace."""
    # Only acyclic tuples are allocated, so cyclic collection is pure overhead here.
    was_enabled = gc.isenabled()
    gc.disable()
    try:
        return _simulate(instance, policy, config)
    finally:
        if was_enabled:
            gc.enable()


def _simulate(instance: Instance, policy: Policy, config: SimConfig | None) -> Trace:
    config = config or SimConfig()
    if policy.machines > instance.machines:
        raise PolicyViolation(
            f"policy uses {policy.machines} machines, instance has {instance.machines}"
        )
    jobs = instance.jobs
    n = len(jobs)
    order = sorted(range(n), key=lambda j: (jobs[j].release, j))
    extra = sorted(set(config.extra_times))
    extra_i = 0

    remaining = [job.size for job in jobs]
    released = [False] * n
    since: dict[int, int] = {}
    where: dict[int, int] = {}
    on_machine: dict[int, int] = {}
    finish_heap: list[tuple[int, int, int]] = []
    raw_intervals: list[RunInterval] = []
    completions: list[tuple[int, int]] = []
    running = policy.running

    def close(job: int, machine: int, t: int) -> None:
        start = since.pop(job)
        del where[job]
        del on_machine[machine]
        if t > start:
            raw_intervals.append(RunInterval(machine, job, start, t))
            remaining[job] -= t - start

    ri = 0
    t: int | None = None
    if n:
        t = jobs[order[0]].release
    if extra and (t is None or extra[0] < t):
        t = extra[0]
    events = 0
    while t is not None:
        events += 1
        if config.max_events is not None and events > config.max_events:
            raise PolicyViolation(f"exceeded {config.max_events} events")
        while extra_i < len(extra) and extra[extra_i] <= t:
            extra_i += 1

        done: list[int] = []
        while finish_heap and finish_heap[0][0] <= t:
            fin, j, start = heapq.heappop(finish_heap)
            if since.get(j) != start:
                continue
            close(j, where[j], fin)
            completions.append((j, fin))
            done.append(j)
        for j in done:
            policy.on_completion(jobs[j], t)
        policy.advance(t)
        for j in done:
            if j in running:
                raise PolicyViolation(f"job {j} still scheduled after completing at {t}")

        while ri < n and jobs[order[ri]].release == t:
            j = order[ri]
            released[j] = True
            policy.on_release(jobs[j], t)
            ri += 1
        policy.on_tick_boundary(t)

        dirty = running.drain()
        if dirty:
            opens = []
            for machine in sorted(dirty):
                new = running.job_on(machine)
                old = on_machine.get(machine)
                if old == new:
                    continue
                if old is not None:
                    close(old, machine, t)
                if new is not None:
                    opens.append((machine, new))
            for machine, j in opens:
                if not 0 <= j < n or not released[j]:
                    raise PolicyViolation(f"job {j} scheduled at {t} before release")
                if remaining[j] <= 0:
                    raise PolicyViolation(f"job {j} scheduled at {t} with no work left")
                if j in where:
                    raise PolicyViolation(f"job {j} on two machines at {t}")
                since[j] = t
                where[j] = machine
                on_machine[machine] = j
                heapq.heappush(finish_heap, (t + remaining[j], j, t))

        nxt = jobs[order[ri]].release if ri < n else None
        while finish_heap and since.get(finish_heap[0][1]) != finish_heap[0][2]:
            heapq.heappop(finish_heap)
        if finish_heap and (nxt is None or finish_heap[0][0] < nxt):
            nxt = finish_heap[0][0]
        own = policy.next_event_time(t)
        if own is not None:
            if own <= t:
                raise PolicyViolation(f"policy registered non-future time {own} at {t}")
            if nxt is None or own < nxt:
                nxt = own
        if nxt is not None and extra_i < len(extra) and extra[extra_i] < nxt:
            nxt = extra[extra_i]
        t = nxt

    if since:
        raise PolicyViolation(f"jobs {sorted(since)} still running with no future event")
    completions.sort(key=lambda c: (c[1], c[0]))
    trace = Trace(
        machines=instance.machines,
        run_intervals=_coalesce(raw_intervals),
        completions=completions,
        policy_events=list(policy.log),
        config=policy.config(),
        events=events,
    )
    return trace
