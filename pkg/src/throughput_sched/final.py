"""Three-way composite: high-laxity scheduler, SRPT and MLax on disjoint machine blocks.

Jobs with laxity > size go to the high-laxity block.  Every other job is
offered to both SRPT and MLax, each of which keeps a virtual copy and behaves
exactly as it would alone on its own block.  When both want to run the same
job, the copy with strictly less virtual remaining work runs it physically
(ties go to SRPT) and the other only simulates; either way both virtual copies
lose work.  A job counts once its physical remaining work reaches zero.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any

from .core import Instance, Job, laxity
from .engine import Policy, PolicyEvent, SimConfig, Trace, simulate
from .highlax import make_highlax
from .mlax import MlaxConfig, MlaxPolicy
from .srpt import SrptPolicy

log = logging.getLogger(__name__)

GUARANTEE_MIN_MACHINES = 48


class ConfigError(ValueError):
    pass


def arbitrate_shared(
    run_srpt: set[int],
    run_mlax: set[int],
    virtual_srpt: dict[int, int],
    virtual_mlax: dict[int, int],
) -> dict[int, str]:
    """Which side physically runs each job that at least one side wants to run."""
    owner: dict[int, str] = {}
    for j in run_srpt | run_mlax:
        if j in run_srpt and j in run_mlax:
            owner[j] = "mlax" if virtual_mlax[j] < virtual_srpt[j] else "srpt"
        else:
            owner[j] = "srpt" if j in run_srpt else "mlax"
    return owner


@dataclass
class GroupStats:
    policy: str
    virtual_completions: int = 0
    physical_completions: int = 0
    pushes: int = 0
    replaces: int = 0
    completion_pops: int = 0
    infeasible_pops: int = 0

    def as_row(self) -> dict[str, Any]:
        return dict(self.__dict__)


@dataclass
class FinalResult:
    trace: Trace
    objective: int
    stats: dict[str, GroupStats] = field(default_factory=dict)


class FinalPolicy(Policy):
    name = "final"

    def __init__(self, machines: int, mlax_cfg: MlaxConfig | None = None, highlax: str = "admission_edf",
                 log_: list[PolicyEvent] | None = None):
        if machines < 3:
            raise ConfigError(f"the composite needs at least 3 machines, got {machines}")
        super().__init__(machines, log_)
        third = machines // 3
        self.groups = {
            "highlax": (0, third),
            "srpt": (third, 2 * third),
            "mlax": (2 * third, 3 * third),
        }
        self.highlax_name = highlax
        self.mlax_cfg = mlax_cfg or MlaxConfig()
        self.hi = make_highlax(highlax, third, self.log, 0)
        self.srpt = SrptPolicy(third, self.log, third, emit_completions=True)
        self.mlax = MlaxPolicy(third, self.mlax_cfg, self.log, 2 * third)
        self._offset = {"srpt": third, "mlax": 2 * third}
        self._sub = {"srpt": self.srpt, "mlax": self.mlax}
        self.lo_jobs: set[int] = set()
        self.physically_done: set[int] = set()
        self.placement: dict[int, str] = {}
        self.stats = {name: GroupStats(name) for name in ("highlax", "srpt", "mlax")}
        self._seen_virtual = {"srpt": 0, "mlax": 0}

    def config(self) -> dict[str, Any]:
        return {
            "policy": self.name,
            "highlax": self.highlax_name,
            "groups": {k: list(v) for k, v in self.groups.items()},
            **self.mlax_cfg.as_dict(),
        }

    def remaining(self, job: int, t: int) -> int:
        if job in self.lo_jobs:
            return min(self.srpt.remaining(job, t), self.mlax.remaining(job, t))
        return self.hi.remaining(job, t)

    def on_release(self, job: Job, t: int) -> None:
        if laxity(job) > job.size:
            self.hi.on_release(job, t)
        else:
            self.lo_jobs.add(job.id)
            self.srpt.on_release(job, t)
            self.mlax.on_release(job, t)
        self._sync(t)

    def on_completion(self, job: Job, t: int) -> None:
        j = job.id
        if j not in self.lo_jobs:
            self.stats["highlax"].physical_completions += 1
            return
        self.physically_done.add(j)
        owner = self.placement.pop(j)
        self.stats[owner].physical_completions += 1
        machine = self.running.machine_of(j)
        if machine is not None:
            self.running.clear(machine)

    def advance(self, t: int) -> None:
        self.hi.advance(t)
        self.srpt.advance(t)
        self.mlax.advance(t)
        for name in ("srpt", "mlax"):
            done = self._sub[name].completed
            for j in done[self._seen_virtual[name]:]:
                if j not in self.physically_done:
                    raise AssertionError(f"job {j} finished virtually in {name} but not physically at {t}")
            self._seen_virtual[name] = len(done)
        self._sync(t)

    def on_tick_boundary(self, t: int) -> None:
        self.hi.on_tick_boundary(t)
        self.srpt.on_tick_boundary(t)
        self.mlax.on_tick_boundary(t)
        self._sync(t)

    def next_event_time(self, t: int) -> int | None:
        times = [p.next_event_time(t) for p in (self.hi, self.srpt, self.mlax)]
        times = [x for x in times if x is not None]
        return min(times) if times else None

    def _sync(self, t: int) -> None:
        for machine in self.hi.running.drain():
            self.running.assign(machine, self.hi.running.job_on(machine))
        affected: set[int] = set()
        for name, sub in self._sub.items():
            offset = self._offset[name]
            for machine in sub.running.drain():
                job = sub.running.job_on(machine)
                if job is not None:
                    affected.add(job)
                old = self.running.job_on(offset + machine)
                if old is not None:
                    affected.add(old)
        for j in sorted(affected):
            self._place(j, t)

    def _place(self, j: int, t: int) -> None:
        target: str | None = None
        if j not in self.physically_done:
            s_machine = self.srpt.running.machine_of(j)
            m_machine = self.mlax.running.machine_of(j)
            if s_machine is not None and m_machine is not None:
                if self.mlax.remaining(j, t) < self.srpt.remaining(j, t):
                    target = "mlax"
                else:
                    target = "srpt"
            elif s_machine is not None:
                target = "srpt"
            elif m_machine is not None:
                target = "mlax"
        current = self.running.machine_of(j)
        if current is not None:
            self.running.clear(current)
        if target is None:
            self.placement.pop(j, None)
            return
        self.placement[j] = target
        machine = self._offset[target] + self._sub[target].running.machine_of(j)
        self.running.assign(machine, j)

    def collect_stats(self) -> dict[str, GroupStats]:
        self.stats["highlax"].virtual_completions = len(self.hi.completed)
        self.stats["srpt"].virtual_completions = len(self.srpt.completed)
        mstats = self.stats["mlax"]
        mstats.virtual_completions = len(self.mlax.completed)
        for key, value in self.mlax.counters.items():
            setattr(mstats, key, value)
        return self.stats


def run_final(
    instance: Instance,
    machines: int | None = None,
    mlax_cfg: MlaxConfig | None = None,
    highlax: str = "admission_edf",
    sim_config: SimConfig | None = None,
) -> FinalResult:
    """Simulate the composite and return its physical trace plus per-group stats."""
    m = instance.machines if machines is None else machines
    if m < 3:
        raise ConfigError(f"the composite needs at least 3 machines, got {m}")
    if m < GUARANTEE_MIN_MACHINES:
        log.warning("m=%d is below the m ≥ %d regime of the composite's guarantee", m, GUARANTEE_MIN_MACHINES)
    policy = FinalPolicy(m, mlax_cfg, highlax)
    trace = simulate(instance.with_machines(m), policy, sim_config)
    stats = policy.collect_stats()
    return FinalResult(trace, len(trace.completions), stats)
