"""Post-hoc checks over traces.

Everything here reads only the instance and the serialized trace, never live
policy state.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .core import Instance, Job
from .engine import RunInterval, Trace

STACK_KINDS = ("push", "replace", "completion_pop", "infeasible_pop")


@dataclass
class Violation:
    rule: str
    time: int | None
    detail: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)
    stats: dict[str, Any] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, rule: str, time: int | None, detail: str) -> None:
        self.violations.append(Violation(rule, time, detail))

    def merge(self, other: "ValidationReport") -> "ValidationReport":
        self.violations.extend(other.violations)
        self.stats.update(other.stats)
        return self

    def as_dict(self) -> dict[str, Any]:
        return {
            "ok": self.ok,
            "violations": [v.__dict__ for v in self.violations],
            "stats": self.stats,
        }


class AccountingViolation(AssertionError):
    def __init__(self, stack: int, detail: str) -> None:
        self.stack = stack
        super().__init__(f"stack {stack}: {detail}")


def validate_trace(instance: Instance, trace: Trace, m: int | None = None) -> ValidationReport:
    """Physical validity of a schedule trace."""
    m = trace.machines if m is None else m
    report = ValidationReport()
    jobs = instance.jobs
    n = len(jobs)
    per_machine: dict[int, list[RunInterval]] = defaultdict(list)
    per_job: dict[int, list[RunInterval]] = defaultdict(list)
    for iv in trace.run_intervals:
        if not 0 <= iv.machine < m:
            report.add("bad-machine", iv.start, f"machine {iv.machine} outside 0..{m - 1}")
        if not 0 <= iv.job < n:
            report.add("unknown-job", iv.start, f"job {iv.job}")
            continue
        if iv.end <= iv.start:
            report.add("empty-interval", iv.start, f"job {iv.job} [{iv.start},{iv.end})")
        if iv.start < jobs[iv.job].release:
            report.add("before-release", iv.start, f"job {iv.job} runs before release {jobs[iv.job].release}")
        per_machine[iv.machine].append(iv)
        per_job[iv.job].append(iv)

    for machine, ivs in per_machine.items():
        ivs.sort(key=lambda iv: iv.start)
        for a, b in zip(ivs, ivs[1:]):
            if b.start < a.end:
                report.add("machine-overlap", b.start,
                           f"machine {machine}: jobs {a.job} and {b.job} overlap")

    processed = {}
    for job, ivs in per_job.items():
        ivs.sort(key=lambda iv: iv.start)
        for a, b in zip(ivs, ivs[1:]):
            if b.start < a.end:
                report.add("job-overlap", b.start,
                           f"job {job} on machines {a.machine} and {b.machine} at once")
        processed[job] = sum(iv.end - iv.start for iv in ivs)
        if processed[job] > jobs[job].size:
            report.add("overrun", ivs[-1].end, f"job {job} processed {processed[job]} > size {jobs[job].size}")

    seen: set[int] = set()
    for job, t in trace.completions:
        if not 0 <= job < n:
            report.add("unknown-job", t, f"completion of job {job}")
            continue
        if job in seen:
            report.add("duplicate-completion", t, f"job {job}")
        seen.add(job)
        if processed.get(job, 0) != jobs[job].size:
            report.add("bad-processing", t,
                       f"job {job} completed with {processed.get(job, 0)} of {jobs[job].size} processed")
        elif max(iv.end for iv in per_job[job]) != t:
            report.add("completion-mismatch", t, f"job {job} last runs until {max(iv.end for iv in per_job[job])}")
        if t > jobs[job].deadline:
            report.add("late-completion", t, f"job {job} completes after deadline {jobs[job].deadline}")
    for job, total in processed.items():
        if total == jobs[job].size and job not in seen:
            report.add("missing-completion", None, f"job {job} fully processed but not reported complete")

    # busy machines never exceed m
    deltas: dict[int, int] = defaultdict(int)
    for iv in trace.run_intervals:
        deltas[iv.start] += 1
        deltas[iv.end] -= 1
    busy = 0
    for t in sorted(deltas):
        busy += deltas[t]
        if busy > m:
            report.add("over-capacity", t, f"{busy} machines busy, only {m}")
    report.stats["completions"] = len(trace.completions)
    return report


def is_forest_schedule(trace: Trace | list[RunInterval], machine: int | None = None) -> bool:
    """Do first-run/last-run spans of the jobs on ``machine`` form a laminar family?

    For ``f_j < f_k`` job ``j`` must not run anywhere inside ``(f_k, c_k)``.
    """
    intervals = trace.run_intervals if isinstance(trace, Trace) else trace
    ivs = [iv for iv in intervals if machine is None or iv.machine == machine]
    runs: dict[int, list[tuple[int, int]]] = defaultdict(list)
    for iv in ivs:
        runs[iv.job].append((iv.start, iv.end))
    span = {j: (min(a for a, _ in r), max(b for _, b in r)) for j, r in runs.items()}
    for j, (fj, _) in span.items():
        for k, (fk, ck) in span.items():
            if fj < fk:
                for a, b in runs[j]:
                    if max(a, fk) < min(b, ck):
                        return False
    return True


@dataclass
class StackCounters:
    pushes: int = 0
    replaces: int = 0
    completion_pops: int = 0
    infeasible_pops: int = 0

    @property
    def pops(self) -> int:
        return self.completion_pops + self.infeasible_pops


def stack_accounting(trace: Trace) -> StackCounters:
    """Count stack operations and check every stack returns to empty."""
    counters = StackCounters()
    depth: dict[int, int] = defaultdict(int)
    for ev in trace.policy_events:
        if ev.kind == "push":
            counters.pushes += 1
            depth[ev.machine] += 1
        elif ev.kind == "replace":
            counters.replaces += 1
            if depth[ev.machine] == 0:
                raise AccountingViolation(ev.machine, f"replace on an empty stack at t={ev.t}")
        elif ev.kind in ("completion_pop", "infeasible_pop"):
            if ev.kind == "completion_pop":
                counters.completion_pops += 1
            else:
                counters.infeasible_pops += 1
            depth[ev.machine] -= 1
            if depth[ev.machine] < 0:
                raise AccountingViolation(ev.machine, f"pop below the sentinel at t={ev.t}")
    for stack in sorted(depth):
        if depth[stack]:
            raise AccountingViolation(stack, f"ends with {depth[stack]} job(s)")
    if counters.pushes != counters.pops:
        raise AccountingViolation(-1, "pushes != completion pops + infeasible pops")
    return counters


# -- stack-rule replay ---------------------------------------------------------

def _mlax_params(trace: Trace) -> tuple[int, int, int, Fraction, Fraction, str]:
    cfg = trace.config
    if cfg.get("policy") == "final":
        lo, hi = cfg["groups"]["mlax"]
    else:
        lo, hi = 0, trace.machines
    return (lo, hi - lo, int(cfg["alpha"]), Fraction(cfg["viability_fraction"]),
            Fraction(cfg["replace_fraction"]), cfg["variant"])


def _mlax_jobs(instance: Instance, trace: Trace) -> list[Job]:
    if trace.config.get("policy") == "final":
        return [j for j in instance.jobs if j.laxity <= j.size]
    return list(instance.jobs)


def check_mlax_rules(instance: Instance, trace: Trace) -> ValidationReport:
    """Rebuild the stacks from the event log and re-check every stack decision.

    At each pseudo-release: window containment, viability quorum, rule-a
    adjacency with lowest-index choice, rule-b quorum and least-laxity choice,
    and that no earlier instant in the window was already viable.  Pops must
    remove the current top; every job is resolved or expires exactly at its
    window end.
    """
    report = ValidationReport()
    offset, m, alpha, vfrac, rfrac, variant = _mlax_params(trace)
    if m == 0:
        return report
    jobs = instance.jobs
    vquorum = math.ceil(vfrac * m)
    rquorum = math.ceil(rfrac * m)
    stacks: list[list[int]] = [[] for _ in range(m)]
    released = sorted(_mlax_jobs(instance, trace), key=lambda j: (j.release, j.id))
    pending: set[int] = set()
    resolved: dict[int, int] = {}
    expired: dict[int, int] = {}
    ri = 0

    def lax_of_top(i: int) -> float:
        return jobs[stacks[i][-1]].laxity if stacks[i] else math.inf

    def lax_of_second(i: int) -> float:
        return jobs[stacks[i][-2]].laxity if len(stacks[i]) >= 2 else math.inf

    def viable(job: Job) -> bool:
        count = sum(1 for s in stacks if not s or alpha * jobs[s[-1]].size >= job.laxity)
        return count >= vquorum

    events = [ev for ev in trace.policy_events
              if ev.kind in STACK_KINDS or ev.kind in ("pseudo_release", "window_expiry")]
    pos = 0
    times = sorted({ev.t for ev in events} | {j.release for j in released})
    for now in times:
        while ri < len(released) and released[ri].release <= now:
            pending.add(released[ri].id)
            ri += 1
        awaiting: tuple[int, str, int | None] | None = None
        while pos < len(events) and events[pos].t == now:
            ev = events[pos]
            pos += 1
            i = None if ev.machine is None else ev.machine - offset
            if ev.kind in ("push", "replace"):
                if awaiting is None:
                    report.add("unannounced", now, f"{ev.kind} of job {ev.job} without a pseudo-release")
                else:
                    j, action, stack = awaiting
                    if ev.job != j or ev.kind != action or i != stack:
                        report.add("action-mismatch", now,
                                   f"job {j}: announced {action}@{stack}, got {ev.kind}@{i}")
                    awaiting = None
            elif awaiting is not None:
                report.add("action-missing", now, f"job {awaiting[0]}: announced {awaiting[1]} never happened")
                awaiting = None
            if ev.kind == "pseudo_release":
                awaiting = _check_pseudo_release(
                    report, ev, i, jobs, stacks, pending, now, alpha, variant, rquorum,
                    viable, lax_of_top, lax_of_second)
                pending.discard(ev.job)
                resolved[ev.job] = now
                if awaiting[1] == "noop":
                    awaiting = None
            elif ev.kind == "window_expiry":
                job = jobs[ev.job]
                if ev.job not in pending:
                    report.add("expiry-not-pending", now, f"job {ev.job}")
                if now != job.window_end:
                    report.add("expiry-time", now, f"job {ev.job} window ends at {job.window_end}")
                pending.discard(ev.job)
                expired[ev.job] = now
            elif ev.kind == "push":
                stacks[i].append(ev.job)
            elif ev.kind == "replace":
                evicted = ev.extra.get("evicted")
                if not stacks[i] or stacks[i][-1] != evicted:
                    report.add("replace-not-top", now, f"stack {i}: evicted {evicted} is not the top")
                if stacks[i]:
                    stacks[i][-1] = ev.job
            elif ev.kind in ("completion_pop", "infeasible_pop"):
                if not stacks[i] or stacks[i][-1] != ev.job:
                    report.add("pop-not-top", now, f"stack {i}: popped {ev.job} is not the top")
                    if ev.job in stacks[i]:
                        stacks[i].remove(ev.job)
                else:
                    stacks[i].pop()
        if awaiting is not None:
            report.add("action-missing", now, f"job {awaiting[0]}: announced {awaiting[1]} never happened")
        # end of instant: nothing still pending may be viable, nothing past its window
        for j in sorted(pending):
            job = jobs[j]
            if viable(job):
                report.add("late-pseudo-release", now, f"job {j} viable at {now} but not pseudo-released")
            if job.window_end <= now:
                report.add("missed-expiry", now, f"job {j} still pending at window end {job.window_end}")
    for j in sorted(pending):
        report.add("unresolved", None, f"job {j} never pseudo-released nor expired")
    report.stats["pseudo_releases"] = len(resolved)
    report.stats["expiries"] = len(expired)
    return report


def _check_pseudo_release(report, ev, stack, jobs, stacks, pending, now, alpha, variant, rquorum,
                          viable, lax_of_top, lax_of_second) -> tuple[int, str, int | None]:
    """Check one pseudo-release against the rebuilt stacks; return the announced action."""
    j = ev.job
    job = jobs[j]
    action = ev.extra.get("action")
    if j not in pending:
        report.add("not-pending", now, f"job {j} pseudo-released twice or before release")
    if not job.release <= now <= job.window_end:
        report.add("window", now, f"job {j} pseudo-released outside [{job.release}, {job.window_end}]")
    if not viable(job):
        report.add("not-viable", now, f"job {j} lacks the viability quorum")
    a = alpha * job.size
    m = len(stacks)
    absorbing = [i for i in range(m) if a <= lax_of_top(i)]
    push_allowed = True
    if variant == "lax_variant":
        push_allowed = 2 * (job.deadline - now - job.size) >= job.laxity
    eligible = [i for i in range(m) if a <= lax_of_second(i)]
    candidates = [i for i in eligible if stacks[i] and job.laxity > lax_of_top(i)]
    if push_allowed and absorbing:
        expected: tuple[str, int | None] = ("push", absorbing[0])
    elif variant == "mlax" and len(eligible) < rquorum:
        expected = ("noop", None)
    elif candidates:
        expected = ("replace", min(candidates, key=lambda i: (lax_of_top(i), i)))
    else:
        expected = ("noop", None)
    if (action, stack) != expected:
        rule = {"push": "rule-a", "replace": "rule-b"}.get(expected[0], "rule-noop")
        report.add(rule, now, f"job {j}: took {action}@{stack}, rules require {expected[0]}@{expected[1]}")
    return j, action, stack


def check_admissions(instance: Instance, trace: Trace) -> ValidationReport:
    """Every job admitted by the high-laxity scheduler completes by its deadline."""
    report = ValidationReport()
    done = dict(trace.completions)
    admitted = [ev for ev in trace.policy_events if ev.kind == "admit"]
    for ev in admitted:
        job = instance.jobs[ev.job]
        if job.laxity <= job.size:
            report.add("admit-low-laxity", ev.t, f"job {ev.job} is not high-laxity")
        t = done.get(ev.job)
        if t is None:
            report.add("admitted-not-completed", ev.t, f"job {ev.job}")
        elif t > job.deadline:
            report.add("admitted-late", t, f"job {ev.job} finished after {job.deadline}")
    report.stats["admitted"] = len(admitted)
    return report


def full_report(instance: Instance, trace: Trace) -> ValidationReport:
    """Physical validity plus whatever policy-specific checks the trace supports."""
    report = validate_trace(instance, trace)
    policy = trace.config.get("policy")
    if policy in ("mlax", "lax_variant", "final"):
        try:
            counters = stack_accounting(trace)
            report.stats["stack"] = counters.__dict__
        except AccountingViolation as exc:
            report.add("stack-accounting", None, str(exc))
        report.merge(check_mlax_rules(instance, trace))
    if any(ev.kind == "admit" for ev in trace.policy_events):
        report.merge(check_admissions(instance, trace))
    return report
