from dataclasses import replace

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import instances
from throughput_sched.core import ingest
from throughput_sched.engine import PolicyEvent, RunInterval, Trace
from throughput_sched.experiment import run_policy
from throughput_sched.validate import (
    AccountingViolation, check_mlax_rules, full_report, is_forest_schedule, stack_accounting,
    validate_trace,
)


def rules(report):
    return {v.rule for v in report.violations}


INST = ingest([{"id": 0, "release": 0, "size": 2, "deadline": 4},
               {"id": 1, "release": 0, "size": 2, "deadline": 4}], 2)


def test_engine_traces_validate():
    assert validate_trace(INST, run_policy(INST, "srpt").trace).ok


def test_job_on_two_machines_is_flagged():
    trace = Trace(2, [RunInterval(0, 0, 0, 4), RunInterval(1, 0, 2, 4)], [], [])
    assert "job-overlap" in rules(validate_trace(INST, trace))


def test_late_completion_is_flagged():
    trace = Trace(1, [RunInterval(0, 0, 6, 10)], [(0, 10)], [])
    assert "late-completion" in rules(validate_trace(INST, trace))


def test_machine_overlap_and_capacity():
    trace = Trace(1, [RunInterval(0, 0, 0, 4), RunInterval(0, 1, 2, 6)], [], [])
    found = rules(validate_trace(INST, trace))
    assert "machine-overlap" in found


def test_run_before_release_and_bad_machine():
    inst = ingest([{"id": 0, "release": 3, "size": 1, "deadline": 9}], 1)
    assert "before-release" in rules(validate_trace(inst, Trace(1, [RunInterval(0, 0, 0, 2)], [], [])))
    assert "bad-machine" in rules(validate_trace(inst, Trace(1, [RunInterval(5, 0, 6, 8)], [], [])))


def test_wrong_processing_amount():
    trace = Trace(2, [RunInterval(0, 0, 0, 2)], [(0, 2)], [])
    assert rules(validate_trace(INST, trace)) & {"bad-processing", "completion-mismatch"}


def test_forest_examples():
    assert is_forest_schedule([RunInterval(0, 0, 0, 4)])
    nested = [RunInterval(0, 0, 0, 2), RunInterval(0, 1, 2, 4), RunInterval(0, 0, 4, 6)]
    assert is_forest_schedule(nested, 0)
    crossing = [RunInterval(0, 0, 0, 2), RunInterval(0, 1, 1, 3), RunInterval(0, 0, 4, 6)]
    assert not is_forest_schedule(crossing, 0)


def test_single_machine_srpt_is_a_forest():
    inst = ingest([{"id": 0, "release": 0, "size": 8, "deadline": 40},
                   {"id": 1, "release": 1, "size": 3, "deadline": 40},
                   {"id": 2, "release": 2, "size": 1, "deadline": 40}], 1)
    assert is_forest_schedule(run_policy(inst, "srpt").trace, 0)


def test_stack_accounting_examples():
    empty = run_policy(ingest([], 2), "mlax").trace
    assert stack_accounting(empty).pushes == 0
    one = run_policy(ingest([{"id": 0, "release": 0, "size": 1, "deadline": 3}], 1), "mlax").trace
    c = stack_accounting(one)
    assert (c.pushes, c.completion_pops, c.infeasible_pops) == (1, 1, 0)


def test_unbalanced_stack_is_reported():
    trace = Trace(1, [], [], [PolicyEvent(0, "push", 0, 0, {"under": None})])
    with pytest.raises(AccountingViolation) as info:
        stack_accounting(trace)
    assert info.value.stack == 0


def test_rule_replay_catches_a_wrong_stack_choice():
    inst = ingest([{"id": 0, "release": 0, "size": 2, "deadline": 3},
                   {"id": 1, "release": 0, "size": 1, "deadline": 3}], 2)
    trace = run_policy(inst, "mlax", alpha=1).trace
    assert check_mlax_rules(inst, trace).ok
    bad = [replace_machine(e) for e in trace.policy_events]
    forged = Trace(trace.machines, trace.run_intervals, trace.completions, bad, trace.config)
    assert not check_mlax_rules(inst, forged).ok


def replace_machine(ev):
    if ev.kind in ("pseudo_release", "push") and ev.job == 0:
        return ev._replace(machine=1)
    return ev


@given(instances(n_max=8, m_max=3), st.sampled_from(["srpt", "mlax", "lax_variant"]), st.data())
def test_mutated_traces_are_rejected(inst, policy, data):
    trace = run_policy(inst, policy, alpha=2).trace
    assert full_report(inst, trace).ok
    done = {j for j, _ in trace.completions}
    targets = [k for k, iv in enumerate(trace.run_intervals) if iv.job in done]
    if not targets:
        return
    k = data.draw(st.sampled_from(targets))
    iv = trace.run_intervals[k]
    mutated = list(trace.run_intervals)
    mutated[k] = iv._replace(end=iv.end + 1)       # one extra tick of work
    forged = replace(trace, run_intervals=mutated)
    assert not validate_trace(inst, forged).ok
