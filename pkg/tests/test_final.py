import logging

import pytest
from hypothesis import given

from conftest import instances
from throughput_sched.core import ingest
from throughput_sched.final import ConfigError, FinalPolicy, arbitrate_shared, run_final
from throughput_sched.gen import GenSpec, generate
from throughput_sched.validate import full_report


def test_arbitration_smaller_virtual_remaining_wins():
    assert arbitrate_shared({1}, {1}, {1: 3}, {1: 5}) == {1: "srpt"}
    assert arbitrate_shared({1}, {1}, {1: 6}, {1: 5}) == {1: "mlax"}


def test_arbitration_single_side():
    assert arbitrate_shared(set(), {4}, {}, {4: 2}) == {4: "mlax"}
    assert arbitrate_shared({4}, set(), {4: 2}, {}) == {4: "srpt"}


def test_arbitration_tie_goes_to_srpt():
    assert arbitrate_shared({2}, {2}, {2: 4}, {2: 4}) == {2: "srpt"}


def test_needs_three_machines():
    with pytest.raises(ConfigError):
        run_final(ingest([], 2))
    with pytest.raises(ConfigError):
        FinalPolicy(1)


def test_warns_below_guarantee_regime(caplog):
    with caplog.at_level(logging.WARNING):
        run_final(ingest([], 6))
    assert "below the m ≥ 48 regime" in caplog.text


def _hi_jobs(n):
    return [{"id": i, "release": i, "size": 2, "deadline": i + 2 + 5} for i in range(n)]


def _lo_jobs(n):
    return [{"id": i, "release": i, "size": 3, "deadline": i + 3} for i in range(n)]


def test_all_high_laxity_runs_only_on_highlax_block():
    inst = ingest(_hi_jobs(5), 6)
    res = run_final(inst)
    assert {iv.machine for iv in res.trace.run_intervals} <= {0, 1}
    assert res.objective == res.stats["highlax"].physical_completions == 5
    assert res.stats["srpt"].virtual_completions == res.stats["mlax"].virtual_completions == 0


def test_all_zero_laxity_leaves_highlax_block_idle():
    inst = ingest(_lo_jobs(5), 6)
    res = run_final(inst)
    assert all(iv.machine >= 2 for iv in res.trace.run_intervals)
    assert res.stats["highlax"].physical_completions == 0
    assert res.objective == len(res.trace.completions)


@pytest.mark.parametrize("seed", range(5))
def test_objective_dominates_each_group_at_m48(seed):
    inst = generate(GenSpec(kind="mixed", n=30, m=48, seed=seed, horizon=20, size_max=12))
    res = run_final(inst)
    assert full_report(inst, res.trace).ok
    assert res.objective >= max(s.virtual_completions for s in res.stats.values())
    assert res.objective == sum(s.physical_completions for s in res.stats.values())


@given(instances(n_max=8, m_min=3, m_max=7, lax_max=16))
def test_group_isolation_and_validity(inst):
    res = run_final(inst)
    third = inst.machines // 3
    for iv in res.trace.run_intervals:
        job = inst.jobs[iv.job]
        if job.laxity > job.size:
            assert 0 <= iv.machine < third
        else:
            assert third <= iv.machine < 3 * third
    assert full_report(inst, res.trace).ok
    done = {j for j, _ in res.trace.completions}
    for ev in res.trace.policy_events:
        if ev.kind == "virtual_completion":
            assert ev.job in done
