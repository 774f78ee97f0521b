from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import instances
from reference import naive_mlax
from throughput_sched.core import Job, ingest
from throughput_sched.engine import simulate
from throughput_sched.mlax import (
    MlaxConfig, MlaxPolicy, Variant, check_viability, choose_action, lax_variant_gate,
    mlax_run_set, on_completion_pop,
)
from throughput_sched.validate import check_mlax_rules, stack_accounting


def mk(i, x, lax, r=0):
    return Job(i, r, x, r + x + lax)


# -- viability ----------------------------------------------------------------

def test_viability_all_sentinels():
    assert check_viability(mk(0, 1, 10_000), [None] * 8, MlaxConfig(alpha=24))


def test_viability_seven_sentinels_and_a_large_top():
    frontier = [None] * 7 + [mk(1, 1, 0)]          # alpha * x = 24 >= 16
    assert check_viability(mk(0, 1, 16), frontier, MlaxConfig(alpha=24))


def test_viability_six_sentinels_is_short_of_seven():
    frontier = [None] * 6 + [mk(1, 1, 0), mk(2, 1, 0)]   # 24 < 30
    assert not check_viability(mk(0, 1, 30), frontier, MlaxConfig(alpha=24))


def test_lax_variant_viability_half_quorum():
    cfg = MlaxConfig.lax_variant(alpha=1)
    frontier = [mk(10 + i, 50, 0) for i in range(4)] + [mk(20 + i, 1, 0) for i in range(4)]
    assert check_viability(mk(0, 1, 40), frontier, cfg)          # 4 >= ceil(8/2)
    frontier[0] = mk(99, 1, 0)
    assert not check_viability(mk(0, 1, 40), frontier, cfg)


# -- pseudo-release actions ------------------------------------------------------

def test_rule_a_any_empty_stack():
    cfg = MlaxConfig(alpha=24)
    stacks = [[mk(1, 5, 0)], [], [mk(2, 5, 0)]]
    assert choose_action(mk(0, 3, 1), stacks, 0, cfg) == ("push", 1)


def test_rule_a_lowest_index():
    cfg = MlaxConfig(alpha=2)
    stacks = [[mk(1, 1, 3)], [mk(2, 1, 10)], [mk(3, 1, 10)]]
    assert choose_action(mk(0, 4, 0), stacks, 0, cfg) == ("push", 1)


def _rule_b_stacks(qualifying: int):
    # alpha = 1, x_j = 10: a second-top qualifies when its laxity >= 10; no top has laxity >= 10
    tops = [9, 5, 8, 8, 8, 8, 4, 8]
    stacks = []
    for i, top in enumerate(tops):
        second = 20 if i < qualifying else 3
        stacks.append([mk(100 + i, 1, second), mk(200 + i, 1, top)])
    return stacks


def test_rule_b_replaces_minimum_laxity_top():
    cfg = MlaxConfig(alpha=1)
    # six qualifying second-tops (6 >= 3/4 * 8); the laxity-4 top sits on a non-qualifying stack
    assert choose_action(mk(0, 10, 7), _rule_b_stacks(6), 0, cfg) == ("replace", 1)


def test_rule_b_quorum_not_met():
    cfg = MlaxConfig(alpha=1)
    assert choose_action(mk(0, 10, 7), _rule_b_stacks(5), 0, cfg) == ("noop", None)


def test_lax_variant_replaces_without_quorum():
    cfg = MlaxConfig.lax_variant(alpha=1)
    assert choose_action(mk(0, 10, 7), _rule_b_stacks(2), 0, cfg) == ("replace", 1)


def test_lax_variant_gate_boundary():
    cfg = MlaxConfig.lax_variant(alpha=1)
    j = Job(0, 0, 4, 14)                                   # laxity 10
    assert lax_variant_gate(j, 4, 5, [None], cfg)           # remaining laxity 5 = 10/2
    assert not lax_variant_gate(j, 4, 6, [None], cfg)       # remaining laxity 4 < 5


# -- completion pops -------------------------------------------------------------

def test_completion_pop_keeps_feasible_job():
    a, b = Job(1, 0, 2, 10), Job(2, 0, 1, 10)
    stack = [a, b]
    assert on_completion_pop(stack, {1: 2, 2: 0}, 3) == [("completion_pop", 2)]
    assert stack == [a]


def test_completion_pop_removes_infeasible_job():
    a, b = Job(1, 0, 5, 6), Job(2, 0, 1, 10)
    stack = [a, b]
    assert on_completion_pop(stack, {1: 5, 2: 0}, 3) == [("completion_pop", 2), ("infeasible_pop", 1)]
    assert stack == []


def test_feasible_job_shields_infeasible_one_below():
    a, c, b = Job(1, 0, 5, 6), Job(3, 0, 1, 10), Job(2, 0, 1, 10)
    stack = [a, c, b]
    assert on_completion_pop(stack, {1: 5, 3: 1, 2: 0}, 3) == [("completion_pop", 2)]
    assert stack == [a, c]


def test_run_set_maps_tops_to_their_machines():
    assert mlax_run_set([]) == {}
    assert mlax_run_set([[], []]) == {}
    assert mlax_run_set([[7, 4], [], [9]]) == {0: 4, 2: 9}


def test_replaced_job_runs_from_replacement_time():
    # m=1, alpha=1; job 1 lands on top of 0 and then gets replaced by 2
    inst = ingest([
        {"id": 0, "release": 0, "size": 10, "deadline": 40},   # laxity 30
        {"id": 1, "release": 1, "size": 5, "deadline": 7},     # laxity 1: pushed onto 0
        {"id": 2, "release": 2, "size": 5, "deadline": 9},     # laxity 2 > 1, second-top laxity 30 >= 5
    ], 1)
    policy = MlaxPolicy(1, MlaxConfig(alpha=1, viability_fraction=1, replace_fraction=1))
    trace = simulate(inst, policy)
    kinds = [(e.kind, e.job, e.t) for e in trace.policy_events if e.kind in ("push", "replace")]
    assert kinds == [("push", 0, 0), ("push", 1, 2), ("replace", 2, 4)]
    assert any(iv.job == 2 and iv.start == 4 and iv.machine == 0 for iv in trace.run_intervals)


# -- hand-built adversarial fixture -----------------------------------------------

ADVERSARIAL = [
    {"id": 0, "release": 0, "size": 10, "deadline": 14},
    {"id": 1, "release": 1, "size": 4, "deadline": 9},
    {"id": 2, "release": 2, "size": 4, "deadline": 6},
]


def test_adversarial_instance_forces_an_infeasible_pop():
    # Hand trace (m=1, alpha=1, original ticks): A pushed at 0; B pushed on A at 1;
    # C pushed on B at 2; C completes at 6, B at 9; A still needs 9 by 14 -> infeasible pop.
    inst = ingest(ADVERSARIAL, 1)
    policy = MlaxPolicy(1, MlaxConfig(alpha=1))
    trace = simulate(inst, policy)
    assert policy.counters == {"pushes": 3, "replaces": 0, "completion_pops": 2, "infeasible_pops": 1}
    counters = stack_accounting(trace)
    assert counters.pushes == counters.pops == 3
    assert trace.completions == [(2, 12), (1, 18)]   # internal ticks
    ref = naive_mlax(inst, 1, Fraction(7, 8), Fraction(3, 4))
    assert ref.counters == policy.counters


# -- reference agreement -----------------------------------------------------------

@given(instances(n_max=8, m_max=4, lax_max=16), st.sampled_from([1, 2, 3, 8]),
       st.sampled_from(["mlax", "lax_variant"]))
def test_matches_tick_level_reference(inst, alpha, variant):
    if variant == "mlax":
        cfg = MlaxConfig(alpha=alpha)
        ref = naive_mlax(inst, alpha, Fraction(7, 8), Fraction(3, 4))
    else:
        cfg = MlaxConfig.lax_variant(alpha)
        ref = naive_mlax(inst, alpha, Fraction(1, 2), None, strict_half=True)
    policy = MlaxPolicy(inst.machines, cfg)
    trace = simulate(inst, policy)
    decisions = [(e.t, e.job, e.extra["action"], e.machine) for e in trace.policy_events
                 if e.kind == "pseudo_release"]
    expiries = [(e.t, e.job) for e in trace.policy_events if e.kind == "window_expiry"]
    assert decisions == ref.decisions
    assert sorted(expiries) == sorted(ref.expiries)
    assert trace.completions == ref.completions
    assert policy.counters == ref.counters


@given(instances(n_max=8, m_max=4, lax_max=16), st.sampled_from([1, 4, 24]))
def test_accounting_and_windows(inst, alpha):
    policy = MlaxPolicy(inst.machines, MlaxConfig(alpha=alpha))
    trace = simulate(inst, policy)
    counters = stack_accounting(trace)
    assert counters.pushes == counters.completion_pops + counters.infeasible_pops
    for j, t in policy.pseudo_release.items():
        job = inst.jobs[j]
        assert job.release <= t <= job.window_end
    assert check_mlax_rules(inst, trace).ok


def test_config_invariants():
    with pytest.raises(ValueError):
        MlaxConfig(alpha=0)
    with pytest.raises(ValueError):
        MlaxConfig(viability_fraction=Fraction(1, 2), replace_fraction=Fraction(3, 4))
    cfg = MlaxConfig()
    assert (cfg.alpha, cfg.viability_quorum(8), cfg.replace_quorum(8)) == (24, 7, 6)
    assert MlaxConfig.from_dict(cfg.as_dict()) == cfg
    assert MlaxConfig.lax_variant().variant is Variant.LAX_VARIANT
