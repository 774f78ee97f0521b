import pytest
from hypothesis import given
from hypothesis import strategies as st

from throughput_sched.core import (
    MAX_TICK, TICK_SCALE, Instance, Job, JobState, ValidationError,
    classify_laxity, ingest, is_feasible, laxity, to_original,
)


def job(r, x, d, i=0):
    return Job(i, r, x, d)


@pytest.mark.parametrize("r,x,d,expected", [(0, 3, 10, 7), (0, 5, 5, 0), (4, 2, 12, 6)])
def test_laxity_examples(r, x, d, expected):
    assert laxity(job(r, x, d)) == expected
    assert job(r, x, d).laxity == expected


@pytest.mark.parametrize("remaining,d,t,expected", [(2, 10, 8, True), (2, 10, 9, False), (0, 10, 1, False)])
def test_is_feasible_examples(remaining, d, t, expected):
    state = JobState(job(0, 2, d), remaining)
    assert is_feasible(state, t) is expected


def test_classify_examples():
    hi_job = job(0, 3, 10)          # x=3, l=7
    lo_job = job(0, 5, 10, 1)       # x=5, l=5
    assert classify_laxity([hi_job]) == ([hi_job], [])
    assert classify_laxity([lo_job]) == ([], [lo_job])
    assert classify_laxity([]) == ([], [])


def test_job_rejects_bad_windows():
    with pytest.raises(ValidationError) as info:
        Job(3, 5, 4, 8)
    assert info.value.job_id == 3
    with pytest.raises(ValidationError):
        Job(0, 0, 0, 5)
    with pytest.raises(ValidationError):
        Job(0, -1, 1, 5)


def test_ingest_doubles_and_round_trips():
    recs = [{"id": 0, "release": 1, "size": 3, "deadline": 9}]
    inst = ingest(recs, 2)
    j = inst.jobs[0]
    assert (j.release, j.size, j.deadline) == (2, 6, 18)
    assert TICK_SCALE == 2
    assert j.window_end == j.release + j.laxity // 2
    assert to_original(j) == recs[0]


def test_ingest_rejects_duplicates_and_overflow():
    with pytest.raises(ValidationError, match="duplicate id"):
        ingest([{"id": 0, "release": 0, "size": 1, "deadline": 1}] * 2, 1)
    with pytest.raises(ValidationError):
        ingest([{"id": 0, "release": 0, "size": 1, "deadline": MAX_TICK}], 1)
    with pytest.raises(ValidationError):
        ingest([{"id": 0, "release": 0, "size": 4, "deadline": 3}], 1)


def test_instance_requires_dense_ids():
    with pytest.raises(ValidationError):
        Instance((Job(1, 0, 1, 1),), 1)
    with pytest.raises(ValidationError):
        Instance((), 0)


@given(st.integers(0, 100), st.integers(1, 50), st.integers(0, 50))
def test_release_size_laxity_identity(r, x, lax):
    j = Job(0, r, x, r + x + lax)
    assert j.release + j.size + j.laxity == j.deadline
    assert j.laxity >= 0


@given(st.lists(st.tuples(st.integers(0, 20), st.integers(1, 10), st.integers(0, 20)), max_size=20))
def test_classify_is_partition(triples):
    jobs = [Job(i, r, x, r + x + lax) for i, (r, x, lax) in enumerate(triples)]
    hi, lo = classify_laxity(jobs)
    assert len(hi) + len(lo) == len(jobs)
    assert not {j.id for j in hi} & {j.id for j in lo}
    assert all(j.laxity > j.size for j in hi) and all(j.laxity <= j.size for j in lo)


@given(st.integers(1, 20), st.integers(0, 40), st.integers(0, 40), st.integers(0, 40))
def test_feasibility_monotone_in_time(remaining, d_extra, t1, t2):
    state = JobState(Job(0, 0, remaining, remaining + d_extra), remaining)
    lo, hi = sorted((t1, t2))
    if is_feasible(state, hi):
        assert is_feasible(state, lo)
