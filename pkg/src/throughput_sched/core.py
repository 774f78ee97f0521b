"""Domain types and the laxity/feasibility primitives.

All times are integer ticks.  External inputs are scaled by ``TICK_SCALE`` on
ingestion so that the end of a job's viability window, ``release + laxity/2``,
always lands on the integer grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

TICK_SCALE = 2
MAX_TICK = 2**63 - 1


class ValidationError(ValueError):
    """Raised when an instance or job violates an ingestion invariant."""

    def __init__(self, message: str, job_id: int | None = None) -> None:
        self.job_id = job_id
        super().__init__(message)


@dataclass(frozen=True, slots=True)
class Job:
    id: int
    release: int
    size: int
    deadline: int

    def __post_init__(self) -> None:
        if self.size <= 0:
            raise ValidationError(f"job {self.id}: size must be positive", self.id)
        if self.release < 0:
            raise ValidationError(f"job {self.id}: negative release", self.id)
        if self.release + self.size > self.deadline:
            raise ValidationError(
                f"job {self.id}: release + size > deadline "
                f"({self.release} + {self.size} > {self.deadline})",
                self.id,
            )

    @property
    def laxity(self) -> int:
        return self.deadline - self.release - self.size

    @property
    def window_end(self) -> int:
        """Last tick at which the job may still be pseudo-released.

        Only exact when the job lives in scaled ticks (even laxity).
        """
        return self.release + self.laxity // 2


@dataclass
class JobState:
    job: Job
    remaining: int
    completed_at: int | None = None

    @classmethod
    def fresh(cls, job: Job) -> "JobState":
        return cls(job, job.size)


@dataclass(frozen=True)
class Instance:
    """A finite job set on ``machines`` identical machines, in internal ticks."""

    jobs: tuple[Job, ...]
    machines: int
    label: str = ""
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.machines < 1:
            raise ValidationError("machines must be a positive integer")
        for index, job in enumerate(self.jobs):
            if job.id != index:
                ids = [j.id for j in self.jobs]
                if len(set(ids)) != len(ids):
                    raise ValidationError("duplicate id")
                raise ValidationError(f"job ids must be dense 0..n-1 (got {job.id} at {index})", job.id)

    def __len__(self) -> int:
        return len(self.jobs)

    def with_machines(self, machines: int) -> "Instance":
        return Instance(self.jobs, machines, self.label, self.seed)

    def subset(self, ids: Iterable[int]) -> list[Job]:
        return [self.jobs[i] for i in sorted(ids)]


def laxity(job: Job) -> int:
    return (job.deadline - job.release) - job.size


def is_feasible(state: JobState, t: int) -> bool:
    """True iff the job still has work left and can finish by its deadline from ``t``."""
    return state.remaining > 0 and t + state.remaining <= state.job.deadline


def classify_laxity(jobs: Iterable[Job]) -> tuple[list[Job], list[Job]]:
    """Split jobs into (high-laxity, low-laxity); ties ``laxity == size`` go low."""
    hi: list[Job] = []
    lo: list[Job] = []
    for job in jobs:
        (hi if laxity(job) > job.size else lo).append(job)
    return hi, lo


def _scaled(value: int, what: str, job_id: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"job {job_id}: {what} must be an integer", job_id)
    scaled = value * TICK_SCALE
    if abs(scaled) > MAX_TICK:
        raise ValidationError(f"job {job_id}: {what} overflows 64-bit ticks", job_id)
    return scaled


def ingest(
    records: Sequence[Mapping[str, int]],
    machines: int,
    label: str = "",
    seed: int | None = None,
) -> Instance:
    """Build an Instance from records in original ticks.

    Each record carries ``id``, ``release``, ``size`` and ``deadline``.  Values
    are multiplied by ``TICK_SCALE``; jobs are re-ordered by id.
    """
    seen: set[int] = set()
    jobs: list[Job] = []
    for rec in records:
        jid = rec["id"]
        if jid in seen:
            raise ValidationError(f"duplicate id {jid}", jid)
        seen.add(jid)
        jobs.append(
            Job(
                jid,
                _scaled(rec["release"], "release", jid),
                _scaled(rec["size"], "size", jid),
                _scaled(rec["deadline"], "deadline", jid),
            )
        )
    jobs.sort(key=lambda j: j.id)
    return Instance(tuple(jobs), machines, label, seed)


def to_original(job: Job) -> dict[str, int]:
    return {
        "id": job.id,
        "release": job.release // TICK_SCALE,
        "size": job.size // TICK_SCALE,
        "deadline": job.deadline // TICK_SCALE,
    }
