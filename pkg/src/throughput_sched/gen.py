"""Seeded instance generators.

Every random draw is a pure function of ``(seed, kind, job index, field)``
through a hash-based counter RNG, so job ``i`` comes out the same no matter
how many jobs are generated or in which order.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import asdict, dataclass
from fractions import Fraction

from .core import Instance, ingest


class SpecError(ValueError):
    pass


KINDS = ("random", "disagreeable", "low_laxity", "mixed")


class CounterRng:
    """Stateless draws keyed by (seed, stream, index, field)."""

    def __init__(self, seed: int, stream: str = "") -> None:
        self.seed = seed
        self.stream = stream

    def _word(self, index: int, field: str) -> int:
        key = f"{self.seed}|{self.stream}|{index}|{field}".encode()
        digest = hashlib.blake2b(key, digest_size=16).digest()
        hi, lo = struct.unpack(">QQ", digest)
        return (hi << 64) | lo

    def integer(self, index: int, field: str, lo: int, hi: int) -> int:
        """Uniform integer in ``[lo, hi]`` (bias below 2**-100 for desk ranges)."""
        if hi < lo:
            raise SpecError(f"empty range [{lo}, {hi}] for {field}")
        return lo + self._word(index, field) % (hi - lo + 1)

    def fraction(self, index: int, field: str, lo: Fraction, hi: Fraction) -> Fraction:
        """Uniform on a 2**20 grid over ``[lo, hi]``."""
        if hi < lo:
            raise SpecError(f"empty range [{lo}, {hi}] for {field}")
        step = self._word(index, field) % ((1 << 20) + 1)
        return lo + (hi - lo) * Fraction(step, 1 << 20)


@dataclass(frozen=True)
class GenSpec:
    kind: str = "random"
    n: int = 10
    m: int = 1
    seed: int = 0
    horizon: int = 100
    size_min: int = 1
    size_max: int = 10
    lax_min: Fraction = Fraction(0)
    lax_max: Fraction = Fraction(2)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise SpecError(f"unknown kind {self.kind!r}")
        object.__setattr__(self, "lax_min", Fraction(self.lax_min))
        object.__setattr__(self, "lax_max", Fraction(self.lax_max))
        if self.n < 0 or self.m < 1 or self.horizon < 0:
            raise SpecError("need n >= 0, m >= 1, horizon >= 0")
        if self.size_min < 1 or self.size_max < self.size_min:
            raise SpecError(f"empty size range [{self.size_min}, {self.size_max}]")
        if self.lax_min < 0 or self.lax_max < self.lax_min:
            raise SpecError(f"empty laxity ratio range [{self.lax_min}, {self.lax_max}]")

    def label(self) -> str:
        return f"{self.kind}-n{self.n}-m{self.m}-s{self.seed}"

    def as_dict(self) -> dict:
        d = asdict(self)
        d["lax_min"] = str(self.lax_min)
        d["lax_max"] = str(self.lax_max)
        return d


def _laxity(rng: CounterRng, i: int, size: int, lo: Fraction, hi: Fraction) -> int:
    # floor keeps laxity <= size whenever the ratio is <= 1
    return int(rng.fraction(i, "lax", lo, hi) * size)


def _build(spec: GenSpec, records: list[dict]) -> Instance:
    return ingest(records, spec.m, spec.label(), spec.seed)


def gen_random(spec: GenSpec) -> Instance:
    rng = CounterRng(spec.seed, spec.kind)
    records = []
    for i in range(spec.n):
        release = rng.integer(i, "release", 0, spec.horizon)
        size = rng.integer(i, "size", spec.size_min, spec.size_max)
        lax = _laxity(rng, i, size, spec.lax_min, spec.lax_max)
        records.append({"id": i, "release": release, "size": size, "deadline": release + size + lax})
    return _build(spec, records)


def gen_low_laxity(spec: GenSpec) -> Instance:
    """Random jobs whose laxity never exceeds their size."""
    if spec.lax_max > 1:
        raise SpecError(f"low-laxity ratio must be <= 1, got {spec.lax_max}")
    return gen_random(GenSpec(**{**spec.__dict__, "kind": "low_laxity"}))


def gen_mixed(spec: GenSpec) -> Instance:
    """Each job is low-laxity (ratio in [0, 1]) or high-laxity (ratio in (1, lax_max]) with equal odds."""
    hi_max = max(spec.lax_max, Fraction(2))
    rng = CounterRng(spec.seed, spec.kind)
    records = []
    for i in range(spec.n):
        release = rng.integer(i, "release", 0, spec.horizon)
        size = rng.integer(i, "size", spec.size_min, spec.size_max)
        if rng.integer(i, "class", 0, 1):
            lax = _laxity(rng, i, size, Fraction(0), Fraction(1))
        else:
            lax = max(size + 1, _laxity(rng, i, size, Fraction(1), hi_max))
        records.append({"id": i, "release": release, "size": size, "deadline": release + size + lax})
    return _build(spec, records)


def gen_disagreeable(spec: GenSpec) -> Instance:
    """Nested windows: later releases have earlier deadlines; every job is low-laxity."""
    n = spec.n
    if n < 1:
        raise SpecError("disagreeable instances need n >= 1")
    if spec.horizon < 2 * n:
        raise SpecError(f"horizon {spec.horizon} too small to nest {n} windows (need >= {2 * n})")
    rng = CounterRng(spec.seed, spec.kind)
    gap = spec.horizon // (2 * n)
    releases, deadlines = [0], [spec.horizon]
    for i in range(1, n):
        releases.append(releases[-1] + rng.integer(i, "rgap", 1, gap))
        deadlines.append(deadlines[-1] - rng.integer(i, "dgap", 1, gap))
    records = []
    for i in range(n):
        window = deadlines[i] - releases[i]
        size = rng.integer(i, "size", (window + 1) // 2, window)
        records.append({"id": i, "release": releases[i], "size": size, "deadline": deadlines[i]})
    return _build(spec, records)


GENERATORS = {
    "random": gen_random,
    "disagreeable": gen_disagreeable,
    "low_laxity": gen_low_laxity,
    "mixed": gen_mixed,
}


def generate(spec: GenSpec) -> Instance:
    return GENERATORS[spec.kind](spec)
