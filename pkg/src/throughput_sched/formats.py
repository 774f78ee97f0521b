"""Text formats: instances (JSON), traces (JSON lines), results (CSV).

Instance files carry original ticks.  Traces carry internal ticks and record
the scale factor in their header.  Field names are listed in FORMAT.md.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from typing import Any, Iterable, Sequence

from .core import TICK_SCALE, Instance, ValidationError, ingest, to_original
from .engine import PolicyEvent, RunInterval, Trace

INSTANCE_VERSION = 1
TRACE_VERSION = 1

_INSTANCE_KEYS = {"version", "machines", "jobs", "label", "seed"}
_JOB_KEYS = {"id", "release", "size", "deadline"}
_RECORD_KEYS = {"t", "kind", "job", "machine", "extra"}

RESULT_COLUMNS = [
    "seed", "n", "m", "alpha", "policy", "completions", "opt", "opt_kind", "ratio",
    "virtual_completions", "physical_completions",
    "pushes", "replaces", "completion_pops", "infeasible_pops", "pops",
]


class ParseError(ValueError):
    """Malformed input; ``where`` locates the offending line or field."""

    def __init__(self, message: str, where: str = "") -> None:
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)


# -- instances ---------------------------------------------------------------

def instance_to_obj(instance: Instance) -> dict[str, Any]:
    obj: dict[str, Any] = {
        "version": INSTANCE_VERSION,
        "machines": instance.machines,
        "jobs": [to_original(j) for j in instance.jobs],
    }
    if instance.label:
        obj["label"] = instance.label
    if instance.seed is not None:
        obj["seed"] = instance.seed
    return obj


def serialize_instance(instance: Instance) -> str:
    return json.dumps(instance_to_obj(instance), indent=1, sort_keys=True) + "\n"


def instance_hash(instance: Instance) -> str:
    canonical = json.dumps(instance_to_obj(instance), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def _require_int(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParseError(f"expected integer, got {value!r}", where)
    return value


def parse_instance(text: str) -> Instance:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"line {exc.lineno} column {exc.colno}") from None
    if not isinstance(obj, dict):
        raise ParseError("top level must be an object")
    unknown = set(obj) - _INSTANCE_KEYS
    if unknown:
        raise ParseError(f"unknown fields {sorted(unknown)}")
    for key in ("version", "machines", "jobs"):
        if key not in obj:
            raise ParseError(f"missing field {key!r}")
    if obj["version"] != INSTANCE_VERSION:
        raise ParseError(f"unsupported version {obj['version']!r}", "version")
    machines = _require_int(obj["machines"], "machines")
    if not isinstance(obj["jobs"], list):
        raise ParseError("must be a list", "jobs")
    records = []
    for k, rec in enumerate(obj["jobs"]):
        where = f"jobs[{k}]"
        if not isinstance(rec, dict):
            raise ParseError("must be an object", where)
        if set(rec) != _JOB_KEYS:
            raise ParseError(f"fields must be exactly {sorted(_JOB_KEYS)}, got {sorted(rec)}", where)
        records.append({key: _require_int(rec[key], f"{where}.{key}") for key in _JOB_KEYS})
    label = obj.get("label", "")
    seed = obj.get("seed")
    if seed is not None:
        seed = _require_int(seed, "seed")
    instance = ingest(records, machines, label, seed)
    return instance


# -- traces --------------------------------------------------------------------

_RANK_COMPLETE, _RANK_POLICY, _RANK_RUN = 0, 1, 2


def _records(trace: Trace) -> list[tuple[tuple, dict[str, Any]]]:
    rows: list[tuple[tuple, dict[str, Any]]] = []
    for job, t in trace.completions:
        rows.append(((t, _RANK_COMPLETE, job, 0), {"t": t, "kind": "complete", "job": job, "machine": None, "extra": {}}))
    for seq, ev in enumerate(trace.policy_events):
        rows.append(((ev.t, _RANK_POLICY, 0, seq),
                     {"t": ev.t, "kind": ev.kind, "job": ev.job, "machine": ev.machine, "extra": ev.extra}))
    for iv in trace.run_intervals:
        rows.append(((iv.start, _RANK_RUN, iv.machine, iv.job),
                     {"t": iv.start, "kind": "run", "job": iv.job, "machine": iv.machine, "extra": {"end": iv.end}}))
    rows.sort(key=lambda r: r[0])
    return rows


def serialize_trace(trace: Trace) -> str:
    header = {
        "type": "header",
        "version": TRACE_VERSION,
        "tick_scale": TICK_SCALE,
        "machines": trace.machines,
        "instance_hash": trace.instance_hash,
        "config": trace.config,
    }
    out = io.StringIO()
    out.write(json.dumps(header, sort_keys=True, separators=(",", ":")) + "\n")
    for _, rec in _records(trace):
        out.write(json.dumps(rec, sort_keys=True, separators=(",", ":")) + "\n")
    return out.getvalue()


def parse_trace(text: str) -> Trace:
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty trace", "line 1")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, "line 1") from None
    if not isinstance(header, dict) or header.get("type") != "header":
        raise ParseError("first line must be the header", "line 1")
    if header.get("version") != TRACE_VERSION:
        raise ParseError(f"unsupported version {header.get('version')!r}", "line 1")
    if header.get("tick_scale") != TICK_SCALE:
        raise ParseError(f"unsupported tick_scale {header.get('tick_scale')!r}", "line 1")
    trace = Trace(
        machines=_require_int(header.get("machines"), "line 1"),
        config=header.get("config", {}),
        instance_hash=header.get("instance_hash", ""),
    )
    for no, line in enumerate(lines[1:], start=2):
        where = f"line {no}"
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, where) from None
        if not isinstance(rec, dict) or set(rec) != _RECORD_KEYS:
            raise ParseError(f"record fields must be exactly {sorted(_RECORD_KEYS)}", where)
        kind = rec["kind"]
        t = _require_int(rec["t"], where)
        if kind == "complete":
            trace.completions.append((_require_int(rec["job"], where), t))
        elif kind == "run":
            end = rec["extra"].get("end") if isinstance(rec["extra"], dict) else None
            trace.run_intervals.append(RunInterval(
                _require_int(rec["machine"], where), _require_int(rec["job"], where), t, _require_int(end, where)))
        elif isinstance(kind, str):
            trace.policy_events.append(PolicyEvent(t, kind, rec["job"], rec["machine"], rec["extra"]))
        else:
            raise ParseError(f"bad kind {kind!r}", where)
    return trace


# -- results -----------------------------------------------------------------

def serialize_results(rows: Iterable[dict[str, Any]], footer: Sequence[str] = ()) -> str:
    out = io.StringIO()
    writer = csv.DictWriter(out, fieldnames=RESULT_COLUMNS, extrasaction="raise", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _cell(row.get(k)) for k in RESULT_COLUMNS})
    for line in footer:
        out.write(f"# {line}\n")
    return out.getvalue()


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def parse_results(text: str) -> list[dict[str, str]]:
    body = [line for line in text.splitlines() if not line.startswith("#")]
    reader = csv.DictReader(body)
    if reader.fieldnames != RESULT_COLUMNS:
        raise ParseError(f"unexpected columns {reader.fieldnames}", "line 1")
    return [dict(row) for row in reader]
