"""Command-line entry point: gen, run, sweep, opt, validate, gantt.

Exit codes: 0 ok, 1 validation or accounting violation, 2 usage or I/O error.
Diagnostic verbosity comes from the SCHED_LOG environment variable
(a logging level name such as DEBUG or INFO; default WARNING).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from statistics import mean
from typing import Any, Sequence

from .core import Instance, ValidationError
from .experiment import POLICIES, component_rows, make_config, opt_summary, result_row, run_policy
from .final import GUARANTEE_MIN_MACHINES, ConfigError
from .formats import ParseError, instance_hash, parse_instance, parse_trace, serialize_instance, serialize_results, serialize_trace
from .gantt import render_svg
from .gen import KINDS, GenSpec, SpecError, generate
from .highlax import HIGHLAX_POLICIES
from .oracle import DEFAULT_SEARCH_CAP
from .validate import full_report

log = logging.getLogger("throughput_sched")

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _setup_logging() -> None:
    level = os.environ.get("SCHED_LOG", "WARNING").upper()
    numeric = logging.getLevelName(level)
    if not isinstance(numeric, int):
        numeric = logging.WARNING
    logging.basicConfig(level=numeric, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror}") from None


def _load_instance(path: str, machines: int | None) -> Instance:
    instance = parse_instance(_read(path))
    return instance if machines is None else instance.with_machines(machines)


def _warn_regime(policy: str, m: int) -> None:
    if policy == "final" and m < GUARANTEE_MIN_MACHINES:
        msg = f"m={m} is below the m ≥ {GUARANTEE_MIN_MACHINES} regime of the composite's guarantee"
        if m < 3:
            msg += "; with fewer than 3 machines every group is empty"
        print(f"warning: {msg}", file=sys.stderr)


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a fraction: {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _policy_list(text: str) -> list[str]:
    names = [x.strip() for x in text.split(",") if x.strip()]
    bad = [n for n in names if n not in POLICIES]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown policies {bad}; choose from {list(POLICIES)}")
    return names


# -- gen ---------------------------------------------------------------------

def _spec_from(args: argparse.Namespace, n: int, m: int, seed: int) -> GenSpec:
    return GenSpec(kind=args.kind, n=n, m=m, seed=seed, horizon=args.horizon,
                   size_min=args.size_min, size_max=args.size_max,
                   lax_min=args.lax_min, lax_max=args.lax_max)


def cmd_gen(args: argparse.Namespace) -> int:
    instance = generate(_spec_from(args, args.n, args.m, args.seed))
    _write(args.output, serialize_instance(instance))
    return EXIT_OK


# -- run ---------------------------------------------------------------------

def _mlax_cfg(args: argparse.Namespace, policy: str):
    return make_config(policy, args.alpha, args.viability_fraction, args.replace_fraction)


def cmd_run(args: argparse.Namespace) -> int:
    instance = _load_instance(args.instance, args.machines)
    _warn_regime(args.policy, instance.machines)
    cfg = _mlax_cfg(args, "mlax" if args.policy == "final" else args.policy)
    result = run_policy(instance, args.policy, args.alpha, args.highlax, cfg)
    if args.trace:
        _write(args.trace, serialize_trace(result.trace))
    report = full_report(instance, result.trace)
    opt, kind = (None, "")
    if args.with_opt:
        opt, kind = opt_summary(instance, args.opt_budget, args.opt_cap)
    rows = [result_row(result, instance, args.alpha, instance.seed, opt, kind)]
    if args.components:
        rows += component_rows(result, instance, args.alpha, instance.seed)
    footer = [] if report.ok else [f"violations={len(report.violations)}"]
    _write(args.summary, serialize_results(rows, footer))
    if not report.ok:
        for v in report.violations[:20]:
            print(f"violation: {v.rule} t={v.time} {v.detail}", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


# -- sweep -------------------------------------------------------------------

@dataclass(frozen=True)
class Cell:
    spec: GenSpec
    alpha: int
    policies: tuple[str, ...]
    highlax: str
    viability_fraction: Fraction | None
    replace_fraction: Fraction | None
    with_opt: bool
    opt_budget: int
    opt_cap: int
    components: bool
    trace_dir: str | None


def run_cell(cell: Cell) -> tuple[list[dict[str, Any]], list[str], bool]:
    """Rows, footer notes and a violation flag for one grid cell."""
    rows: list[dict[str, Any]] = []
    notes: list[str] = []
    violated = False
    where = f"kind={cell.spec.kind} n={cell.spec.n} m={cell.spec.m} alpha={cell.alpha} seed={cell.spec.seed}"
    try:
        instance = generate(cell.spec)
    except Exception as exc:  # recorded, the sweep continues
        return rows, [f"error {where}: {exc}"], False
    opt, kind = (None, "")
    if cell.with_opt:
        try:
            opt, kind = opt_summary(instance, cell.opt_budget, cell.opt_cap)
        except Exception as exc:
            notes.append(f"error {where} opt: {exc}")
    for policy in cell.policies:
        try:
            cfg = make_config("mlax" if policy == "final" else policy, cell.alpha,
                              cell.viability_fraction, cell.replace_fraction)
            result = run_policy(instance, policy, cell.alpha, cell.highlax, cfg)
            report = full_report(instance, result.trace)
            if cell.trace_dir:
                name = f"{cell.spec.label()}-a{cell.alpha}-{policy}.jsonl"
                Path(cell.trace_dir, name).write_text(serialize_trace(result.trace))
        except Exception as exc:
            notes.append(f"error {where} policy={policy}: {type(exc).__name__}: {exc}")
            continue
        if not report.ok:
            violated = True
            first = report.violations[0]
            notes.append(f"violation {where} policy={policy}: {len(report.violations)} "
                         f"(first {first.rule} t={first.time} {first.detail})")
        rows.append(result_row(result, instance, cell.alpha, cell.spec.seed, opt, kind))
        if cell.components:
            rows += component_rows(result, instance, cell.alpha, cell.spec.seed)
    return rows, notes, violated


def sweep_cells(args: argparse.Namespace) -> list[Cell]:
    cells = []
    for n in args.n:
        for m in args.m:
            for alpha in args.alpha:
                for k in range(args.seeds):
                    cells.append(Cell(
                        _spec_from(args, n, m, args.seed + k), alpha, tuple(args.policies), args.highlax,
                        args.viability_fraction, args.replace_fraction, args.with_opt,
                        args.opt_budget, args.opt_cap, args.components, args.trace_dir,
                    ))
    return cells


def _summary_footer(rows: list[dict[str, Any]], n_cells: int, notes: list[str]) -> list[str]:
    footer = [f"cells={n_cells} rows={len(rows)} notes={len(notes)}"]
    by_policy: dict[str, list[float]] = {}
    for row in rows:
        if row.get("ratio") is not None and row.get("opt"):
            by_policy.setdefault(row["policy"], []).append(row["ratio"])
    for policy in sorted(by_policy):
        ratios = by_policy[policy]
        footer.append(f"policy={policy} min_ratio={min(ratios):.6f} mean_ratio={mean(ratios):.6f} "
                      f"rows_with_opt={len(ratios)}")
    return footer + notes


def run_sweep(cells: Sequence[Cell], jobs: int = 1) -> tuple[list[dict[str, Any]], list[str], bool]:
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(run_cell, cells, chunksize=max(1, len(cells) // (4 * jobs))))
    else:
        outcomes = [run_cell(c) for c in cells]
    rows: list[dict[str, Any]] = []
    notes: list[str] = []
    violated = False
    for r, nts, bad in outcomes:  # grid order, whatever the completion order
        rows += r
        notes += nts
        violated |= bad
    return rows, notes, violated


def cmd_sweep(args: argparse.Namespace) -> int:
    if args.trace_dir:
        Path(args.trace_dir).mkdir(parents=True, exist_ok=True)
    if "final" in args.policies:
        for m in args.m:
            _warn_regime("final", m)
    cells = sweep_cells(args)
    rows, notes, violated = run_sweep(cells, args.jobs)
    _write(args.output, serialize_results(rows, _summary_footer(rows, len(cells), notes)))
    return EXIT_VIOLATION if violated else EXIT_OK


# -- opt / validate / gantt -----------------------------------------------------

def cmd_opt(args: argparse.Namespace) -> int:
    from .oracle import capacity_upper_bound, opt_throughput

    instance = _load_instance(args.instance, args.machines)
    jobs = list(instance.jobs)
    if len(jobs) > args.cap:
        bound = capacity_upper_bound(jobs, instance.machines)
        whole = bound == len(jobs)
        out = {"best_count": bound, "kind": "exact" if whole else "bound",
               "witness_ids": [j.id for j in jobs] if whole else [], "proven_optimal": whole, "explored": 0}
    else:
        res = opt_throughput(jobs, instance.machines, args.budget)
        out = {**res.as_dict(), "kind": "exact" if res.proven_optimal else "lower"}
    _write(args.output, json.dumps(out, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    instance = _load_instance(args.instance, None)
    trace = parse_trace(_read(args.trace))
    report = full_report(instance, trace)
    if trace.instance_hash and trace.instance_hash != instance_hash(instance):
        report.add("instance-mismatch", None, f"trace was produced for instance {trace.instance_hash}")
    _write(args.output, json.dumps(report.as_dict(), sort_keys=True, indent=1) + "\n")
    return EXIT_OK if report.ok else EXIT_VIOLATION


def cmd_gantt(args: argparse.Namespace) -> int:
    trace = parse_trace(_read(args.trace))
    _write(args.output, render_svg(trace, args.px_per_tick))
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def _add_gen_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kind", choices=KINDS, default="random")
    p.add_argument("--horizon", type=int, default=100, help="latest release time")
    p.add_argument("--size-min", type=int, default=1)
    p.add_argument("--size-max", type=int, default=10)
    p.add_argument("--lax-min", type=_fraction, default=Fraction(0), help="laxity/size ratio, lower end")
    p.add_argument("--lax-max", type=_fraction, default=Fraction(2), help="laxity/size ratio, upper end")


def _add_policy_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--highlax", choices=sorted(HIGHLAX_POLICIES), default="admission_edf",
                   help="high-laxity policy inside the composite")
    p.add_argument("--viability-fraction", type=_fraction, default=None)
    p.add_argument("--replace-fraction", type=_fraction, default=None)
    p.add_argument("--with-opt", action="store_true", help="compute the offline optimum (capped)")
    p.add_argument("--opt-budget", type=int, default=200_000, help="feasibility tests per OPT search")
    p.add_argument("--opt-cap", type=int, default=DEFAULT_SEARCH_CAP,
                   help="above this many jobs report a flow bound instead of searching")
    p.add_argument("--components", action="store_true", help="add per-group rows for the composite")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="throughput-sched", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a seeded instance")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--m", type=int, default=1)
    _add_gen_args(p)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("run", help="simulate one policy, validate, print a summary row")
    p.add_argument("instance")
    p.add_argument("--policy", choices=POLICIES, default="final")
    p.add_argument("--alpha", type=int, default=24)
    p.add_argument("--machines", type=int, default=None, help="override the instance's machine count")
    _add_policy_args(p)
    p.add_argument("--trace", help="write the trace (JSON lines) here")
    p.add_argument("--summary", help="write the summary CSV here instead of stdout")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run a grid of generated instances and emit a results CSV")
    p.add_argument("--seed", type=int, required=True, help="base seed; cell k uses seed + k")
    p.add_argument("--seeds", type=int, default=1, help="seeds per grid point")
    p.add_argument("--n", type=_int_list, default=[10])
    p.add_argument("--m", type=_int_list, default=[48])
    p.add_argument("--alpha", type=_int_list, default=[24])
    p.add_argument("--policies", type=_policy_list, default=list(POLICIES))
    _add_gen_args(p)
    _add_policy_args(p)
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.add_argument("--trace-dir", help="also write every trace into this directory")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_sweep, kind="mixed")

    p = sub.add_parser("opt", help="offline optimum of an instance")
    p.add_argument("instance")
    p.add_argument("--machines", type=int, default=None)
    p.add_argument("--budget", type=int, default=200_000)
    p.add_argument("--cap", type=int, default=DEFAULT_SEARCH_CAP)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_opt)

    p = sub.add_parser("validate", help="check a trace against its instance")
    p.add_argument("instance")
    p.add_argument("trace")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("gantt", help="render a trace as an SVG Gantt chart")
    p.add_argument("trace")
    p.add_argument("--px-per-tick", type=float, default=4.0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gantt)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be >= 1")
    try:
        return args.func(args)
    except (UsageError, ParseError, ValidationError, SpecError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BrokenPipeError:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
