"""Run a named policy on an instance and summarise the outcome."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from .core import Instance
from .engine import SimConfig, Trace, simulate
from .final import FinalPolicy, GroupStats
from .formats import instance_hash
from .mlax import MlaxConfig, MlaxPolicy
from .oracle import DEFAULT_SEARCH_CAP, capacity_upper_bound, opt_throughput
from .srpt import SrptPolicy

POLICIES = ("srpt", "mlax", "lax_variant", "final")


@dataclass
class RunResult:
    policy: str
    trace: Trace
    stats: dict[str, GroupStats] = field(default_factory=dict)
    counters: dict[str, int] = field(default_factory=dict)

    @property
    def completions(self) -> int:
        return len(self.trace.completions)


def make_config(policy: str, alpha: int = 24, viability_fraction=None, replace_fraction=None) -> MlaxConfig:
    if policy == "lax_variant":
        return MlaxConfig.lax_variant(alpha)
    kwargs: dict[str, Any] = {"alpha": alpha}
    if viability_fraction is not None:
        kwargs["viability_fraction"] = viability_fraction
    if replace_fraction is not None:
        kwargs["replace_fraction"] = replace_fraction
    return MlaxConfig(**kwargs)


def run_policy(
    instance: Instance,
    policy: str,
    alpha: int = 24,
    highlax: str = "admission_edf",
    mlax_cfg: MlaxConfig | None = None,
    sim_config: SimConfig | None = None,
) -> RunResult:
    m = instance.machines
    if policy == "srpt":
        p = SrptPolicy(m)
        trace = simulate(instance, p, sim_config)
        result = RunResult(policy, trace)
    elif policy in ("mlax", "lax_variant"):
        cfg = mlax_cfg or make_config(policy, alpha)
        p = MlaxPolicy(m, cfg)
        trace = simulate(instance, p, sim_config)
        result = RunResult(policy, trace, counters=dict(p.counters))
    elif policy == "final" and m < 3:
        result = _degenerate_final(m, mlax_cfg or make_config("mlax", alpha), highlax)
        trace = result.trace
    elif policy == "final":
        p = FinalPolicy(m, mlax_cfg or make_config("mlax", alpha), highlax)
        trace = simulate(instance, p, sim_config)
        stats = p.collect_stats()
        result = RunResult(policy, trace, stats, counters=dict(p.mlax.counters))
    else:
        raise ValueError(f"unknown policy {policy!r}; choose from {POLICIES}")
    trace.instance_hash = instance_hash(instance)
    return result


def _degenerate_final(m: int, cfg: MlaxConfig, highlax: str) -> RunResult:
    # floor(m/3) = 0: every group is empty, so nothing can run
    config = {"policy": "final", "highlax": highlax,
              "groups": {name: [0, 0] for name in ("highlax", "srpt", "mlax")}, **cfg.as_dict()}
    stats = {name: GroupStats(name) for name in ("highlax", "srpt", "mlax")}
    counters = {"pushes": 0, "replaces": 0, "completion_pops": 0, "infeasible_pops": 0}
    return RunResult("final", Trace(machines=m, config=config), stats, counters)


def opt_summary(instance: Instance, budget: int = 200_000, cap: int = DEFAULT_SEARCH_CAP) -> tuple[int, str]:
    """Optimum (``"exact"``), a lower bound from a truncated search (``"lower"``), or a capacity bound (``"bound"``)."""
    jobs = list(instance.jobs)
    if len(jobs) > cap:
        bound = capacity_upper_bound(jobs, instance.machines)
        # the bound reaches n only when the flow carries all work, i.e. everything fits
        return bound, "exact" if bound == len(jobs) else "bound"
    res = opt_throughput(jobs, instance.machines, budget)
    return res.best_count, "exact" if res.proven_optimal else "lower"


def result_row(
    result: RunResult, instance: Instance, alpha: int | None, seed: int | None,
    opt: int | None = None, opt_kind: str = "",
) -> dict[str, Any]:
    c = result.counters
    ratio = None
    if opt is not None:
        ratio = result.completions / opt if opt else 1.0
    row: dict[str, Any] = {
        "seed": seed, "n": len(instance), "m": instance.machines,
        "alpha": alpha,
        "policy": result.policy, "completions": result.completions,
        "opt": opt, "opt_kind": opt_kind or None, "ratio": ratio,
        "physical_completions": result.completions,
        "pushes": c.get("pushes"), "replaces": c.get("replaces"),
        "completion_pops": c.get("completion_pops"), "infeasible_pops": c.get("infeasible_pops"),
        "pops": (c["completion_pops"] + c["infeasible_pops"]) if c else None,
    }
    return row


def component_rows(result: RunResult, instance: Instance, alpha: int | None, seed: int | None) -> list[dict[str, Any]]:
    rows = []
    for name, st in result.stats.items():
        row = {
            "seed": seed, "n": len(instance), "m": instance.machines, "alpha": alpha,
            "policy": f"final:{name}", "completions": st.physical_completions,
            **st.as_row(),
            "pops": st.completion_pops + st.infeasible_pops,
        }
        row["policy"] = f"final:{name}"
        rows.append(row)
    return rows
