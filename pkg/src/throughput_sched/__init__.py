"""Online throughput scheduling with deadlines on identical machines.

Simulation kernel, online policies (SRPT, stack-based MLax and its lax
variant, an admission-controlled EDF stand-in, and their composite), an
exact offline optimum, a trace validator, generators and file formats.
"""

from .core import Instance, Job, JobState, ValidationError, classify_laxity, ingest, is_feasible, laxity
from .engine import PolicyViolation, SimConfig, Trace, simulate
from .experiment import POLICIES, RunResult, run_policy
from .final import ConfigError, FinalPolicy, run_final
from .formats import ParseError, parse_instance, parse_trace, serialize_instance, serialize_trace
from .gen import GenSpec, generate
from .highlax import AdmissionEdfPolicy
from .mlax import MlaxConfig, MlaxPolicy, Variant
from .oracle import feasible_subset, feasible_subset_slots, opt_throughput
from .srpt import SrptPolicy
from .validate import ValidationReport, full_report, validate_trace

__version__ = "0.1.0"

__all__ = [
    "AdmissionEdfPolicy", "ConfigError", "FinalPolicy", "GenSpec", "Instance", "Job", "JobState",
    "MlaxConfig", "MlaxPolicy", "POLICIES", "ParseError", "PolicyViolation", "RunResult", "SimConfig",
    "SrptPolicy", "Trace", "ValidationError", "ValidationReport", "Variant", "classify_laxity",
    "feasible_subset", "feasible_subset_slots", "full_report", "generate", "ingest", "is_feasible",
    "laxity", "opt_throughput", "parse_instance", "parse_trace", "run_final", "run_policy",
    "serialize_instance", "serialize_trace", "simulate", "validate_trace",
]
