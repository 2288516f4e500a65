"""cvarscale: scenario-scaled CVaR approximations for finite-scenario
chance-constrained programs.

The package bundles exact desk-scale oracles, the plain and scenario-scaled
CVaR approximations, a closed-form scaling construction, iterative scaling
heuristics (plain, sequential-convex, hybrid), objective-budget bisection
baselines, instance generators, and a benchmark harness.
"""

from .model import (
    CcpInstance,
    Domain,
    RegularityStatus,
    ScalingVector,
    Scenario,
    Tolerances,
    certificate_point,
    chance_feasible,
    epsilon_regularity_check,
    evaluate_g,
    g_max,
    g_max_all,
    instance_from_dict,
    instance_to_dict,
    load_instance,
    normalize_covering_rows,
    save_instance,
    scale_scenarios,
    validate,
    violation_probability,
    with_extra_domain_rows,
)

__version__ = "0.1.0"

__all__ = [
    "CcpInstance",
    "Domain",
    "RegularityStatus",
    "ScalingVector",
    "Scenario",
    "Tolerances",
    "certificate_point",
    "chance_feasible",
    "epsilon_regularity_check",
    "evaluate_g",
    "g_max",
    "g_max_all",
    "instance_from_dict",
    "instance_to_dict",
    "load_instance",
    "normalize_covering_rows",
    "save_instance",
    "scale_scenarios",
    "validate",
    "violation_probability",
    "with_extra_domain_rows",
    "__version__",
]
