"""Semantic exception hierarchy for the toolkit.

Public functions raise these instead of bare ValueError/RuntimeError so that
callers (the CLI, the benchmark harness) can map failures to exit codes and
report rows without string matching.
"""

from __future__ import annotations


class CvarScaleError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(CvarScaleError):
    """Array shapes are inconsistent with the instance dimensions."""


class IndexOutOfRange(CvarScaleError):
    """A scenario index lies outside 1..N."""


class ProbabilityError(CvarScaleError):
    """Scenario probabilities are nonpositive or do not sum to one."""


class RiskLevelError(CvarScaleError):
    """Risk level epsilon lies outside the open interval (0, 1)."""


class ScalingOutOfRange(CvarScaleError):
    """A scaling factor is below one (or above the configured cap)."""


class NotCovering(CvarScaleError):
    """Row normalization requires every constraint offset to be positive."""


class ToleranceError(CvarScaleError):
    """A tolerance bundle violates its sign/positivity contract."""


class ConditionViolated(CvarScaleError):
    """The strictly-satisfied probability mass does not exceed 1 - epsilon."""

    def __init__(self, tau: float, epsilon: float):
        self.tau = tau
        self.epsilon = epsilon
        super().__init__(
            f"construction requires tau < epsilon, got tau={tau!r} >= epsilon={epsilon!r}"
        )


class SolverFailure(CvarScaleError):
    """The embedded solver ended in a state the caller cannot act on."""


class InfeasibleProblem(CvarScaleError):
    """A subproblem whose feasibility the algorithm depends on is infeasible."""


class NoFeasibleIncumbent(CvarScaleError):
    """Bisection never visited a budget with a chance-feasible solution."""


class TooLarge(CvarScaleError):
    """Instance exceeds the size cap of an enumeration oracle."""


class ConfigError(CvarScaleError):
    """Generator or CLI configuration is invalid."""


class DegenerateBaseline(CvarScaleError):
    """Improvement is undefined because the baseline value is ~zero."""
