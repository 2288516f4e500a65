"""Objective-budget bisection baselines.

Bisection maintains a budget interval [t_L, t_U].  At each midpoint t the
"lower level" minimizes the CVaR-type hinge loss

    eps * beta + sum_i p_i [ worst_row_i(x) - beta ]_+      s.t.  c.x <= t

over the domain.  If the minimizer is chance-feasible the budget is provable,
so t_U drops to t; otherwise t_L rises to t.  The scaled variant gets a second
chance on failed budgets: it reruns the scaling heuristic on the
budget-restricted instance, which can certify budgets the plain check misses.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .conic import LinearProgramSpec, SolveStatus, solve_lp
from .cvar import solve_cvar
from .errors import InfeasibleProblem, NoFeasibleIncumbent, SolverFailure
from .model import CcpInstance, Tolerances, chance_feasible, with_extra_domain_rows
from .scaling import scaling_heuristic

__all__ = ["BisectionStep", "BisectionReport", "lower_level", "alsox_sharp", "alsox_sharp_scaled"]

_BETA_FLOOR = 1e9


@dataclass(frozen=True)
class BisectionStep:
    t: float
    lower_value: float
    feasible: bool
    rescued: bool = False


@dataclass
class BisectionReport:
    steps: list[BisectionStep] = field(default_factory=list)
    bounds_history: list[tuple[float, float]] = field(default_factory=list)
    x: np.ndarray | None = None
    objective: float = np.nan  # c.x of the returned point
    t_lower: float = np.nan
    t_upper: float = np.nan

    def to_dict(self) -> dict:
        return {
            "steps": [
                {"t": s.t, "lower_value": s.lower_value, "feasible": s.feasible,
                 "rescued": s.rescued}
                for s in self.steps
            ],
            "bounds_history": [[lo, hi] for lo, hi in self.bounds_history],
            "x": None if self.x is None else [float(v) for v in self.x],
            "objective": None if np.isnan(self.objective) else float(self.objective),
            "t_lower": float(self.t_lower),
            "t_upper": float(self.t_upper),
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))


def lower_level(
    instance: CcpInstance, t: float, tol: Tolerances | None = None
) -> tuple[np.ndarray, float, float]:
    """Minimize the hinge loss under the budget row c.x <= t.

    Returns (x, beta, value).  Raises InfeasibleProblem when the budget row
    cuts off the whole domain.
    """
    tol = tol or Tolerances()
    n, N, J = instance.n, instance.N, instance.J
    nv = n + 1 + N  # x, beta, s

    scen = np.zeros((N * J, nv))
    scen[:, :n] = instance.w_stack
    scen[:, n] = -1.0
    scen[np.arange(N * J), n + 1 + np.repeat(np.arange(N), J)] = -1.0
    rows = [scen]
    rhs = [-instance.d_stack]

    if np.isfinite(t):
        budget = np.zeros((1, nv))
        budget[0, :n] = instance.c
        rows.append(budget)
        rhs.append(np.array([t]))
    dom = instance.domain
    if dom.P is not None:
        ext = np.zeros((dom.P.shape[0], nv))
        ext[:, :n] = dom.P
        rows.append(ext)
        rhs.append(dom.q)
    floor = np.zeros((1, nv))
    floor[0, n] = -1.0
    rows.append(floor)
    rhs.append(np.array([_BETA_FLOOR]))

    c = np.zeros(nv)
    c[n] = instance.epsilon
    c[n + 1 :] = instance.probs
    lb = np.concatenate([dom.lb, [-np.inf], np.zeros(N)])
    ub = np.concatenate([dom.ub, [0.0], np.full(N, np.inf)])
    res = solve_lp(
        LinearProgramSpec(c=c, A=np.vstack(rows), b=np.concatenate(rhs), lb=lb, ub=ub), tol
    )
    if res.status == SolveStatus.INFEASIBLE:
        raise InfeasibleProblem(f"budget {t!r} cuts off the whole domain")
    if res.status != SolveStatus.OPTIMAL:
        raise SolverFailure(f"lower-level LP ended with status {res.status.value}")
    return res.z[:n], float(res.z[n]), float(res.objective)


def _default_t_lower(instance: CcpInstance, tol: Tolerances) -> float:
    """Cost minimum over the domain alone; a valid lower bound on the optimum."""
    dom = instance.domain
    spec = LinearProgramSpec(
        c=instance.c,
        A=dom.P if dom.P is not None else np.zeros((0, instance.n)),
        b=dom.q if dom.q is not None else np.zeros(0),
        lb=dom.lb,
        ub=dom.ub,
    )
    res = solve_lp(spec, tol)
    if res.status != SolveStatus.OPTIMAL:
        raise SolverFailure(f"domain cost bound LP ended with {res.status.value}")
    return res.objective


def _bisect(
    instance: CcpInstance,
    t_lower: float | None,
    t_upper: float | None,
    delta_A: float | None,
    tol: Tolerances,
    rescue,
) -> BisectionReport:
    tol = tol or Tolerances()
    if t_lower is None:
        t_lower = _default_t_lower(instance, tol)
    if t_upper is None:
        cvar = solve_cvar(instance, tol)
        if not cvar.optimal:
            raise InfeasibleProblem(
                "plain CVaR approximation is infeasible; supply an explicit budget upper bound"
            )
        t_upper = cvar.objective
    if delta_A is None:
        delta_A = tol.delta_A
    if t_lower > t_upper + 1e-12:
        raise ValueError(f"t_lower={t_lower!r} exceeds t_upper={t_upper!r}")

    report = BisectionReport(t_lower=t_lower, t_upper=t_upper)
    report.bounds_history.append((t_lower, t_upper))

    # the initial upper bound comes from a feasible method; its lower-level
    # solution provides the starting incumbent
    x0, _, v0 = lower_level(instance, t_upper, tol)
    if chance_feasible(instance, x0, tol.feas_tol):
        report.x = x0
        report.objective = float(instance.c @ x0)

    while t_upper - t_lower > delta_A:
        t = (t_lower + t_upper) / 2.0
        x, _, value = lower_level(instance, t, tol)
        feasible = chance_feasible(instance, x, tol.feas_tol)
        rescued = False
        if not feasible and rescue is not None:
            rx = rescue(t, x, report.x)
            if rx is not None:
                x, feasible, rescued = rx, True, True
        report.steps.append(BisectionStep(t=t, lower_value=value, feasible=feasible,
                                          rescued=rescued))
        if feasible:
            t_upper = t
            report.x = x
            report.objective = float(instance.c @ x)
        else:
            t_lower = t
        report.bounds_history.append((t_lower, t_upper))

    report.t_lower, report.t_upper = t_lower, t_upper
    if report.x is None:
        raise NoFeasibleIncumbent(
            "no chance-feasible point found at any visited budget; "
            "the supplied upper bound does not come from a feasible method"
        )
    return report


def alsox_sharp(
    instance: CcpInstance,
    t_lower: float | None = None,
    t_upper: float | None = None,
    delta_A: float | None = None,
    tol: Tolerances | None = None,
) -> BisectionReport:
    """Plain budget bisection over the hinge-loss lower level."""
    return _bisect(instance, t_lower, t_upper, delta_A, tol or Tolerances(), rescue=None)


def alsox_sharp_scaled(
    instance: CcpInstance,
    t_lower: float | None = None,
    t_upper: float | None = None,
    delta_A: float | None = None,
    tol: Tolerances | None = None,
) -> BisectionReport:
    """Budget bisection with a scaling rescue on failed feasibility checks.

    When the lower-level minimizer violates the chance constraint, the scaling
    heuristic is run on the budget-restricted instance before giving up on the
    budget.  It is seeded with the failed lower-level point and, because a
    chance-infeasible seed cannot trigger any scaling (its strictly-satisfied
    mass is below 1 - eps), with the current incumbent as a fallback seed.
    Any chance-feasible incumbent found certifies the budget, so the final
    upper bound is never worse than the plain variant's.
    """
    tol = tol or Tolerances()

    def rescue(t: float, x_failed: np.ndarray, incumbent: np.ndarray | None):
        restricted = with_extra_domain_rows(instance, instance.c[None, :], [t])
        seeds = [x_failed]
        if incumbent is not None:
            seeds.append(incumbent)
        for seed in seeds:
            try:
                trace = scaling_heuristic(restricted, seed, tol)
            except InfeasibleProblem:
                continue
            inc = trace.incumbent
            on_budget = float(instance.c @ inc.x) <= t + 1e-9
            if inc.k > 0 and on_budget and chance_feasible(instance, inc.x, tol.feas_tol):
                return inc.x
        return None

    return _bisect(instance, t_lower, t_upper, delta_A, tol, rescue=rescue)
