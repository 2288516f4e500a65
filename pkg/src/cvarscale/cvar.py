"""Plain and scenario-scaled CVaR approximations of the chance constraint.

The chance constraint is replaced by the conservative requirement that the
CVaR of the scenario losses is nonpositive.  With auxiliary variables this is
the linear program

    minimize    c . x
    subject to  eps * beta + sum_i p_i s_i <= 0
                s_i + beta >= alpha_i * g_j(x, scenario i)   for all i, j
                x in domain,  beta <= 0,  s >= 0,

where ``alpha`` is a fixed per-scenario scaling vector (all ones recovers the
plain approximation).  Any optimal solution is chance-feasible, and larger
factors on strictly-satisfiable scenarios can only help the objective.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .conic import LinearProgramSpec, SolveStatus, solve_lp
from .errors import DimensionMismatch, SolverFailure
from .model import CcpInstance, ScalingVector, Tolerances, g_max_all, violation_probability

__all__ = [
    "CvarSolution",
    "solve_cvar",
    "solve_scaled_cvar",
    "scaled_feasibility_at_x",
    "evaluate_cvar_at_x",
]

_BETA_FLOOR = 1e9


@dataclass(frozen=True)
class CvarSolution:
    x: np.ndarray | None
    beta: float
    s: np.ndarray | None
    alpha: np.ndarray
    objective: float
    status: SolveStatus

    @property
    def optimal(self) -> bool:
        return self.status == SolveStatus.OPTIMAL

    def to_dict(self, instance: CcpInstance | None = None) -> dict:
        doc = {
            "objective": None if np.isnan(self.objective) else float(self.objective),
            "x": None if self.x is None else [float(v) for v in self.x],
            "beta": None if self.x is None else float(self.beta),
            "s": None if self.s is None else [float(v) for v in self.s],
            "alpha": [float(v) for v in self.alpha],
            "status": self.status.value,
        }
        if instance is not None and self.x is not None:
            doc["violation_prob"] = violation_probability(instance, self.x)
        else:
            doc["violation_prob"] = None
        return doc


def build_scaled_cvar_lp(
    instance: CcpInstance, alpha: np.ndarray, tol: Tolerances
) -> LinearProgramSpec:
    """Assemble the scaled approximation as an explicit LP over (x, beta, s)."""
    n, N, J = instance.n, instance.N, instance.J
    nv = n + 1 + N
    alpha_rows = np.repeat(alpha, J)

    scen = np.zeros((N * J, nv))
    scen[:, :n] = alpha_rows[:, None] * instance.w_stack
    scen[:, n] = -1.0
    scen[np.arange(N * J), n + 1 + np.repeat(np.arange(N), J)] = -1.0
    scen_rhs = -alpha_rows * instance.d_stack

    risk = np.zeros((1, nv))
    risk[0, n] = instance.epsilon
    risk[0, n + 1 :] = instance.probs

    rows = [scen, risk]
    rhs = [scen_rhs, np.zeros(1)]
    dom = instance.domain
    if dom.P is not None:
        ext = np.zeros((dom.P.shape[0], nv))
        ext[:, :n] = dom.P
        rows.append(ext)
        rhs.append(dom.q)
    # deep floor on beta so degenerate instances cannot report unbounded rays
    floor = np.zeros((1, nv))
    floor[0, n] = -1.0
    rows.append(floor)
    rhs.append(np.array([_BETA_FLOOR]))

    c = np.zeros(nv)
    c[:n] = instance.c
    lb = np.concatenate([dom.lb, [-np.inf], np.zeros(N)])
    ub = np.concatenate([dom.ub, [0.0], np.full(N, np.inf)])
    return LinearProgramSpec(c=c, A=np.vstack(rows), b=np.concatenate(rhs), lb=lb, ub=ub)


def _split(instance: CcpInstance, z: np.ndarray):
    n, N = instance.n, instance.N
    return z[:n], float(z[n]), z[n + 1 : n + 1 + N]


def solve_scaled_cvar(
    instance: CcpInstance,
    alpha: ScalingVector | np.ndarray,
    tol: Tolerances | None = None,
) -> CvarSolution:
    """Solve the scaled approximation at fixed alpha (an LP, since alpha is data)."""
    tol = tol or Tolerances()
    if not isinstance(alpha, ScalingVector):
        alpha = ScalingVector(alpha)
    if len(alpha) != instance.N:
        raise DimensionMismatch(f"alpha has {len(alpha)} entries, expected {instance.N}")
    alpha.check(tol.alpha_max)

    spec = build_scaled_cvar_lp(instance, alpha.alpha, tol)
    res = solve_lp(spec, tol)
    if res.status == SolveStatus.OPTIMAL:
        x, beta, s = _split(instance, res.z)
        if beta <= -0.999 * _BETA_FLOOR:
            warnings.warn("beta floor active; solution may sit on the artificial bound")
        return CvarSolution(
            x=x, beta=beta, s=s, alpha=alpha.alpha, objective=res.objective, status=res.status
        )
    if res.status == SolveStatus.INFEASIBLE:
        return CvarSolution(
            x=None, beta=np.nan, s=None, alpha=alpha.alpha, objective=np.nan, status=res.status
        )
    raise SolverFailure(f"scaled CVaR LP ended with status {res.status.value}")


def solve_cvar(instance: CcpInstance, tol: Tolerances | None = None) -> CvarSolution:
    """Plain CVaR approximation: the scaled LP with all factors equal to one."""
    return solve_scaled_cvar(instance, ScalingVector.ones(instance.N), tol)


def scaled_feasibility_at_x(
    instance: CcpInstance, x, tol: Tolerances | None = None
) -> tuple[np.ndarray, float, np.ndarray] | None:
    """A feasible (alpha, beta, s) of the scaled approximation at fixed x, or None.

    With x fixed the constraints are linear in (alpha, beta, s); among feasible
    points the one minimizing sum(alpha) is returned, so unnecessary scaling is
    avoided.  Factors live in [1, alpha_max].
    """
    tol = tol or Tolerances()
    worst = g_max_all(instance, x)
    N = instance.N
    # variables: alpha (0..N-1), beta (N), s (N+1..2N)
    nv = 2 * N + 1
    rows = np.zeros((N + 2, nv))
    rhs = np.zeros(N + 2)
    for i in range(N):
        rows[i, i] = worst[i]
        rows[i, N] = -1.0
        rows[i, N + 1 + i] = -1.0
    rows[N, N] = instance.epsilon
    rows[N, N + 1 :] = instance.probs
    rows[N + 1, N] = -1.0
    rhs[N + 1] = _BETA_FLOOR

    c = np.concatenate([np.ones(N), [0.0], np.zeros(N)])
    lb = np.concatenate([np.ones(N), [-np.inf], np.zeros(N)])
    ub = np.concatenate([np.full(N, tol.alpha_max), [0.0], np.full(N, np.inf)])
    res = solve_lp(LinearProgramSpec(c=c, A=rows, b=rhs, lb=lb, ub=ub), tol)
    if res.status == SolveStatus.OPTIMAL:
        z = res.z
        return z[:N], float(z[N]), z[N + 1 :]
    if res.status == SolveStatus.INFEASIBLE:
        return None
    raise SolverFailure(f"fixed-x feasibility LP ended with status {res.status.value}")


def evaluate_cvar_at_x(instance: CcpInstance, x) -> float:
    """CVaR of the worst-row loss at x under the scenario distribution.

    The objective beta + E[(loss - beta)+] / eps is piecewise linear in beta
    and minimized at one of the loss values, so a sweep over breakpoints is
    exact.
    """
    worst = g_max_all(instance, x)
    p = instance.probs
    eps = instance.epsilon
    best = np.inf
    for beta in np.unique(worst):
        val = beta + float(p @ np.maximum(worst - beta, 0.0)) / eps
        best = min(best, val)
    return float(best)
