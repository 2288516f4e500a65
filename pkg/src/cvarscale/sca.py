"""Sequential convex refinement of the scaled approximation.

Optimizing jointly over (x, alpha) makes the scenario rows bilinear.  Writing
each product via  a*b = [(a+b)^2 - (a-b)^2] / 4  and replacing the concave
square by its tangent at the previous iterate turns every row into a convex
quadratic constraint, encoded as one second-order-cone block.  The tangent
underestimates the square, so every point feasible for the convex subproblem
also satisfies the true bilinear row, and the previous iterate is feasible in
its own subproblem; objectives therefore never increase along the iteration.

Two loops are provided: one relaxing every scenario, and a hybrid that only
relaxes the scenarios currently strictly satisfied (all others keep factor
one, which keeps the cone count small) and then hands its factors to the
plain scaling heuristic for a final refinement.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conic import SocCone, SocpSpec, SolveResult, SolveStatus, solve_socp
from .cvar import solve_scaled_cvar
from .errors import InfeasibleProblem, SolverFailure
from .model import CcpInstance, ScalingVector, Tolerances, g_max_all
from .scaling import IterationTrace, Termination, scaling_heuristic

__all__ = [
    "SquareTangent",
    "build_dc_subproblem",
    "sequential_convex",
    "hybrid_refine",
]

# subproblem solves run tighter than the reporting tolerance so that the
# recorded objective sequence is monotone well inside 1e-9
_INNER_TOL = Tolerances(opt_tol=1e-9)


@dataclass(frozen=True)
class SquareTangent:
    """First-order tangents of (alpha_i - g_j(x))^2 at an anchor (x_k, alpha_k).

    ``slope[i, j]`` is alpha_k[i] - g_j(x_k, scenario i); the tangent at a new
    point is  slope^2 + 2*slope*((alpha_i - alpha_k[i]) - (g_j(x) - g_j(x_k))),
    which underestimates the square everywhere and is exact at the anchor.
    """

    anchor_x: np.ndarray
    anchor_alpha: np.ndarray
    g_anchor: np.ndarray  # (N, J) row values at the anchor
    slope: np.ndarray     # (N, J)

    @classmethod
    def at(cls, instance: CcpInstance, x_k, alpha_k) -> "SquareTangent":
        x_k = np.asarray(x_k, dtype=float)
        alpha_k = np.asarray(alpha_k, dtype=float)
        g = (instance.w_stack @ x_k + instance.d_stack).reshape(instance.N, instance.J)
        return cls(
            anchor_x=x_k,
            anchor_alpha=alpha_k,
            g_anchor=g,
            slope=alpha_k[:, None] - g,
        )

    def value(self, i: int, j: int, alpha_i: float, g_ij: float) -> float:
        a = self.slope[i, j]
        return a * a + 2.0 * a * ((alpha_i - self.anchor_alpha[i]) - (g_ij - self.g_anchor[i, j]))


def build_dc_subproblem(
    instance: CcpInstance,
    x_k,
    alpha_k,
    relax_set,
    tol: Tolerances | None = None,
) -> SocpSpec:
    """Convex subproblem in (x, beta, s, alpha_relaxed) anchored at (x_k, alpha_k).

    Scenarios outside ``relax_set`` keep factor one and contribute plain linear
    rows; each row of a relaxed scenario contributes one cone block encoding

        (alpha_i + g_j(x))^2 <= 4(s_i + beta) + tangent_ij(alpha_i, x)

    via  ||(2q, 1-r)|| <= 1+r.  An empty relax set therefore reproduces the
    plain approximation LP exactly (no cones).
    """
    tol = tol or Tolerances()
    n, N, J = instance.n, instance.N, instance.J
    relax = np.zeros(N, dtype=bool)
    members = sorted({int(i) for i in relax_set})  # 0-based scenario positions
    if members:
        relax[np.asarray(members, dtype=int)] = True
    relax_idx = np.flatnonzero(relax)
    col_of = {int(i): n + 1 + N + k for k, i in enumerate(relax_idx)}
    nv = n + 1 + N + relax_idx.size

    tangent = SquareTangent.at(instance, x_k, alpha_k)

    lin_rows, lin_rhs, cones = [], [], []
    risk = np.zeros(nv)
    risk[n] = instance.epsilon
    risk[n + 1 : n + 1 + N] = instance.probs
    lin_rows.append(risk)
    lin_rhs.append(0.0)

    for i, scen in enumerate(instance.scenarios):
        if not relax[i]:
            for j in range(scen.J):
                row = np.zeros(nv)
                row[:n] = scen.W[j]
                row[n] = -1.0
                row[n + 1 + i] = -1.0
                lin_rows.append(row)
                lin_rhs.append(-scen.d[j])
            continue
        ai_col = col_of[i]
        for j in range(scen.J):
            a = tangent.slope[i, j]
            # q = alpha_i + g_j(x);  r = 4(s_i + beta) + tangent_ij
            q_coef = np.zeros(nv)
            q_coef[:n] = scen.W[j]
            q_coef[ai_col] = 1.0
            q_const = scen.d[j]
            r_coef = np.zeros(nv)
            r_coef[:n] = -2.0 * a * scen.W[j]
            r_coef[n] = 4.0
            r_coef[n + 1 + i] = 4.0
            r_coef[ai_col] = 2.0 * a
            r_const = (
                a * a
                - 2.0 * a * tangent.anchor_alpha[i]
                + 2.0 * a * float(scen.W[j] @ tangent.anchor_x)
            )
            F = np.vstack([2.0 * q_coef, -r_coef])
            f = np.array([2.0 * q_const, 1.0 - r_const])
            cones.append(SocCone(F=F, f=f, g=r_coef, h=1.0 + r_const))

    dom = instance.domain
    if dom.P is not None:
        for r in range(dom.P.shape[0]):
            row = np.zeros(nv)
            row[:n] = dom.P[r]
            lin_rows.append(row)
            lin_rhs.append(dom.q[r])
    # no explicit floor on beta here: the risk row bounds it because the
    # probabilities sum to one and eps < 1

    c = np.zeros(nv)
    c[:n] = instance.c
    lb = np.concatenate([dom.lb, [-np.inf], np.zeros(N), np.ones(relax_idx.size)])
    ub = np.concatenate(
        [dom.ub, [0.0], np.full(N, np.inf), np.full(relax_idx.size, tol.alpha_max)]
    )
    return SocpSpec(
        c=c, A=np.vstack(lin_rows), b=np.array(lin_rhs), cones=tuple(cones), lb=lb, ub=ub
    )


def point_feasible_in_subproblem(
    spec: SocpSpec, z: np.ndarray, slack: float = 1e-7
) -> bool:
    """Check one stacked point against every row, cone, and bound of the spec."""
    if spec.A.shape[0] and np.max(spec.A @ z - spec.b) > slack:
        return False
    for cone in spec.cones:
        if np.linalg.norm(cone.F @ z + cone.f) > float(cone.g @ z) + cone.h + slack:
            return False
    if np.max(spec.lb - z, initial=0.0) > slack or np.max(z - spec.ub, initial=0.0) > slack:
        return False
    return True


def _stack_point(instance, x, beta, s, alpha, relax_idx) -> np.ndarray:
    return np.concatenate([x, [beta], s, np.asarray(alpha)[relax_idx]])


def _extract(instance: CcpInstance, relax_idx: np.ndarray, z: np.ndarray, alpha_max: float):
    n, N = instance.n, instance.N
    x = z[:n]
    beta = float(z[n])
    s = z[n + 1 : n + 1 + N]
    alpha = np.ones(N)
    alpha[relax_idx] = np.clip(z[n + 1 + N :], 1.0, alpha_max)
    return x, beta, s, alpha


def _solve_subproblem(spec: SocpSpec) -> SolveResult:
    res = solve_socp(spec, _INNER_TOL)
    if res.status == SolveStatus.ITERATION_LIMIT and res.z is not None:
        if res.primal_residual <= 1e-7 and res.dual_residual <= 1e-7:
            return res
    return res


def _sca_loop(
    instance: CcpInstance,
    x0,
    tol: Tolerances,
    relax_rule,
) -> tuple[IterationTrace, np.ndarray]:
    """Shared loop: relax_rule(worst) picks the scenarios left free to scale."""
    x = np.atleast_1d(np.asarray(x0, dtype=float))
    alpha = np.ones(instance.N)
    beta, s = 0.0, np.zeros(instance.N)

    trace = IterationTrace()
    trace.add(0, float(instance.c @ x), x, alpha, None)
    obj_prev = float(instance.c @ x)
    have_prev_solution = False

    for k in range(1, tol.max_iter + 1):
        relax_idx = np.flatnonzero(relax_rule(g_max_all(instance, x)))
        spec = build_dc_subproblem(instance, x, alpha, relax_idx, tol)
        if have_prev_solution and tol.delta2 >= 0.0:
            # the previous iterate must stay feasible: the tangent is exact at
            # the anchor, which is the mechanism behind the monotone objective.
            # (With a negative threshold a scenario whose row sits between
            # delta2 and zero may leave the relax set and void the guarantee,
            # so the check only applies at threshold zero.)
            z_prev = _stack_point(instance, x, beta, s, alpha, relax_idx)
            if not point_feasible_in_subproblem(spec, z_prev, slack=1e-6):
                raise SolverFailure("anchor admissibility violated; subproblem is malformed")
        res = _solve_subproblem(spec)
        if res.status in (SolveStatus.OPTIMAL, SolveStatus.ITERATION_LIMIT) and res.z is not None:
            x, beta, s, alpha = _extract(instance, relax_idx, res.z, tol.alpha_max)
            objective = res.objective
            # polish: re-solve the scaled LP at the extracted factors.  The
            # subproblem point is feasible for it (the tangent underestimates
            # the square), so this can only improve, and the exact vertex it
            # returns keeps the recorded sequence monotone at solver noise
            # levels the cone solver alone cannot guarantee.
            polished = solve_scaled_cvar(instance, ScalingVector(alpha), tol)
            if polished.optimal and polished.objective <= objective + 1e-6:
                x, beta, s = polished.x, polished.beta, polished.s
                objective = polished.objective
            delta = abs(obj_prev - objective)
            trace.add(k, objective, x, alpha, delta)
            obj_prev = objective
            have_prev_solution = True
            if delta < tol.delta1:
                trace.termination = Termination.CONVERGED
                return trace, alpha
            continue
        if res.status == SolveStatus.INFEASIBLE and k == 1:
            raise InfeasibleProblem("first convex subproblem is infeasible from this start")
        trace.termination = Termination.NUMERICAL_ERROR
        return trace, alpha
    trace.termination = Termination.MAX_ITER
    return trace, alpha


def sequential_convex(
    instance: CcpInstance, x0, tol: Tolerances | None = None
) -> IterationTrace:
    """Jointly update (x, alpha) through convex subproblems relaxing every scenario."""
    tol = tol or Tolerances()
    trace, _ = _sca_loop(instance, x0, tol, lambda worst: np.ones(instance.N, dtype=bool))
    return trace


def hybrid_refine(
    instance: CcpInstance, x0, tol: Tolerances | None = None
) -> IterationTrace:
    """Relax only strictly-satisfied scenarios, then refine with the heuristic.

    After the convex loop terminates with factors ``alpha``, the scaled LP is
    re-solved once at exactly those factors (this can only improve on the last
    convex iterate) and the plain scaling heuristic continues from there; the
    combined trace is returned and its incumbent is the answer.
    """
    tol = tol or Tolerances()
    trace, alpha = _sca_loop(instance, x0, tol, lambda worst: worst < tol.delta2)

    post = solve_scaled_cvar(instance, ScalingVector(alpha), tol)
    if post.optimal:
        last = trace.records[-1]
        trace.add(last.k + 1, post.objective, post.x, alpha, abs(last.objective - post.objective))
        trace.handoff_index = len(trace.records) - 1
        tail = scaling_heuristic(instance, post.x, tol, alpha0=alpha)
        handoff = trace.records[-1].k
        for r in tail.records[1:]:
            trace.add(handoff + r.k, r.objective, r.x, r.alpha, r.delta)
        trace.termination = tail.termination
    return trace
