"""Convex subproblem construction and the sequential refinement loops."""

import numpy as np
import pytest

from cvarscale import ScalingVector, Tolerances, chance_feasible, g_max_all
from cvarscale.conic import SolveStatus, solve_socp
from cvarscale.cvar import solve_cvar, solve_scaled_cvar
from cvarscale.sca import (
    SquareTangent,
    build_dc_subproblem,
    hybrid_refine,
    point_feasible_in_subproblem,
    sequential_convex,
)
from cvarscale.scaling import Termination
from tests.conftest import single_row_instance
from tests.test_scaling import small_corpus


@pytest.fixture(scope="module")
def step_line():
    """min x over x >= 0; scenario rows 1-x and 2-x, equiprobable, eps=0.6.

    Chance feasibility needs one satisfied scenario, so the exact optimum is
    x=1; the plain approximation needs more.
    """
    return single_row_instance([1.0], [[-1.0], [-1.0]], [1.0, 2.0], 0.6, "step-line")


def subproblem_line_oracle(instance, x_k, alpha_k, x_lo, x_hi, alpha_max=1e6):
    """Independent subproblem minimum for 1-D decisions with single-row scenarios.

    For a fixed decision x, every scenario decouples: its row forces
    s_i + beta >= q_i(alpha_i) with q_i a convex quadratic in alpha_i alone,
    so the best alpha_i minimizes q_i in closed form over [1, alpha_max], and
    the risk row is then satisfiable iff

        min over beta <= 0 of  eps*beta + sum_i p_i (q_i* - beta)+  <= 0,

    whose minimum sits at a breakpoint.  The subproblem is jointly convex, so
    its feasible x-set is an interval; with a positive cost the optimum is
    the left endpoint, found here by bisection between an infeasible x_lo and
    a feasible x_hi.
    """
    tangent = SquareTangent.at(instance, np.atleast_1d(x_k), np.asarray(alpha_k, float))
    p = instance.probs
    eps = instance.epsilon
    w = instance.w_stack[:, 0]
    d = instance.d_stack
    slope = tangent.slope[:, 0]
    g_anchor = tangent.g_anchor[:, 0]
    a_anchor = tangent.anchor_alpha

    def q_min(x):
        g = w * x + d
        # q_i(a) = ((a + g)^2 - slope^2 - 2*slope*(a - a_k) + 2*slope*(g - g_k)) / 4
        # minimized over a in [1, alpha_max] at a* = slope - g (clipped)
        a_star = np.clip(slope - g, 1.0, alpha_max)
        return (
            (a_star + g) ** 2
            - slope**2
            - 2.0 * slope * (a_star - a_anchor)
            + 2.0 * slope * (g - g_anchor)
        ) / 4.0

    def feasible(x):
        q = q_min(x)
        best = np.inf
        for beta in [0.0] + [v for v in q if v < 0]:
            best = min(best, eps * beta + float(p @ np.maximum(q - beta, 0.0)))
        return best <= 1e-11

    assert not feasible(x_lo) and feasible(x_hi)
    for _ in range(80):
        mid = 0.5 * (x_lo + x_hi)
        if feasible(mid):
            x_hi = mid
        else:
            x_lo = mid
    return float(instance.c[0] * x_hi)


class TestSubproblem:
    def test_empty_relax_set_is_plain_lp(self, two_scenario):
        spec = build_dc_subproblem(two_scenario, [0.0, 4.0], [1.0, 1.0], [])
        assert len(spec.cones) == 0
        res = solve_socp(spec)
        assert res.objective == pytest.approx(solve_cvar(two_scenario).objective, abs=1e-6)

    def test_tangent_exact_at_anchor(self, two_scenario):
        t = SquareTangent.at(two_scenario, [0.3, 0.7], [2.0, 3.0])
        for i in range(2):
            exact = t.slope[i, 0] ** 2
            assert t.value(i, 0, [2.0, 3.0][i], t.g_anchor[i, 0]) == pytest.approx(
                exact, abs=1e-10
            )

    def test_anchor_point_remains_feasible(self, two_scenario):
        # a feasible (x, beta, s, alpha) of the scaled LP stays feasible in the
        # subproblem anchored at it
        alpha = np.array([1.0, 6.0])
        sol = solve_scaled_cvar(two_scenario, ScalingVector(alpha))
        spec = build_dc_subproblem(two_scenario, sol.x, alpha, [0, 1])
        z = np.concatenate([sol.x, [sol.beta], sol.s, alpha])
        assert point_feasible_in_subproblem(spec, z, slack=1e-7)

    def test_two_scenario_anchored_far_out(self, two_scenario):
        spec = build_dc_subproblem(two_scenario, [0.0, 4.0], [1.0, 1.0], [0, 1])
        res = solve_socp(spec)
        assert res.status == SolveStatus.OPTIMAL
        assert res.objective <= 2.0 + 1e-7

    def test_matches_grid_oracle(self, step_line):
        x_k, alpha_k = np.array([2.0]), np.array([1.0, 1.0])
        spec = build_dc_subproblem(step_line, x_k, alpha_k, [0, 1])
        res = solve_socp(spec, Tolerances(opt_tol=1e-10))
        assert res.status == SolveStatus.OPTIMAL
        oracle = subproblem_line_oracle(step_line, x_k, alpha_k, x_lo=0.0, x_hi=2.0)
        assert res.objective == pytest.approx(oracle, abs=1e-5)

    def test_feasible_points_satisfy_bilinear_rows(self, two_scenario):
        # the tangent underestimates the square, so subproblem feasibility
        # implies the true scaled rows; check the optimum, the anchor, and
        # mixtures of the two
        alpha_k = np.array([1.0, 2.0])
        sol = solve_scaled_cvar(two_scenario, ScalingVector(alpha_k))
        spec = build_dc_subproblem(two_scenario, sol.x, alpha_k, [0, 1])
        res = solve_socp(spec)
        z_anchor = np.concatenate([sol.x, [sol.beta], sol.s, alpha_k])
        pts = [res.z, z_anchor] + [
            lam * res.z + (1 - lam) * z_anchor for lam in (0.25, 0.5, 0.75)
        ]
        n, N = 2, 2
        for z in pts:
            x, beta, s, alpha = z[:n], z[n], z[n + 1 : n + 1 + N], z[n + 1 + N :]
            worst = g_max_all(two_scenario, x)
            assert np.all(alpha * worst <= s + beta + 1e-7)


class TestSequentialLoop:
    def test_fixed_point_stops_after_one_iteration(self):
        inst = single_row_instance([1.0, 1.0], [[-1, 0], [0, -1]], [-1, -1], 0.4, "slack")
        x0 = solve_cvar(inst).x
        trace = sequential_convex(inst, x0)
        assert trace.termination == Termination.CONVERGED
        assert trace.records[-1].delta == pytest.approx(0.0, abs=1e-8)

    def test_two_scenario_sandwich(self, two_scenario):
        x0 = solve_cvar(two_scenario).x
        trace = sequential_convex(two_scenario, x0)
        assert 1.0 - 1e-7 <= trace.incumbent.objective <= 2.0 + 1e-9

    def test_monotone_and_feasible_on_random_instances(self):
        for inst, sol in small_corpus(8):
            trace = sequential_convex(inst, sol.x)
            assert np.all(np.diff(trace.objectives) <= 1e-9)
            assert chance_feasible(inst, trace.incumbent.x, 1e-6)


class TestHybridLoop:
    def test_no_strict_scenarios_reduces_to_plain(self, two_scenario):
        x0 = solve_cvar(two_scenario).x  # both rows active at (1, 0)
        trace = hybrid_refine(two_scenario, x0)
        assert trace.incumbent.objective == pytest.approx(2.0, abs=1e-7)

    def test_three_scenario_from_interior_point(self, three_scenario):
        trace = hybrid_refine(three_scenario, [0.0, 1.1])
        assert trace.incumbent.objective <= 2.2 + 1e-9

    def test_final_solve_never_worse_than_loop(self):
        # re-solving the scaled LP at the final factors is part of the trace
        # and may only improve on the preceding record
        tol = Tolerances(delta2=0.0)
        for inst, sol in small_corpus(8):
            trace = hybrid_refine(inst, sol.x, tol)
            assert np.all(np.diff(trace.objectives) <= 1e-9)
            final_alpha = trace.records[-1].alpha
            again = solve_scaled_cvar(inst, ScalingVector(final_alpha), tol)
            assert again.objective <= trace.records[-1].objective + 1e-9

    @pytest.mark.slow
    def test_portfolio_not_worse_than_plain(self):
        from cvarscale.bench import GeneratorConfig, generate

        cfg = GeneratorConfig(family="portfolio", n=10, N=100, epsilon=0.2, seed=7)
        inst = generate(cfg)
        sol = solve_cvar(inst)
        assert sol.optimal
        trace = hybrid_refine(inst, sol.x, Tolerances(max_iter=8))
        assert trace.incumbent.objective <= sol.objective + 1e-9
