"""Building scaling factors in closed form from a good decision.

The 1-D instance below maximizes x (cost -x) over nonnegative integers while
three of four equiprobable rows want x small and one wants x large; at most
half the mass may be violated.  The grid oracle finds the optimum x = 0.  The
plain tail surrogate is infeasible even after relaxing the grid to x >= 0 -
no multiplier can average the rows into a nonpositive tail.

At x = 0 the three satisfied rows are strictly negative and carry 3/4ants of
the mass, so the closed-form construction produces factors, a multiplier, and
slacks that make the scaled surrogate accept x = 0 exactly.
"""

import numpy as np

from cvarscale import CcpInstance, Domain, Scenario
from cvarscale.conic import SolveStatus
from cvarscale.cvar import solve_cvar, solve_scaled_cvar
from cvarscale.exact import grid_brute_force
from cvarscale.scaling import construct_scaling

inst = CcpInstance(
    c=[-1.0],
    scenarios=(
        Scenario(W=[[-9.0]], d=[10.0], p=0.25),
        Scenario(W=[[4.0]], d=[-2.0], p=0.25),
        Scenario(W=[[4.0]], d=[-2.0], p=0.25),
        Scenario(W=[[4.0]], d=[-2.0], p=0.25),
    ),
    epsilon=0.5,
    domain=Domain.nonnegative(1),
    name="line-four",
)

oracle = grid_brute_force(inst, [[float(v)] for v in range(6)])
print(f"grid oracle over x in 0..5 : optimum {oracle.v_star:.4f} at x = {oracle.x_star}")

plain = solve_cvar(inst)
print(f"plain surrogate            : {plain.status.value}")
assert plain.status == SolveStatus.INFEASIBLE

cons = construct_scaling(inst, oracle.x_star)
print("closed-form construction at the optimum:")
print(f"  factors    : {cons.alpha_hat.alpha}")
print(f"  multiplier : {cons.beta_hat}")
print(f"  slacks     : {cons.s_hat}")

scaled = solve_scaled_cvar(inst, cons.alpha_hat)
print(f"scaled surrogate           : {scaled.status.value}, value {scaled.objective:.4f}")
print("the scaled surrogate recovers the exact optimum")
