"""A small benchmark sweep: every method on a batch of generated instances.

Produces the same comma-separated report the command line emits, then prints
the mean improvement of each method over the plain surrogate.  On these
portfolio instances the improvement grows with the allowed violation mass.
"""

import numpy as np

from cvarscale import Tolerances
from cvarscale.bench import GeneratorConfig, generate, run_experiment, write_report

methods = ["cvar", "alg1", "alg2", "alg3", "alsox", "alsox-scaled", "exact"]
tol = Tolerances(max_iter=10)

for eps in (0.100333, 0.300333):
    instances = [
        generate(GeneratorConfig(family="portfolio", n=8, N=12, epsilon=eps,
                                 seed=s, budget_fraction=0.6))
        for s in (1, 2, 3)
    ]
    rows = run_experiment(instances, methods, tol)
    print(f"=== eps = {eps} ===")
    print(write_report(rows), end="")
    for m in methods:
        vals = [r.improvement_pct for r in rows if r.method == m and not np.isnan(r.value)]
        print(f"  mean improvement {m:13s}: {np.mean(vals):7.3f}%")
    print()
