"""
Warm starts on a line graph
===========================

Emulate QAOA on a small Max-Cut instance, use its samples to seed a tabu
search, and compare against the same search started from uniform random
strings. The comparison metric is the Q-factor: the ratio of the smallest
expected number of iterations needed to reach the optimum, cold over warm.
"""

import numpy as np

from qeopt import benchmark as bm
from qeopt import emulator as em
from qeopt import params as prm
from qeopt.heuristics import HeuristicConfig, WarmStartPool, multistart
from qeopt.instances import generate_instances
from qeopt.problem import graph_diagonal, to_qubo

# an unweighted path on 14 vertices; its optimum cuts every edge
g = generate_instances("line", {"n": 14})
q = to_qubo(g, "maxcut")
diag = graph_diagonal(g, "maxcut")
optimum = diag.lambda_min
print(f"n={g.n} edges={g.m} optimum={optimum:g}")

# angles come from the precomputed tables, no variational loop needed
tables = prm.load_tables()
cfg = HeuristicConfig(max_iters=500, target=optimum, seed=1)
cold = multistart(q, WarmStartPool.random(q.n), 1000, cfg)
for p in (1, 2, 3):
    par = prm.predict(g, p, "balanced", tables)
    state = em.qaoa_state(diag, par)
    ar = em.ar_star(em.expectation(state, diag), diag)
    samples = em.sample(state, 1000, seed=p)
    warm = multistart(q, WarmStartPool.from_samples(samples, seed=p), 1000, HeuristicConfig(max_iters=500, target=optimum, seed=10 + p))
    rep = bm.q_factor(cold, warm, optimum, 500, instance="line14", p=p)
    print(f"p={p} AR*={ar:.3f} R_min cold={rep.rmin_cold:.1f} warm={rep.rmin_warm:.1f} Q={rep.Q:.2f}")

# a uniform pool carries no information, so Q should sit near 1
rng = np.random.default_rng(0)
uniform = em.SampleSet.from_indices(q.n, rng.integers(0, 1 << q.n, 1000))
warm = multistart(q, WarmStartPool.from_samples(uniform, seed=0, source="uniform"), 1000, HeuristicConfig(max_iters=500, target=optimum, seed=99))
boot = bm.bootstrap_q(cold, warm, optimum, 500, draws=500, seed=0)
lo, hi = np.percentile(boot, [2.5, 97.5])
print(f"uniform pool Q={bm.q_factor(cold, warm, optimum, 500).Q:.2f} (95% interval {lo:.2f} to {hi:.2f})")
