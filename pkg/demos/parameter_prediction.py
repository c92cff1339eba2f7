"""
Predicting QAOA angles
======================

Compare table-based angle predictions with angles found by direct
optimization on fresh weighted Max-Cut and unweighted MIS instances. The
figure of merit is AR*, which is 1 at the ground state and 0 at the most
excited state.
"""

import numpy as np

from qeopt import emulator as em
from qeopt import params as prm
from qeopt.instances import generate_instances
from qeopt.problem import graph_diagonal

tables = prm.load_tables()
rng = np.random.default_rng(5)
for problem, method, weights in (("maxcut", "balanced", "uniform"), ("mis", "mis", "unit")):
    g = generate_instances("erdos_renyi", {"n": 12, "p": 0.4, "weights": weights}, seed=int(rng.integers(1 << 30)))
    d = graph_diagonal(g, problem)
    print(f"{problem}: n={g.n} edges={g.m}")
    prev = None
    for p in range(1, 5):
        pred = prm.predict(g, p, method, tables)
        ar_pred = em.ar_star(em.expectation(em.qaoa_state(d, pred), d), d)
        init = [em.interpolate_params(prev, p)] if prev is not None else None
        best = em.optimize_params_full(d, p, restarts=3, seed=p, init=init)
        prev = best.params
        ar_opt = em.ar_star(best.energy, d)
        print(f"  p={p} predicted AR*={ar_pred:.4f} optimized AR*={ar_opt:.4f} gap={ar_opt - ar_pred:.4f}")
        print(f"       gammas={np.round(pred.gammas, 3).tolist()} betas={np.round(pred.betas, 3).tolist()}")
