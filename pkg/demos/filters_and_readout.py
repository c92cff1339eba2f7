"""
Cleaning up samples
===================

Inject symmetric bit-flip readout noise into QAOA samples, undo it with the
tensored readout correction, then keep the most useful strings with the
energy, frequency and Hamming filters.
"""

import numpy as np

from qeopt import emulator as em
from qeopt import filters as flt
from qeopt import params as prm
from qeopt.filters import FilterConfig, ReadoutModel
from qeopt.instances import generate_instances
from qeopt.problem import graph_diagonal, to_qubo

g = generate_instances("random_regular", {"n": 10, "d": 3}, seed=2)
q = to_qubo(g, "maxcut")
d = graph_diagonal(g, "maxcut")
state = em.qaoa_state(d, prm.predict(g, 2, "balanced"))
clean = em.sample(state, 20_000, seed=0)
noisy = em.inject_readout_noise(clean, (0.04, 0.04), seed=1)
fixed = flt.readout_correct(noisy, ReadoutModel.uniform(g.n, 0.04, 0.04), radius=2)

truth = {k: v for k, v in clean.probabilities().items()}
print(f"TV to noiseless samples: noisy {flt.tv_distance(noisy.probabilities(), truth):.3f}, corrected {flt.tv_distance(fixed.probabilities(), truth):.3f}")


def mean_cut(s):
    return -sum(c * q.energy(np.array([int(b) for b in k])) for k, c in s.counts.items()) / s.shots


cfg = FilterConfig()
print(f"mean cut: all samples {mean_cut(fixed):.2f} of optimum {-d.lambda_min:g}")
for kind in ("energy", "frequency", "hamming"):
    out = flt.apply_filter(kind, fixed, q, cfg)
    print(f"  {kind:>9} filter keeps {out.shots:5d} shots, mean cut {mean_cut(out):.2f}")
