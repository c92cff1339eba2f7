"""
Routing one cost layer
======================

Place a 3-regular graph on a grid and on the 156-qubit heavy-hex lattice,
build swap networks with the greedy and A* routers, and fuse swaps with the
interactions they follow. A small case is then emulated gate by gate to
confirm the routed circuit prepares the same distribution as direct QAOA.
"""

import numpy as np

from qeopt import emulator as em
from qeopt.emulator import QaoaParams
from qeopt.instances import generate_instances
from qeopt.problem import graph_diagonal
from qeopt.routing import (
    alternate_layers,
    astar_route,
    circuit_metrics,
    emulate_routed,
    greedy_route,
    grid_hardware,
    heavy_hex_156,
    iterate_mapping,
    layout,
    merge_swap_zz,
)

g = generate_instances("random_regular", {"n": 20, "d": 3}, seed=3)
for h in (grid_hardware(5, 5), heavy_hex_156()):
    for name in ("fiedler", "qap"):
        m0 = layout(name, g, h, seed=0)
        greedy = greedy_route(g, h, m0)
        astar = astar_route(g, h, m0, beam_limit=5000)
        merged = merge_swap_zz(greedy)
        print(
            f"{h.name:>12} {name:>7}: greedy swaps={circuit_metrics(greedy)['swaps']:3d}"
            f"  A* swaps={circuit_metrics(astar)['swaps']:3d}"
            f"  greedy cnots {circuit_metrics(greedy)['cnots']} -> {circuit_metrics(merged)['cnots']} after merging"
        )

# feeding each final mapping back in as the next initial mapping
h = grid_hardware(5, 5)
m, c = iterate_mapping(g, h, greedy_route, 6, layout("qap", g, h, seed=0))
print("cnots over iterations:", c.meta["cnot_history"])

# gate-level check on 8 vertices: routed and direct distributions agree
small = generate_instances("random_regular", {"n": 8, "d": 3}, seed=1)
h = grid_hardware(3, 3)
c = merge_swap_zz(greedy_route(small, h, layout("qap", small, h, seed=0)))
par = QaoaParams([0.5, 0.3], [0.4, 0.2])
routed = emulate_routed(small, alternate_layers(c, 2), par.gammas, par.betas)
direct = em.distribution(em.qaoa_state(graph_diagonal(small, "maxcut"), par))
print(f"total variation routed vs direct: {0.5 * np.abs(routed - direct).sum():.1e}")
