"""Benchmark graphs whose extra edges cost nothing beyond merged swaps.

A subgraph of the device is taken as the problem graph. Selected edges act
as swap edges: their ZZ term is merged with a swap, after which each end
vertex sits next to the other's former neighbours, so those pairs become
new edges run as plain interactions. The per-layer plan is fixed, and even
layers run it backwards so the qubits return home.
"""

from __future__ import annotations

import networkx as nx
import numpy as np

from ..instances import _weights
from ..problem import ProblemError, WeightedGraph
from .circuit import INTERACTION, MERGED, Event, RoutedCircuit
from .hardware import heavy_hex_156


def _neighbours(n: int, edges) -> list[set[int]]:
    adj = [set() for _ in range(n)]
    for i, j in edges:
        adj[i].add(j)
        adj[j].add(i)
    return adj


def _norm(e) -> tuple[int, int]:
    i, j = int(e[0]), int(e[1])
    return (i, j) if i < j else (j, i)


def check_swap_edges(h_sub: WeightedGraph, swap_edges) -> None:
    """Raise unless every swap edge is a graph edge and the neighbours of its
    end vertices (other than the partner) touch no swap edge."""
    base = {_norm(e[:2]) for e in h_sub.edges}
    sw = [_norm(e) for e in swap_edges]
    if len(set(sw)) != len(sw):
        raise ProblemError("duplicate swap edge")
    touched = {v for e in sw for v in e}
    adj = _neighbours(h_sub.n, base)
    for i, j in sw:
        if (i, j) not in base:
            raise ProblemError(f"swap edge {(i, j)} is not an edge of the subgraph")
        for a, b in ((i, j), (j, i)):
            bad = (adj[a] - {b}) & touched
            if bad:
                raise ProblemError(f"neighbour {min(bad)} of swap vertex {a} touches another swap edge")


def build_swap_enhanced(h_sub: WeightedGraph, swap_edges, weights=None, seed=None) -> tuple[WeightedGraph, RoutedCircuit]:
    """Augmented graph and its one-layer execution plan on ``h_sub``.

    Parameters
    ----------
    h_sub : WeightedGraph
        Device subgraph; vertex ``k`` is physical qubit ``k``.
    swap_edges : iterable of pairs
        Edges to merge with swaps.
    weights : None, str or pair
        Weight spec for every edge of the augmented graph, as in
        ``generate_instances``. ``None`` keeps the subgraph weights and gives
        new edges weight 1.
    seed : int, optional
        Seed for random weights.

    Returns
    -------
    (WeightedGraph, RoutedCircuit)
        The plan runs the plain interactions, then the merged
        swaps, then the new edges; its ``final`` mapping is the permutation
        left after an odd number of layers.
    """
    check_swap_edges(h_sub, swap_edges)
    sw = sorted({_norm(e) for e in swap_edges})
    base = [_norm(e[:2]) for e in h_sub.edges]
    base_set = set(base)
    adj = _neighbours(h_sub.n, base)
    new: dict[tuple[int, int], tuple[int, int]] = {}  # logical edge -> physical edge after the swaps
    for i, j in sw:
        for a, b in ((i, j), (j, i)):
            # after the swap, a sits on b's qubit next to b's other neighbours
            for k in sorted(adj[b] - {a}):
                e = _norm((a, k))
                if e not in base_set:
                    new[e] = (b, k)
    new_edges = sorted(new)
    pairs = base + new_edges
    if weights is None:
        w = [float(e[2]) for e in h_sub.edges] + [1.0] * len(new_edges)
    else:
        w = [float(x) for x in _weights(len(pairs), weights, np.random.default_rng(seed))]
    g = WeightedGraph(h_sub.n, [(i, j, x) for (i, j), x in zip(pairs, w)])
    index = {(i, j): k for k, (i, j, _) in enumerate(g.edges)}
    swap_set = set(sw)
    events = [Event(INTERACTION, i, j, index[(i, j)]) for i, j in base if (i, j) not in swap_set]
    events += [Event(MERGED, i, j, index[(i, j)]) for i, j in sw]
    events += [Event(INTERACTION, *new[e], index[e]) for e in new_edges]
    initial = np.arange(h_sub.n)
    final = initial.copy()
    for i, j in sw:
        final[i], final[j] = j, i
    plan = RoutedCircuit(events, initial, final, h_sub.n, {"swap_edges": [list(e) for e in sw], "new_edges": [list(e) for e in new_edges]})
    return g, plan


def plan_layers(plan: RoutedCircuit, p: int) -> list[RoutedCircuit]:
    """Plan per layer: forward on odd layers, reversed on even ones."""
    return [plan if k % 2 == 0 else plan.reversed() for k in range(p)]


def residual_permutation(plan: RoutedCircuit, p: int) -> np.ndarray:
    """Logical-to-physical map after ``p`` layers, for relabelling measured strings."""
    return plan.final.copy() if p % 2 else plan.initial.copy()


def heavy_hex_patch(n: int, seed=None) -> WeightedGraph:
    """Connected ``n``-vertex BFS patch of the 156-qubit heavy-hex device, relabelled 0..n-1."""
    h = heavy_hex_156()
    if not 1 <= n <= h.q:
        raise ProblemError(f"patch size {n} outside [1, {h.q}]")
    rng = np.random.default_rng(seed)
    G = nx.Graph(list(h.edges))
    root = int(rng.integers(h.q))
    order = [root] + [v for _, v in nx.bfs_edges(G, root)]
    keep = order[:n]
    label = {v: k for k, v in enumerate(keep)}
    sub = G.subgraph(keep)
    return WeightedGraph(n, sorted((*_norm((label[a], label[b])), 1.0) for a, b in sub.edges))


def pick_swap_edges(h_sub: WeightedGraph, count: int, seed=None) -> list[tuple[int, int]]:
    """Up to ``count`` compatible swap edges, chosen greedily in random order."""
    rng = np.random.default_rng(seed)
    edges = [_norm(e[:2]) for e in h_sub.edges]
    chosen: list[tuple[int, int]] = []
    for k in rng.permutation(len(edges)):
        if len(chosen) == count:
            break
        try:
            check_swap_edges(h_sub, chosen + [edges[k]])
        except ProblemError:
            continue
        chosen.append(edges[k])
    if len(chosen) < count:
        raise ProblemError(f"only {len(chosen)} compatible swap edges fit, {count} requested")
    return chosen


def swap_enhanced_instance(n: int, n_swap: int = 2, weights=None, seed=None) -> WeightedGraph:
    """Swap-enhanced graph on a random heavy-hex patch of ``n`` qubits."""
    h_sub = heavy_hex_patch(n, seed)
    sw = pick_swap_edges(h_sub, n_swap, seed)
    return build_swap_enhanced(h_sub, sw, weights, seed)[0]
