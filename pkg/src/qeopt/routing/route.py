"""Swap-network synthesis for one cost layer: greedy and best-first search."""

from __future__ import annotations

import heapq
import itertools

import numpy as np

from ..problem import ProblemError, WeightedGraph
from .circuit import INTERACTION, SWAP, Event, RoutedCircuit, circuit_metrics, merge_swap_zz
from .hardware import HardwareGraph

DEFAULT_BEAM = 50_000
# estimate weight; 1.0 gives the plain sum, smaller values search wider
DEFAULT_H_WEIGHT = 0.5


def _check_mapping(g: WeightedGraph, h: HardwareGraph, m0) -> np.ndarray:
    l2p = np.asarray(m0, dtype=np.int64).copy()
    if l2p.shape != (g.n,) or len(set(l2p.tolist())) != g.n or (g.n and (l2p.min() < 0 or l2p.max() >= h.q)):
        raise ProblemError("initial mapping must place every vertex on a distinct qubit")
    return l2p


class _State:
    """Mutable placement plus the set of unimplemented terms."""

    def __init__(self, g: WeightedGraph, h: HardwareGraph, l2p: np.ndarray):
        self.g, self.h = g, h
        self.l2p = l2p
        self.p2l = np.full(h.q, -1, dtype=np.int64)
        self.p2l[l2p] = np.arange(g.n)
        self.remaining = set(range(g.m))
        self.terms_of = [[] for _ in range(g.n)]
        for t, (i, j, _) in enumerate(g.edges):
            self.terms_of[i].append(t)
            self.terms_of[j].append(t)

    def dist(self, t: int) -> int:
        i, j, _ = self.g.edges[t]
        return int(self.h.dist[self.l2p[i], self.l2p[j]])

    def ready(self) -> list[Event]:
        out = []
        for t in sorted(self.remaining):
            if self.dist(t) == 1:
                i, j, _ = self.g.edges[t]
                out.append(Event(INTERACTION, int(self.l2p[i]), int(self.l2p[j]), t))
        for e in out:
            self.remaining.discard(e.term)
        return out

    def swap(self, a: int, b: int) -> None:
        u, v = self.p2l[a], self.p2l[b]
        self.p2l[a], self.p2l[b] = v, u
        if u >= 0:
            self.l2p[u] = b
        if v >= 0:
            self.l2p[v] = a

    def cost(self, qe: float) -> float:
        return float(sum(self.dist(t) ** qe for t in self.remaining))

    def swap_delta(self, a: int, b: int, qe: float) -> float:
        """Change of ``sum d^q`` over remaining terms if qubits a, b swap."""
        D = self.h.dist
        u, v = self.p2l[a], self.p2l[b]
        delta = 0.0
        for x, here, there, other in ((u, a, b, v), (v, b, a, u)):
            if x < 0:
                continue
            for t in self.terms_of[x]:
                if t not in self.remaining:
                    continue
                i, j, _ = self.g.edges[t]
                y = j if i == x else i
                if y == other:
                    continue
                py = self.l2p[y]
                delta += D[there, py] ** qe - D[here, py] ** qe
        return delta

    def candidate_edges(self) -> list[tuple[int, int]]:
        """Hardware edges touching a qubit whose vertex still has terms."""
        active = set()
        for t in self.remaining:
            i, j, _ = self.g.edges[t]
            active.add(int(self.l2p[i]))
            active.add(int(self.l2p[j]))
        return sorted({(min(a, b), max(a, b)) for a in active for b in self.h.adj[a]})


def greedy_route(g: WeightedGraph, h: HardwareGraph, m0, q_exponent: float = 1.0) -> RoutedCircuit:
    """Distance-decay greedy routing of one layer.

    Runs every adjacent term, then applies the swap that lowers
    ``D = sum_T d(T)^q`` the most (smallest edge on ties). When no swap lowers
    ``D`` it moves the closest remaining term one step along a shortest path.
    """
    l2p = _check_mapping(g, h, m0)
    st = _State(g, h, l2p.copy())
    events = st.ready()
    guard = 10 * max(g.m, 1) * max(h.diameter, 1) + 10
    steps = 0
    while st.remaining:
        steps += 1
        if steps > guard:
            raise RuntimeError("greedy routing exceeded its iteration guard")
        best, best_d = None, 0.0
        for a, b in st.candidate_edges():
            d = st.swap_delta(a, b, q_exponent)
            if d < best_d - 1e-12:
                best, best_d = (a, b), d
        if best is None:
            t = min(st.remaining, key=lambda t: (st.dist(t), t))
            i, j, _ = g.edges[t]
            pa = int(st.l2p[i])
            best = (pa, h.next_hop(pa, int(st.l2p[j])))
        st.swap(*best)
        events.append(Event(SWAP, min(best), max(best)))
        events += st.ready()
    return RoutedCircuit(events, l2p, st.l2p.copy(), h.q, {"router": "greedy", "q": q_exponent})


def astar_route(
    g: WeightedGraph,
    h: HardwareGraph,
    m0,
    q_exponent: float = 1.0,
    cost_mode: str = "swaps",
    beam_limit: int = DEFAULT_BEAM,
    h_weight: float = DEFAULT_H_WEIGHT,
    optimal: bool = False,
) -> RoutedCircuit:
    """Best-first search over partial circuits.

    A node is a placement plus the set of remaining terms. Expanding a node
    applies one swap (``cost_mode="swaps"``) or one layer of disjoint swaps
    (``cost_mode="depth"``) and then runs every term that became adjacent.
    The path cost counts swaps or swap layers; the estimate is
    ``h_weight * sum_T d(T)^q`` over remaining terms. The estimate is not
    admissible, so the first goal reached need not be optimal.

    With ``optimal=True`` the search keeps going after the first goal and
    prunes nodes whose cost plus an admissible bound (a swap shortens any
    term by at most one hop, so ``max_T d(T) - 1`` more swaps are needed)
    cannot beat the best goal so far. ``meta["proved_optimal"]`` records
    whether the frontier ran dry before ``beam_limit``. If no goal is reached
    within ``beam_limit`` expansions the greedy router's result is returned
    with ``meta["fallback"] = True``.
    """
    if cost_mode not in ("swaps", "depth"):
        raise ProblemError(f"unknown cost mode {cost_mode!r}")
    l2p0 = _check_mapping(g, h, m0)
    root = _State(g, h, l2p0.copy())
    root_events = root.ready()
    tie = itertools.count()
    # node record: (l2p, remaining frozenset, parent id, events)
    nodes = [(root.l2p.copy(), frozenset(root.remaining), -1, root_events)]
    frontier = [(h_weight * root.cost(q_exponent), 0, next(tie), 0)]
    best_g = {(root.l2p.tobytes(), nodes[0][1]): 0}
    expanded = 0
    goal = None  # (cost, node id) of the best finished circuit
    exhausted = True
    while frontier:
        f, neg_g, _, nid = heapq.heappop(frontier)
        gcost = -neg_g
        l2p, rem, _, _ = nodes[nid]
        if goal is not None and gcost + _bound(g, h, l2p, rem, cost_mode) >= goal[0]:
            continue
        if not rem:
            goal = (gcost, nid)
            if not optimal:
                break
            continue
        key = (l2p.tobytes(), rem)
        if best_g.get(key, np.inf) < gcost:
            continue
        expanded += 1
        if expanded > beam_limit:
            exhausted = False
            break
        st = _State(g, h, l2p.copy())
        st.remaining = set(rem)
        for layer in _moves(st, q_exponent, cost_mode):
            child = _State(g, h, l2p.copy())
            child.remaining = set(rem)
            ev = []
            for a, b in layer:
                child.swap(a, b)
                ev.append(Event(SWAP, a, b))
            ev += child.ready()
            cg = gcost + (len(layer) if cost_mode == "swaps" else 1)
            ckey = (child.l2p.tobytes(), frozenset(child.remaining))
            if best_g.get(ckey, np.inf) <= cg:
                continue
            if goal is not None and cg + _bound(g, h, child.l2p, ckey[1], cost_mode) >= goal[0]:
                continue
            best_g[ckey] = cg
            nodes.append((child.l2p.copy(), ckey[1], nid, ev))
            heapq.heappush(frontier, (cg + h_weight * child.cost(q_exponent), -cg, next(tie), len(nodes) - 1))
    meta = {"router": "astar", "mode": cost_mode, "q": q_exponent, "expanded": expanded}
    if goal is not None:
        if optimal:
            meta["proved_optimal"] = exhausted
        return _assemble(nodes, goal[1], l2p0, h, meta)
    c = greedy_route(g, h, l2p0, q_exponent)
    c.meta.update({"router": "astar", "mode": cost_mode, "fallback": True, "expanded": expanded})
    return c


def _bound(g: WeightedGraph, h: HardwareGraph, l2p, rem, mode: str) -> int:
    """Admissible lower bound on the swaps (or swap layers) still needed."""
    if not rem:
        return 0
    return max(int(h.dist[l2p[g.edges[t][0]], l2p[g.edges[t][1]]]) for t in rem) - 1


def _moves(st: _State, qe: float, mode: str) -> list[list[tuple[int, int]]]:
    edges = st.candidate_edges()
    if mode == "swaps":
        return [[e] for e in edges]
    # depth: each candidate seeds a layer, completed greedily by disjoint improving swaps
    deltas = {e: st.swap_delta(*e, qe) for e in edges}
    ranked = sorted(edges, key=lambda e: (deltas[e], e))
    layers, seen = [], set()
    for first in edges:
        used = {first[0], first[1]}
        layer = [first]
        for e in ranked:
            if deltas[e] < 0 and e[0] not in used and e[1] not in used and _independent(st, e, layer):
                layer.append(e)
                used.update(e)
        key = tuple(sorted(layer))
        if key not in seen:
            seen.add(key)
            layers.append(sorted(layer))
    return layers


def _independent(st: _State, e, layer) -> bool:
    """True when no remaining term joins vertices moved by ``e`` and by the layer."""
    touched = {int(st.p2l[x]) for f in layer for x in f if st.p2l[x] >= 0}
    for x in e:
        u = st.p2l[x]
        if u < 0:
            continue
        for t in st.terms_of[u]:
            if t in st.remaining:
                i, j, _ = st.g.edges[t]
                if (j if i == u else i) in touched:
                    return False
    return True


def _assemble(nodes, nid, l2p0, h, meta) -> RoutedCircuit:
    final = nodes[nid][0]
    chain = []
    while nid >= 0:
        chain.append(nodes[nid][3])
        nid = nodes[nid][2]
    events = [e for ev in reversed(chain) for e in ev]
    return RoutedCircuit(events, l2p0, final, h.q, meta)


def route(g, h, m0, method: str = "greedy", q_exponent: float = 1.0, **kw) -> RoutedCircuit:
    if method == "greedy":
        return greedy_route(g, h, m0, q_exponent)
    if method == "astar":
        return astar_route(g, h, m0, q_exponent, **kw)
    raise ProblemError(f"unknown router {method!r}")


def iterate_mapping(g: WeightedGraph, h: HardwareGraph, router, iterations: int, m0) -> tuple[np.ndarray, RoutedCircuit]:
    """Route repeatedly, feeding each final placement back in as the start.

    ``router(g, h, mapping)`` returns a RoutedCircuit. Circuits are compared
    by CNOT count after swap/ZZ merging; the merged best is returned together
    with its initial mapping (earliest iteration wins ties).
    """
    if iterations < 1:
        raise ProblemError("iterations must be >= 1")
    m = np.asarray(m0, dtype=np.int64)
    best = None
    history = []
    for it in range(iterations):
        c = merge_swap_zz(router(g, h, m))
        cn = circuit_metrics(c)["cnots"]
        history.append(cn)
        if best is None or cn < best[0]:
            best = (cn, c)
        m = c.final
    c = best[1]
    c.meta["cnot_history"] = history
    return c.initial.copy(), c
