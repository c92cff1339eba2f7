"""Split large instances into blocks and stitch block solutions back together.

Blocks come from a multilevel partitioner (heavy-edge matching, greedy
growing on the coarsest graph, then Kernighan-Lin refinement on the way
back up) under a hard block-size cap. Each block is solved on its own; the
only freedom left is whether to flip every bit of a block, which is itself
a small QUBO over one variable per block.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .heuristics import HeuristicConfig, tabu_search
from .problem import ProblemError, QuboInstance, WeightedGraph, bits_to_spins, maxcut_to_qubo

BRUTE_FORCE_BLOCKS = 20


@dataclass(frozen=True)
class Partition:
    """Block id per vertex plus the edges joining different blocks."""

    assignment: np.ndarray
    cut_edges: tuple[tuple[int, int, float], ...]

    @property
    def blocks(self) -> int:
        return int(self.assignment.max()) + 1 if self.assignment.size else 0

    def members(self, b: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == b)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.blocks)

    @property
    def cut_weight(self) -> float:
        return float(sum(abs(w) for _, _, w in self.cut_edges))

    def subgraph(self, g: WeightedGraph, b: int) -> tuple[WeightedGraph, np.ndarray]:
        """Induced subgraph of block ``b`` and its vertices (local k -> global)."""
        verts = self.members(b)
        local = {int(v): k for k, v in enumerate(verts)}
        edges = [(local[i], local[j], w) for i, j, w in g.edges if i in local and j in local]
        return WeightedGraph(verts.size, edges), verts

    def to_dict(self) -> dict:
        return {"assignment": [int(a) for a in self.assignment], "cut_edges": [[int(i), int(j), float(w)] for i, j, w in self.cut_edges]}

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"

    @classmethod
    def loads(cls, text: str) -> "Partition":
        doc = json.loads(text)
        return cls(np.array(doc["assignment"], dtype=np.int64), tuple((int(i), int(j), float(w)) for i, j, w in doc["cut_edges"]))

    @classmethod
    def read(cls, path) -> "Partition":
        return cls.loads(Path(path).read_text())


def make_partition(g: WeightedGraph, assignment) -> Partition:
    a = np.asarray(assignment, dtype=np.int64)
    if a.shape != (g.n,):
        raise ProblemError("assignment needs one block id per vertex")
    # relabel blocks densely in order of first appearance
    _, first, inv = np.unique(a, return_index=True, return_inverse=True)
    rank = np.argsort(np.argsort(first))
    a = rank[inv]
    cut = tuple((i, j, w) for i, j, w in g.edges if a[i] != a[j])
    return Partition(a, cut)


# ---------------------------------------------------------------------------
# multilevel partitioner


def _adjacency(n: int, edges) -> list[dict[int, float]]:
    """Weights as absolute values: the partitioner only wants weak links cut."""
    adj: list[dict[int, float]] = [dict() for _ in range(n)]
    for i, j, w in edges:
        if i != j:
            adj[i][j] = adj[i].get(j, 0.0) + abs(w)
            adj[j][i] = adj[j].get(i, 0.0) + abs(w)
    return adj


def _coarsen(adj, vw, cap, rng):
    """One round of heavy-edge matching; returns (map fine -> coarse, coarse adj, coarse weights)."""
    n = len(adj)
    match = np.full(n, -1)
    for v in rng.permutation(n):
        if match[v] >= 0:
            continue
        best, bw = -1, -1.0
        for u, w in sorted(adj[v].items()):
            if match[u] < 0 and u != v and vw[u] + vw[v] <= cap and w > bw:
                best, bw = u, w
        match[v] = v if best < 0 else best
        if best >= 0:
            match[best] = v
    cmap = np.full(n, -1)
    k = 0
    for v in range(n):
        if cmap[v] < 0:
            cmap[v] = cmap[match[v]] = k
            k += 1
    cvw = np.zeros(k, dtype=np.int64)
    np.add.at(cvw, cmap, vw)
    cadj: list[dict[int, float]] = [dict() for _ in range(k)]
    for v in range(n):
        for u, w in adj[v].items():
            a, b = cmap[v], cmap[u]
            if a != b:
                cadj[a][b] = cadj[a].get(b, 0.0) + w
    return cmap, cadj, cvw


def _grow(adj, vw, blocks, cap, rng):
    """Greedy region growing: each block absorbs its most strongly tied free vertex."""
    n = len(adj)
    part = np.full(n, -1)
    load = np.zeros(blocks, dtype=np.int64)
    order = sorted(range(n), key=lambda v: (-vw[v], rng.random()))
    for b in range(blocks):
        free = [v for v in order if part[v] < 0]
        if not free:
            break
        part[free[0]] = b
        load[b] += vw[free[0]]
        while True:
            gain: dict[int, float] = {}
            for v in np.flatnonzero(part == b):
                for u, w in adj[v].items():
                    if part[u] < 0 and load[b] + vw[u] <= cap:
                        gain[u] = gain.get(u, 0.0) + w
            if not gain or load[b] >= cap:
                break
            u = max(sorted(gain), key=lambda x: gain[x])
            part[u] = b
            load[b] += vw[u]
            # stop once the block holds its fair share so later blocks are not starved
            if load[b] >= math.ceil(vw.sum() / blocks):
                break
    # leftovers (disconnected pieces) go to the lightest block that fits
    for v in order:
        if part[v] < 0:
            fits = [b for b in range(blocks) if load[b] + vw[v] <= cap]
            if not fits:
                return None
            b = min(fits, key=lambda x: (load[x], x))
            part[v] = b
            load[b] += vw[v]
    return part


def _refine(adj, vw, part, blocks, cap, passes: int = 10):
    """Kernighan-Lin style refinement: positive-gain moves, then positive-gain swaps."""
    n = len(adj)
    load = np.bincount(part, weights=vw, minlength=blocks).astype(np.int64)

    def ext(v):
        t = np.zeros(blocks)
        for u, w in adj[v].items():
            t[part[u]] += w
        return t

    for _ in range(passes):
        improved = False
        for v in range(n):
            t = ext(v)
            own = part[v]
            cand = [(t[b] - t[own], -b) for b in range(blocks) if b != own and load[b] + vw[v] <= cap]
            if cand:
                g, nb = max(cand)
                if g > 1e-12:
                    load[own] -= vw[v]
                    load[-nb] += vw[v]
                    part[v] = -nb
                    improved = True
        boundary = [v for v in range(n) if any(part[u] != part[v] for u in adj[v])]
        for v, u in itertools.combinations(boundary, 2):
            a, b = part[v], part[u]
            if a == b or load[a] - vw[v] + vw[u] > cap or load[b] - vw[u] + vw[v] > cap:
                continue
            tv, tu = ext(v), ext(u)
            w_vu = adj[v].get(u, 0.0)
            g = (tv[b] - tv[a]) + (tu[a] - tu[b]) - 2.0 * w_vu
            if g > 1e-12:
                part[v], part[u] = b, a
                load[a] += vw[u] - vw[v]
                load[b] += vw[v] - vw[u]
                improved = True
        if not improved:
            break
    return part


def partition_graph(g: WeightedGraph, max_block: int, seed=None, blocks: int | None = None) -> Partition:
    """Cap-respecting partition minimizing the total ``|w|`` of cut edges.

    Parameters
    ----------
    g : WeightedGraph
    max_block : int
        Largest allowed block.
    seed : int, optional
        Seed for matching order and tie-breaking.
    blocks : int, optional
        Target block count; defaults to ``ceil(n / max_block)``. More blocks
        are used if the greedy packing cannot respect the cap.
    """
    if max_block < 2:
        raise ProblemError("max_block must be >= 2")
    n = g.n
    if n <= max_block and blocks in (None, 1):
        return make_partition(g, np.zeros(n, dtype=np.int64))
    rng = np.random.default_rng(seed)
    B = blocks or math.ceil(n / max_block)
    adj = _adjacency(n, g.edges)
    vw = np.ones(n, dtype=np.int64)
    # coarse vertices may not exceed a fraction of the cap, leaving room to pack
    ccap = max(1, max_block // 2)
    levels = []
    cadj, cvw = adj, vw
    while len(cadj) > 4 * B:
        cmap, nadj, nvw = _coarsen(cadj, cvw, ccap, rng)
        if len(nadj) == len(cadj):
            break
        levels.append((cadj, cvw, cmap))
        cadj, cvw = nadj, nvw
    while True:
        part = _grow(cadj, cvw, B, max_block, rng)
        if part is not None:
            break
        B += 1
    part = _refine(cadj, cvw, part, B, max_block)
    for fadj, fvw, cmap in reversed(levels):
        part = _refine(fadj, fvw, part[cmap], B, max_block)
    return make_partition(g, part)


# ---------------------------------------------------------------------------
# recombination


@dataclass(frozen=True)
class FlipQubo:
    """Objective over block flips ``f``: ``constant + qubo(f)`` in the instance's sense.

    Flipping block ``a`` replaces its local bits ``x`` by ``1 - x``.
    """

    qubo: QuboInstance
    constant: float
    base: np.ndarray

    @property
    def blocks(self) -> int:
        return self.qubo.n

    def value(self, f) -> float:
        """Full-instance objective after applying flips ``f``."""
        f = np.asarray(f, dtype=float)
        return self.constant + float(f @ self.qubo.Q @ f + self.qubo.c @ f)


def _full_solution(part: Partition, local) -> np.ndarray:
    if len(local) != part.blocks:
        raise ProblemError(f"{part.blocks} blocks need {part.blocks} local solutions, got {len(local)}")
    x = np.zeros(part.assignment.size, dtype=np.int8)
    for b in range(part.blocks):
        verts = part.members(b)
        if local[b] is None:
            raise ProblemError(f"missing solution for block {b}")
        xb = np.asarray(local[b], dtype=np.int8)
        if xb.shape != verts.shape:
            raise ProblemError(f"block {b} has {verts.size} vertices, solution has {xb.size}")
        x[verts] = xb
    return x


def build_flip_qubo(q: QuboInstance, part: Partition, local) -> FlipQubo:
    """Exact QUBO over per-block flips of the concatenated local solutions.

    With ``y_i = x_i + d_i f_b(i)`` and ``d_i = 1 - 2 x_i``, expanding
    ``y^T Q y + c^T y`` gives ``obj(x)`` plus a field
    ``sum_i d_i (c_i + 2 (Q x)_i) f_b(i)`` plus ``sum_ij Q_ij d_i d_j f_a f_b``.
    Same-block pairs collapse to linear terms because ``f^2 = f``; pairs
    across blocks become the flip couplings.
    """
    x = _full_solution(part, local)
    xf = x.astype(float)
    d = 1.0 - 2.0 * xf
    B = part.blocks
    a = part.assignment
    S = np.zeros((q.n, B))
    S[np.arange(q.n), a] = 1.0
    field_ = d * (q.c + 2.0 * (q.Q @ xf))
    M = S.T @ (q.Q * np.outer(d, d)) @ S  # block-summed d_i Q_ij d_j
    lin = S.T @ field_ + np.diag(M)
    Qf = M - np.diag(np.diag(M))
    constant = float(xf @ q.Q @ xf + q.c @ xf)
    return FlipQubo(QuboInstance(Qf, lin, q.sense), constant, x)


def maxcut_flip_couplings(g: WeightedGraph, part: Partition, local) -> np.ndarray:
    """``J_ab = sum`` over cut edges ``(i in a, j in b)`` of ``w_ij z_i z_j`` for the local spins."""
    z = bits_to_spins(_full_solution(part, local))
    a = part.assignment
    J = np.zeros((part.blocks, part.blocks))
    for i, j, w in part.cut_edges:
        J[a[i], a[j]] += w * z[i] * z[j]
        J[a[j], a[i]] += w * z[i] * z[j]
    return J


def apply_flips(part: Partition, x, f) -> np.ndarray:
    x = np.asarray(x, dtype=np.int8).copy()
    flip = np.asarray(f, dtype=bool)[part.assignment]
    x[flip] ^= 1
    return x


def best_flips(fq: FlipQubo, cfg: HeuristicConfig | None = None) -> np.ndarray:
    """Optimal flips by enumeration up to 20 blocks, tabu search beyond.

    Among tied optima the first one (in binary counting order) that leaves
    block 0 unflipped wins, so symmetric problems keep block 0's orientation.
    """
    B = fq.blocks
    if B == 0:
        return np.zeros(0, dtype=np.int8)
    q = fq.qubo
    if B <= BRUTE_FORCE_BLOCKS:
        idx = np.arange(1 << B, dtype=np.int64)
        F = ((idx[:, None] >> np.arange(B)) & 1).astype(float)
        vals = np.einsum("ki,ij,kj->k", F, q.Q, F) + F @ q.c
        e = q.sign * vals
        ties = np.flatnonzero(e <= e.min() + 1e-12)
        # under the global flip symmetry every optimum has a twin with block 0 unflipped
        keep = ties[F[ties, 0] == 0]
        k = int(keep[0] if keep.size else ties[0])
        return F[k].astype(np.int8)
    x, _, _ = tabu_search(q, np.zeros(B, dtype=np.int8), cfg or HeuristicConfig(max_iters=50 * B))
    return np.asarray(x, dtype=np.int8)


def recombine(q: QuboInstance, part: Partition, local, cfg: HeuristicConfig | None = None) -> np.ndarray:
    """Full assignment from block solutions with the best block flips applied."""
    fq = build_flip_qubo(q, part, local)
    return apply_flips(part, fq.base, best_flips(fq, cfg))


def recombine_maxcut(g: WeightedGraph, part: Partition, local, cfg: HeuristicConfig | None = None) -> np.ndarray:
    return recombine(maxcut_to_qubo(g), part, local, cfg)
