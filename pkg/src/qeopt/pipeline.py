"""Predict angles, emulate, sample, filter and run the warm-started heuristic."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import emulator as em
from . import filters as flt
from . import params as prm
from .heuristics import HeuristicConfig, RunTrace, WarmStartPool, multistart
from .partition import Partition, partition_graph, recombine
from .problem import ProblemError, WeightedGraph, graph_diagonal, to_qubo


@dataclass
class WarmSolveResult:
    x: np.ndarray
    energy: float
    params: em.QaoaParams
    samples: em.SampleSet
    trace: RunTrace


def qaoa_samples(g: WeightedGraph, p: int, problem: str = "maxcut", method: str | None = None, shots: int = 1000, seed=0, lam: float = 1.0, tables=None) -> tuple[em.QaoaParams, em.SampleSet]:
    """Predicted (or optimized, for ``method="optimize"``) angles and their samples."""
    diag = graph_diagonal(g, problem, lam)
    method = method or ("mis" if problem == "mis" else "balanced")
    if method == "optimize":
        par = em.optimize_params(diag, p, seed=seed)[0]
    else:
        par = prm.predict(g, p, method, tables)
    return par, em.sample(em.qaoa_state(diag, par), shots, seed)


def apply_chain(chain: str, s: em.SampleSet, q, cfg: flt.FilterConfig = flt.FilterConfig(), model=None) -> em.SampleSet:
    for kind in chain.split("+"):
        s = flt.apply_filter(kind, s, q, cfg, model)
    return s


def warm_solve(
    g: WeightedGraph,
    p: int,
    problem: str = "maxcut",
    method: str | None = None,
    shots: int = 1000,
    chain: str = "none",
    restarts: int = 100,
    cfg: HeuristicConfig = HeuristicConfig(),
    lam: float = 1.0,
    seed=0,
    tables=None,
) -> WarmSolveResult:
    """Full pipeline on one emulable instance; returns the best string found."""
    q = to_qubo(g, problem, lam)
    par, s = qaoa_samples(g, p, problem, method, shots, seed, lam, tables)
    s = apply_chain(chain, s, q)
    trace = multistart(q, WarmStartPool.from_samples(s, seed), restarts, cfg)
    k = int(np.argmin([r.best_cost for r in trace.records]))
    x = np.array([int(b) for b in trace.records[k].best], dtype=np.int8)
    return WarmSolveResult(x, trace.records[k].best_cost, par, s, trace)


@dataclass
class LargeSolveResult:
    x: np.ndarray
    energy: float
    partition: Partition
    blocks: list[WarmSolveResult]
    naive_energy: float


def solve_large(g: WeightedGraph, max_block: int, p: int = 2, problem: str = "maxcut", lam: float = 1.0, seed=0, **kw) -> LargeSolveResult:
    """Partition, warm-solve every block, then pick the best block flips.

    Each block contributes its best warm-started string; ``kw`` goes to
    :func:`warm_solve`.
    """
    if max_block > 26:
        raise ProblemError("blocks above 26 vertices cannot be emulated")
    part = partition_graph(g, max_block, seed)
    q = to_qubo(g, problem, lam)
    blocks, local = [], []
    for b in range(part.blocks):
        sg, _ = part.subgraph(g, b)
        if sg.m == 0:
            # isolated vertices: emulation adds nothing, take the best constant string
            sq = to_qubo(sg, problem, lam)
            x = (sq.sign * sq.c < 0).astype(np.int8)
            local.append(x)
            blocks.append(None)
            continue
        r = warm_solve(sg, p, problem, lam=lam, seed=seed + b, **kw)
        blocks.append(r)
        local.append(r.x)
    x = recombine(q, part, local)
    naive = np.zeros(g.n, dtype=np.int8)
    for b in range(part.blocks):
        naive[part.members(b)] = local[b]
    return LargeSolveResult(x, q.energy(x), part, blocks, q.energy(naive))
