"""Warm-started classical optimization seeded by emulated QAOA samples.

Subpackages and modules:

``problem``
    Graphs, QUBOs and cost diagonals.
``emulator``
    Statevector QAOA, exact gradients, sampling and angle optimization.
``params``
    Angle prediction from precomputed tables.
``routing``
    Qubit layouts and swap networks for one cost layer.
``filters``
    Readout correction and sample filters.
``heuristics``
    Warm-startable tabu search.
``benchmark``
    Runtime-to-optimum statistics and cold-versus-warm experiments.
``partition``
    Block decomposition and flip recombination for large instances.
"""

from .emulator import QaoaParams, SampleSet, optimize_params, qaoa_state, sample
from .problem import CostDiagonal, ProblemError, QuboInstance, WeightedGraph, graph_diagonal, to_qubo

__version__ = "0.1.0"

__all__ = [
    "QaoaParams",
    "SampleSet",
    "optimize_params",
    "qaoa_state",
    "sample",
    "CostDiagonal",
    "ProblemError",
    "QuboInstance",
    "WeightedGraph",
    "graph_diagonal",
    "to_qubo",
]
