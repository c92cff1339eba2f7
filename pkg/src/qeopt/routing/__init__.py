"""Qubit mapping and swap-network routing for one QAOA cost layer."""

from .circuit import (
    CNOTS,
    INTERACTION,
    MERGED,
    SWAP,
    Event,
    RoutedCircuit,
    alternate_layers,
    check_circuit,
    circuit_metrics,
    emulate_routed,
    merge_swap_zz,
    metrics_line,
    replay,
)
from .hardware import HardwareGraph, grid_hardware, heavy_hex_156, load_topology_file, path_hardware, topology
from .layouts import LAYOUTS, fiedler_layout, layout, qap_layout, random_layout
from .route import DEFAULT_BEAM, DEFAULT_H_WEIGHT, astar_route, greedy_route, iterate_mapping, route
from .swap_enhanced import build_swap_enhanced, heavy_hex_patch, pick_swap_edges, plan_layers, residual_permutation, swap_enhanced_instance

__all__ = [
    "CNOTS", "INTERACTION", "MERGED", "SWAP", "Event", "RoutedCircuit", "alternate_layers", "check_circuit",
    "circuit_metrics", "emulate_routed", "merge_swap_zz", "metrics_line", "replay", "HardwareGraph", "grid_hardware",
    "heavy_hex_156", "load_topology_file", "path_hardware", "topology", "LAYOUTS", "fiedler_layout", "layout",
    "qap_layout", "random_layout", "DEFAULT_BEAM", "DEFAULT_H_WEIGHT", "astar_route", "greedy_route",
    "iterate_mapping", "route", "build_swap_enhanced", "heavy_hex_patch", "pick_swap_edges", "plan_layers",
    "residual_permutation", "swap_enhanced_instance",
]
