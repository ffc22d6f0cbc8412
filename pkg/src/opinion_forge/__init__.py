"""Majority-based opinion diffusion under adversarial seeding."""

from .attackers import AttackerKind, AttackerSpec, Strategy, draw_seed, moderate_seed, strong_seed, weak_seed
from .diffusion import (
    Color,
    DiffusionTrace,
    SeedColoring,
    TieRule,
    WinMode,
    attacker_wins,
    run_diffusion,
    stabilization_time,
)
from .errors import OpinionForgeError
from .graph import Graph, build_graph, edge_count_between, graph_stats, layers_from, read_edge_list

__version__ = "0.1.0"

__all__ = [
    "AttackerKind", "AttackerSpec", "Strategy", "draw_seed", "moderate_seed", "strong_seed", "weak_seed",
    "Color", "DiffusionTrace", "SeedColoring", "TieRule", "WinMode", "attacker_wins", "run_diffusion",
    "stabilization_time", "OpinionForgeError", "Graph", "build_graph", "edge_count_between",
    "graph_stats", "layers_from", "read_edge_list", "__version__",
]
