"""Solver laboratory for the multistage-graph simple path problem."""

from .model import (
    EdgeRef,
    EdgeSet,
    MultistageGraph,
    ValidationReport,
    VertexId,
    edge_ids,
    edge_set,
    stage_slice,
    validate,
)
from .operators import ReachMap, change, comp, init_all, init_reachable, tidy
from .zh import SolveOptions, ZhResult, zh_solve, zh_trace

__all__ = [
    "EdgeRef",
    "EdgeSet",
    "MultistageGraph",
    "ReachMap",
    "SolveOptions",
    "ValidationReport",
    "VertexId",
    "ZhResult",
    "change",
    "comp",
    "edge_ids",
    "edge_set",
    "init_all",
    "init_reachable",
    "stage_slice",
    "tidy",
    "validate",
    "zh_solve",
    "zh_trace",
]
