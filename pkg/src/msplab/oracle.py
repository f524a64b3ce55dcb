"""Ground-truth exponential searchers.

``oracle_simple_path`` decides simple-path existence in a labeled multistage
graph by depth-first search with incremental prefix-containment pruning: a
prefix dies as soon as the newest vertex's edge set misses any prefix edge,
which is exactly the membership rule applied as the path grows.

``oracle_hamilton`` is a plain backtracking Hamilton-circuit search over an
undirected graph.  Both are correctness benchmarks, not performance
contenders; each carries a dual budget (node-expansion cap and optional
wall-clock cap, whichever trips first) and reports YES with a verifiable
witness, NO on exhaustion, or TIMEOUT.
"""

from __future__ import annotations

import sys
import time
from dataclasses import dataclass

from .model import MultistageGraph, validate
from .reduction import UndirectedGraph
from .zh import InvalidGraphError

YES = "YES"
NO = "NO"
TIMEOUT = "TIMEOUT"


class PathStructureError(ValueError):
    """A candidate path is not even a source-to-sink staged path."""


@dataclass(frozen=True)
class SearchBudget:
    max_nodes: int = 10_000_000
    max_seconds: float | None = None


@dataclass
class OracleResult:
    answer: str  # YES | NO | TIMEOUT
    witness: tuple | None
    nodes_expanded: int
    budget_used: float  # seconds


class _BudgetExhausted(Exception):
    pass


def verify_simple_path(g: MultistageGraph, path, pre_simple: bool = False) -> bool:
    """True iff ``path`` (vertex names, source to sink) satisfies the
    prefix-containment rule at every vertex.

    With ``pre_simple`` the rule is only enforced up to stage L-2 (a
    definition variant kept for completeness; nothing here relies on it).
    Raises :class:`PathStructureError` if the path is not an edge-connected,
    stage-monotone source-to-sink path.
    """
    names = [v.name if hasattr(v, "name") else v for v in path]
    if len(names) != g.stage_count + 1:
        raise PathStructureError(
            f"path visits {len(names)} vertices, need {g.stage_count + 1}"
        )
    if names[0] != g.source_name():
        raise PathStructureError(f"path starts at {names[0]!r}, not the source")
    if names[-1] != g.sink_name():
        raise PathStructureError(f"path ends at {names[-1]!r}, not the sink")
    prefix = 0
    last_checked = g.stage_count - 2 if pre_simple else g.stage_count
    for stage in range(1, g.stage_count + 1):
        try:
            eid = g.edge_id(names[stage - 1], names[stage], stage)
        except KeyError:
            raise PathStructureError(
                f"no stage-{stage} edge {names[stage - 1]!r} -> {names[stage]!r}"
            ) from None
        prefix |= 1 << eid
        if stage <= last_checked:
            if not g.has_eset(names[stage]):
                return False
            if prefix & ~g.eset(names[stage]):
                return False
    return True


def oracle_simple_path(
    g: MultistageGraph, budget: SearchBudget | None = None
) -> OracleResult:
    """Exhaustive simple-path search, first witness in ascending edge-id order."""
    report = validate(g)
    if not report.ok:
        raise InvalidGraphError(report)
    budget = budget or SearchBudget()
    needed = g.stage_count * 4 + 1000  # recursion tracks the path depth
    if sys.getrecursionlimit() < needed:
        sys.setrecursionlimit(needed)
    started = time.perf_counter()
    deadline = None if budget.max_seconds is None else started + budget.max_seconds

    out_mask = g._out_mask
    eto = g._eto
    esets = g._esets
    vnames = g._vnames
    last = g.stage_count
    expanded = 0
    path = [g._stage_vertices[0][0]]

    def extend(vi: int, prefix: int, stage: int) -> tuple | None:
        nonlocal expanded
        expanded += 1
        if expanded > budget.max_nodes:
            raise _BudgetExhausted
        if deadline is not None and expanded % 1024 == 0 and time.perf_counter() > deadline:
            raise _BudgetExhausted
        if stage == last:
            return tuple(vnames[i] for i in path)
        m = out_mask[vi]
        while m:
            low = m & -m
            eid = low.bit_length() - 1
            m ^= low
            wi = eto[eid]
            new_prefix = prefix | low
            if new_prefix & ~esets[wi]:
                continue
            path.append(wi)
            witness = extend(wi, new_prefix, stage + 1)
            if witness is not None:
                return witness
            path.pop()
        return None

    try:
        witness = extend(path[0], 0, 0)
    except _BudgetExhausted:
        return OracleResult(TIMEOUT, None, expanded, time.perf_counter() - started)
    elapsed = time.perf_counter() - started
    if witness is not None:
        return OracleResult(YES, witness, expanded, elapsed)
    return OracleResult(NO, None, expanded, elapsed)


def verify_hamilton_circuit(ug: UndirectedGraph, circuit) -> bool:
    """True iff ``circuit`` visits every vertex exactly once and closes."""
    seq = list(circuit)
    if len(seq) != ug.n + 1 or seq[0] != seq[-1]:
        return False
    if sorted(seq[:-1]) != sorted(ug.vertices()):
        return False
    return all(ug.has_edge(a, b) for a, b in zip(seq, seq[1:]))


def oracle_hamilton(ug: UndirectedGraph, budget: SearchBudget | None = None) -> OracleResult:
    """Backtracking Hamilton-circuit search anchored at the lowest vertex."""
    budget = budget or SearchBudget()
    needed = ug.n * 4 + 1000
    if sys.getrecursionlimit() < needed:
        sys.setrecursionlimit(needed)
    started = time.perf_counter()
    deadline = None if budget.max_seconds is None else started + budget.max_seconds
    expanded = 0
    if ug.n < 3:
        return OracleResult(NO, None, 0, time.perf_counter() - started)

    adjacency = ug.adjacency()
    anchor = ug.vertices()[0]
    path = [anchor]
    used = {anchor}

    def extend(v: int) -> tuple | None:
        nonlocal expanded
        expanded += 1
        if expanded > budget.max_nodes:
            raise _BudgetExhausted
        if deadline is not None and expanded % 1024 == 0 and time.perf_counter() > deadline:
            raise _BudgetExhausted
        if len(path) == ug.n:
            if anchor in adjacency[v]:
                return tuple(path) + (anchor,)
            return None
        for w in adjacency[v]:
            if w in used:
                continue
            path.append(w)
            used.add(w)
            witness = extend(w)
            if witness is not None:
                return witness
            path.pop()
            used.discard(w)
        return None

    try:
        witness = extend(anchor)
    except _BudgetExhausted:
        return OracleResult(TIMEOUT, None, expanded, time.perf_counter() - started)
    elapsed = time.perf_counter() - started
    if witness is not None:
        return OracleResult(YES, witness, expanded, elapsed)
    return OracleResult(NO, None, expanded, elapsed)
