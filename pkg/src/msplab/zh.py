"""Staged fixpoint solver for the multistage simple-path decision problem.

The solver seeds per-edge reachable sets, then sweeps stages 1..L-1: contract
each stage edge's reachable set against the others, contract each stage
vertex's edge set, then re-limit every earlier reachable set through the
stage's contracted edge sets.  Sweeps repeat until no reachable set changes,
and the answer is YES exactly when the sink's edge set, contracted against
the final reachable sets, is nonempty.

Shrunken per-vertex edge sets persist across sweeps (all state is monotone
decreasing, which is what bounds the number of sweeps).  The run is fully
deterministic: edges ascend by id, vertices by (stage, name), and every
fixpoint applies deletions batch-wise per sweep.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Any

from .model import EdgeSet, MultistageGraph, edge_ids, validate
from .operators import OperatorCaches, _tidy_idx, change, init_all

YES = "YES"
NO = "NO"


class InvalidGraphError(ValueError):
    """The input graph fails structural validation."""

    def __init__(self, report):
        self.report = report
        codes = ", ".join(sorted({c for c, _, _ in report.violations}))
        super().__init__(f"invalid multistage graph: {codes}")


class AbnormalTerminationError(RuntimeError):
    """The outer sweep bound was exceeded; reachable sets shrink monotonically,
    so this signals an implementation bug, not a hard instance."""


@dataclass(frozen=True)
class SolveOptions:
    max_sweeps: int | None = None  # None: use the proven monotone bound
    trace: bool = False


@dataclass
class ZhMetrics:
    outer_sweeps: int = 0
    operator_calls: dict[str, int] = field(default_factory=dict)
    edges_deleted: int = 0
    wall_time: float = 0.0


@dataclass
class ZhResult:
    answer: str  # YES | NO
    final_comp_ed: EdgeSet
    metrics: ZhMetrics


@dataclass
class TraceLog:
    """Structured record of every reachable-set delta of a run."""

    events: list[dict[str, Any]] = field(default_factory=list)


def _run(g: MultistageGraph, opts: SolveOptions, trace: TraceLog | None):
    started = time.perf_counter()
    report = validate(g)
    if not report.ok:
        raise InvalidGraphError(report)

    r = init_all(g)
    if trace is not None:
        for eid, mask in enumerate(r.entries):
            trace.events.append({"event": "r_init", "edge": eid, "value": edge_ids(mask)})

    esets = [m if m is not None else 0 for m in g._esets]
    caches = OperatorCaches(g, r, esets)
    stage_limit = g.stage_count  # loop covers stages 1..L-1
    stage_vertices = g._stage_vertices
    stage_end = g._stage_end
    entries = r.entries
    sink_idx = stage_vertices[g.stage_count][0]
    change_calls = 0
    limit_ops = 0
    # limit-step memo: eid -> [entry mask, contracted-set tuple, result]
    limit_memo: dict[int, list] = {}

    sweep_bound = 1 + sum(m.bit_count() for m in entries)
    max_sweeps = opts.max_sweeps if opts.max_sweeps is not None else sweep_bound
    sweeps = 0
    while True:
        sweeps += 1
        if sweeps > max_sweeps:
            raise AbnormalTerminationError(
                f"no fixpoint after {sweeps - 1} sweeps (bound {max_sweeps})"
            )
        version_before = r.version
        for stage in range(1, stage_limit):
            # contract each stage edge's reachable set
            for eid in range(stage_end[stage - 1], stage_end[stage]):
                prev = entries[eid]
                change(r, eid, g, esets, caches)
                change_calls += 1
                if trace is not None and entries[eid] != prev:
                    trace.events.append(
                        {
                            "event": "r_shrink",
                            "sweep": sweeps,
                            "stage": stage,
                            "edge": eid,
                            "removed": edge_ids(prev & ~entries[eid]),
                        }
                    )
            # contract each stage vertex's edge set; shrunken values persist
            for vi in stage_vertices[stage]:
                new = caches.comp_of(vi)
                if new != esets[vi]:
                    if trace is not None:
                        trace.events.append(
                            {
                                "event": "eset_shrink",
                                "sweep": sweeps,
                                "stage": stage,
                                "vertex": g._vnames[vi],
                                "removed": edge_ids(esets[vi] & ~new),
                            }
                        )
                    esets[vi] = new
            # re-limit every reachable set of stage <= current stage
            contracted = tuple(caches.comp_of(vi) for vi in stage_vertices[stage])
            contracted_version = r.version
            for eid in range(stage_end[stage]):
                cur = entries[eid]
                if not cur:
                    continue
                if r.version != contracted_version:
                    contracted = tuple(caches.comp_of(vi) for vi in stage_vertices[stage])
                    contracted_version = r.version
                memo = limit_memo.get((eid, stage))
                if memo is not None and memo[0] == cur and memo[1] == contracted:
                    new = memo[2]
                else:
                    union = 0
                    bi = g._eto[eid]
                    for pos, vi in enumerate(stage_vertices[stage]):
                        union |= _tidy_idx(g, cur & contracted[pos], bi, vi)
                    window = g.span_mask(g._estage[eid] + 1, stage)
                    new = _tidy_idx(g, (cur & ~window) | (union & window), bi, sink_idx)
                    limit_memo[(eid, stage)] = [cur, contracted, new]
                    limit_ops += 1
                if r.set_entry(eid, new) and trace is not None:
                    trace.events.append(
                        {
                            "event": "r_shrink",
                            "sweep": sweeps,
                            "stage": stage,
                            "edge": eid,
                            "removed": edge_ids(cur & ~new),
                        }
                    )
        if r.version == version_before:
            break

    final = caches.comp_of(sink_idx)  # stage-L edge sets are never touched above
    metrics = ZhMetrics(
        outer_sweeps=sweeps,
        operator_calls={
            "init_reachable": g.edge_count,
            "change": change_calls,
            "comp": caches.comp_runs,
            "comp_cache_hits": caches.comp_hits,
            "limit": limit_ops,
        },
        edges_deleted=r.bits_deleted,
        wall_time=time.perf_counter() - started,
    )
    result = ZhResult(answer=YES if final else NO, final_comp_ed=final, metrics=metrics)
    return result, r


def zh_solve(g: MultistageGraph, opts: SolveOptions | None = None) -> ZhResult:
    """Decide simple-path existence; YES iff the final contraction of the
    sink's edge set is nonempty."""
    result, _ = _run(g, opts or SolveOptions(), None)
    return result


def zh_solve_with_state(g: MultistageGraph, opts: SolveOptions | None = None):
    """As :func:`zh_solve` but also returns the final reachable map."""
    return _run(g, opts or SolveOptions(), None)


def zh_trace(g: MultistageGraph, opts: SolveOptions | None = None):
    """As :func:`zh_solve`, also emitting every reachable-set delta."""
    trace = TraceLog()
    result, _ = _run(g, opts or SolveOptions(trace=True), trace)
    return result, trace


def replay_trace(g: MultistageGraph, trace: TraceLog) -> list[EdgeSet]:
    """Reconstruct final reachable sets from a trace's init and deletion events."""
    masks = [0] * g.edge_count
    for ev in trace.events:
        if ev["event"] == "r_init":
            masks[ev["edge"]] = sum(1 << i for i in ev["value"])
        elif ev["event"] == "r_shrink":
            masks[ev["edge"]] &= ~sum(1 << i for i in ev["removed"])
    return masks
