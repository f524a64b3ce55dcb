"""The four basic set operators of the staged fixpoint solver.

* ``tidy(es, u, v)`` restricts an edge set to the edges lying on at least one
  u -> v path whose edges all stay inside the set.
* ``init_reachable`` / ``init_all`` seed the per-edge reachable sets: for an
  edge e, the edges of every e.dst -> sink path along which both endpoints of
  each visited edge carry e in their edge sets.
* ``comp`` contracts an edge set against the reachable sets until stable.
* ``change`` contracts one reachable set against all the others until stable.

Two conventions the operator definitions leave open are pinned here:

* In ``comp``, an edge ending exactly at the target vertex passes the
  path-existence test unconditionally (a zero-length path cannot be
  represented as a nonempty edge set); it remains subject to the tidy step.
* In ``change`` on a stage-1 edge there are no earlier-stage edges to anchor
  the keep-guard, so the guard is vacuously satisfied and only the final tidy
  applies.

Deletions inside each fixpoint sweep are collected and applied at sweep end
(ascending edge-id order), so results do not depend on iteration order.  All
operators are pure functions of their inputs.
"""

from __future__ import annotations

from .model import EdgeRef, EdgeSet, MultistageGraph, VertexId, edge_ids


class FixpointOverrunError(RuntimeError):
    """A contraction fixpoint exceeded its proven sweep bound (a bug)."""


def _vertex_index(g: MultistageGraph, v) -> int:
    if isinstance(v, VertexId):
        return g._vindex[v.name]
    return g._vindex[v]


def _forward_reach(g: MultistageGraph, mask: int, ui: int, stop_stage: int):
    """Vertex bitmask reachable from ``ui`` along ``mask`` edges, plus the
    union of out-edge masks of all reached vertices."""
    vstage = g._vstage
    in_mask = g._in_mask
    out_mask = g._out_mask
    stage_vertices = g._stage_vertices
    reach = 1 << ui
    out_acc = out_mask[ui]
    for k in range(vstage[ui] + 1, stop_stage + 1):
        avail = mask & out_acc
        if not avail:
            break
        hit = False
        for wi in stage_vertices[k]:
            if avail & in_mask[wi]:
                reach |= 1 << wi
                out_acc |= out_mask[wi]
                hit = True
        if not hit:
            break
    return reach, out_acc


def _backward_reach(g: MultistageGraph, mask: int, vi: int, stop_stage: int):
    """Vertex bitmask that reaches ``vi`` along ``mask`` edges, plus the
    union of in-edge masks of all such vertices."""
    vstage = g._vstage
    in_mask = g._in_mask
    out_mask = g._out_mask
    stage_vertices = g._stage_vertices
    reach = 1 << vi
    in_acc = in_mask[vi]
    for k in range(vstage[vi] - 1, stop_stage - 1, -1):
        avail = mask & in_acc
        if not avail:
            break
        hit = False
        for wi in stage_vertices[k]:
            if avail & out_mask[wi]:
                reach |= 1 << wi
                in_acc |= in_mask[wi]
                hit = True
        if not hit:
            break
    return reach, in_acc


def _tidy_idx(g: MultistageGraph, es: int, ui: int, vi: int) -> int:
    if not es or ui == vi:
        return 0
    vstage = g._vstage
    su = vstage[ui]
    sv = vstage[vi]
    if su >= sv:
        return 0
    fwd, out_acc = _forward_reach(g, es, ui, sv)
    if not (fwd >> vi) & 1:
        return 0
    _, in_acc = _backward_reach(g, es, vi, su)
    return es & out_acc & in_acc


def _reaches_idx(g: MultistageGraph, es: int, ui: int, vi: int) -> bool:
    if ui == vi:
        return True
    if not es or g._vstage[ui] >= g._vstage[vi]:
        return False
    fwd, _ = _forward_reach(g, es, ui, g._vstage[vi])
    return bool((fwd >> vi) & 1)


def tidy(es: EdgeSet, u, v, g: MultistageGraph) -> EdgeSet:
    """Edges of ``es`` on at least one u -> v path contained in ``es``.

    Returns the empty set when u = v (a zero-length path carries no edges).
    Linear in the number of edges.
    """
    return _tidy_idx(g, es, _vertex_index(g, u), _vertex_index(g, v))


def init_reachable(g: MultistageGraph, e: EdgeRef | int) -> EdgeSet:
    """Initial reachable set of edge ``e``.

    Collects the edges (of stage > 1) whose both endpoints carry ``e`` in
    their edge sets, then tidies from e's head to the sink.
    """
    eid = e.id if isinstance(e, EdgeRef) else e
    ebit = 1 << eid
    esets = g._esets
    efrom = g._efrom
    eto = g._eto
    collected = 0
    for f in range(g._stage_end[1], g.edge_count):
        ma = esets[efrom[f]]
        mb = esets[eto[f]]
        if ma is not None and mb is not None and (ma & mb & ebit):
            collected |= 1 << f
    sink = g._stage_vertices[g.stage_count][0]
    return _tidy_idx(g, collected, eto[eid], sink)


class ReachMap:
    """Mutable map from each edge to its current reachable edge set.

    Entries only ever shrink after initialization.  ``version`` increments on
    every entry change; ``entry_versions`` tracks per-entry change counts so
    callers can cheaply detect staleness.
    """

    __slots__ = ("graph", "entries", "entry_versions", "version", "bits_deleted")

    def __init__(self, graph: MultistageGraph, entries: list[int]):
        self.graph = graph
        self.entries = entries
        self.entry_versions = [0] * len(entries)
        self.version = 0
        self.bits_deleted = 0

    def get(self, e: EdgeRef | int) -> EdgeSet:
        return self.entries[e.id if isinstance(e, EdgeRef) else e]

    def set_entry(self, eid: int, mask: int) -> bool:
        old = self.entries[eid]
        if mask == old:
            return False
        assert mask & ~old == 0, "reachable sets may only shrink"
        self.entries[eid] = mask
        self.entry_versions[eid] += 1
        self.version += 1
        self.bits_deleted += (old & ~mask).bit_count()
        return True

    def as_dict(self) -> dict[EdgeRef, list[int]]:
        return {self.graph.edge(i): edge_ids(m) for i, m in enumerate(self.entries)}

    def copy(self) -> "ReachMap":
        clone = ReachMap(self.graph, list(self.entries))
        clone.entry_versions = list(self.entry_versions)
        clone.version = self.version
        clone.bits_deleted = self.bits_deleted
        return clone


def init_all(g: MultistageGraph) -> ReachMap:
    """Reachable set for every edge (batch form of :func:`init_reachable`)."""
    m = g.edge_count
    esets = g._esets
    efrom = g._efrom
    eto = g._eto
    collected = [0] * m
    for f in range(g._stage_end[1], g.edge_count):
        ma = esets[efrom[f]]
        mb = esets[eto[f]]
        if ma is None or mb is None:
            continue
        both = ma & mb
        fbit = 1 << f
        while both:
            low = both & -both
            collected[low.bit_length() - 1] |= fbit
            both ^= low
    sink = g._stage_vertices[g.stage_count][0]
    entries = [_tidy_idx(g, collected[e], eto[e], sink) for e in range(m)]
    return ReachMap(g, entries)


def comp(
    es: EdgeSet,
    v,
    r: ReachMap,
    g: MultistageGraph,
    scheduling: str = "batch",
) -> EdgeSet:
    """Contract ``es`` against the reachable sets, targeting vertex ``v``.

    Repeats two steps until stable: delete every member edge whose reachable
    set, intersected with the working set and tidied from the edge's head to
    ``v``, witnesses no path to ``v`` (members ending at ``v`` are exempt);
    then tidy the working set from the source to ``v``.

    ``scheduling`` selects the deletion discipline inside a sweep: "batch"
    (default: collect deletions, apply at sweep end), or "inplace" /
    "inplace_desc" (apply immediately while sweeping ascending/descending),
    kept for confluence experiments.
    """
    vi = _vertex_index(g, v)
    src = g._stage_vertices[0][0]
    entries = r.entries
    eto = g._eto
    working = es
    bound = es.bit_count() + 1
    sweeps = 0
    while True:
        sweeps += 1
        if sweeps > bound:
            raise FixpointOverrunError(f"comp exceeded {bound} sweeps")
        before = working
        if scheduling == "batch":
            dels = 0
            m = working
            while m:
                low = m & -m
                eid = low.bit_length() - 1
                m ^= low
                if eto[eid] != vi and not _reaches_idx(g, entries[eid] & working, eto[eid], vi):
                    dels |= low
            working &= ~dels
        else:
            ids = edge_ids(working)
            if scheduling == "inplace_desc":
                ids.reverse()
            for eid in ids:
                low = 1 << eid
                if not (working & low):
                    continue
                if eto[eid] != vi and not _reaches_idx(g, entries[eid] & working, eto[eid], vi):
                    working &= ~low
        working = _tidy_idx(g, working, src, vi)
        if working == before:
            assert working & ~es == 0, "contraction violated"
            return working


def change(
    r: ReachMap,
    e: EdgeRef | int,
    g: MultistageGraph,
    esets: list[int] | None = None,
    caches: "OperatorCaches | None" = None,
) -> EdgeSet:
    """Contract the reachable set of edge ``e`` against all the others.

    For each member edge of the set beyond e's stage, the member is kept only
    if some earlier-stage edge set T anchors it: T holds the edges whose
    reachable sets (cut down to the member's head vertex) witness a path
    carrying both ``e`` and the member, and T, tidied to source -> e.src and
    contracted at e.src, must be nonempty.  After each sweep the set is
    tidied from e's head to the sink.  Repeats until stable and writes the
    result back into ``r``.

    ``esets`` supplies the current per-vertex edge sets by vertex index
    (defaults to the graph's own); ``caches`` shares contraction results
    across calls within one solver run.
    """
    eid = e.id if isinstance(e, EdgeRef) else e
    if esets is None:
        esets = [m if m is not None else 0 for m in g._esets]
    if caches is None:
        caches = OperatorCaches(g, r, esets)
    efrom = g._efrom
    eto = g._eto
    estage = g._estage
    entries = r.entries
    stage = estage[eid]
    ui = efrom[eid]
    vi = eto[eid]
    sink = g._stage_vertices[g.stage_count][0]
    src = g._stage_vertices[0][0]

    cur = entries[eid]
    if stage <= 1:
        r.set_entry(eid, _tidy_idx(g, cur, vi, sink))
        return entries[eid]

    bound = cur.bit_count() + 1
    sweeps = 0
    earlier_lo = 0
    earlier_hi = g._stage_end[stage - 1]  # edge ids with stage < stage
    ebit = 1 << eid
    while True:
        sweeps += 1
        if sweeps > bound:
            raise FixpointOverrunError(f"change exceeded {bound} sweeps")
        before = cur
        cands = cur & g.span_mask(stage + 1, g.stage_count)
        if cands:
            per_b: dict[int, list[int]] = {}
            m = cands
            while m:
                low = m & -m
                kid = low.bit_length() - 1
                m ^= low
                per_b.setdefault(eto[kid], []).append(kid)
            dels = 0
            for bi in sorted(per_b):
                ceb = caches.comp_of(bi)
                anchored = []  # (ec bit, tidied mask) for earlier edges carrying e
                if ceb & ebit:
                    for ec in range(earlier_lo, earlier_hi):
                        if not (entries[ec] & ebit):
                            continue
                        mec = caches.mid_tidy(ec, bi, ceb)
                        if mec & ebit:
                            anchored.append((1 << ec, mec))
                if not anchored:
                    for kid in per_b[bi]:
                        dels |= 1 << kid
                    continue
                for kid in per_b[bi]:
                    kbit = 1 << kid
                    t_mask = 0
                    for ec_bit, mec in anchored:
                        if mec & kbit:
                            t_mask |= ec_bit
                    if not t_mask:
                        dels |= kbit
                        continue
                    guard = caches.comp_value(_tidy_idx(g, t_mask, src, ui), ui)
                    if not guard:
                        dels |= kbit
            cur &= ~dels
        cur = _tidy_idx(g, cur, vi, sink)
        if cur == before:
            return cur
        r.set_entry(eid, cur)


class OperatorCaches:
    """Validated result caches shared across operator calls in one run.

    Contraction results are invalidated by per-entry version counters of the
    reachable map plus the edge-set masks they were computed from, so a cache
    hit is always exact.
    """

    __slots__ = ("graph", "r", "esets", "_comp", "_mid", "comp_runs", "comp_hits")

    def __init__(self, graph: MultistageGraph, r: ReachMap, esets: list[int]):
        self.graph = graph
        self.r = r
        self.esets = esets  # by vertex index; shared, caller-mutated
        # (vi, es) -> [result, r.version snapshot, deps as list of (eid, ver)]
        self._comp: dict[tuple[int, int], list] = {}
        # (ec, bi) -> [tidied mask, entry version of ec, ceb mask]
        self._mid: dict[tuple[int, int], list] = {}
        self.comp_runs = 0
        self.comp_hits = 0

    def comp_value(self, es: int, vi: int) -> int:
        r = self.r
        key = (vi, es)
        hit = self._comp.get(key)
        if hit is not None:
            if hit[1] == r.version:
                self.comp_hits += 1
                return hit[0]
            versions = r.entry_versions
            for eid, ver in hit[2]:
                if versions[eid] != ver:
                    break
            else:
                hit[1] = r.version
                self.comp_hits += 1
                return hit[0]
        result = comp(es, self.graph._vnames[vi], r, self.graph)
        self.comp_runs += 1
        versions = r.entry_versions
        deps = [(eid, versions[eid]) for eid in edge_ids(es)]
        self._comp[key] = [result, r.version, deps]
        return result

    def comp_of(self, vi: int) -> int:
        return self.comp_value(self.esets[vi], vi)

    def mid_tidy(self, ec: int, bi: int, ceb: int) -> int:
        """tidy(R(ec) & ceb, head(ec), bi), cached."""
        r = self.r
        key = (ec, bi)
        hit = self._mid.get(key)
        ver = r.entry_versions[ec]
        if hit is not None and hit[1] == ver and hit[2] == ceb:
            return hit[0]
        g = self.graph
        result = _tidy_idx(g, r.entries[ec] & ceb, g._eto[ec], bi)
        self._mid[key] = [result, ver, ceb]
        return result
