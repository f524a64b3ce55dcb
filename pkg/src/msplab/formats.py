"""Plain-text instance and graph formats.

Instance documents are line oriented::

    # comment
    msp 1
    stages 3
    vertex S 0
    vertex a 1
    edge 0 S a 1
    eset a 0 2 5

Canonical form sorts vertices by (stage, name), edges by id (ids are dense in
(stage, source, target) order), eset members ascending, one eset line per
non-source vertex.  ``serialize(parse(doc))`` is the canonical form of any
valid document, and two structurally equal graphs serialize to identical
bytes.

Undirected graphs are one ``u v`` edge per line with positive integer
vertices, plus an optional ``vertices N`` header so isolated vertices
survive a round trip.
"""

from __future__ import annotations

from .model import GraphStructureError, MultistageGraph, edge_ids
from .reduction import UndirectedGraph


class InstanceParseError(ValueError):
    def __init__(self, code: str, message: str, line: int | None = None, column: int | None = None):
        self.code = code
        self.line = line
        self.column = column
        where = "" if line is None else f" (line {line}" + (
            f", column {column})" if column is not None else ")"
        )
        super().__init__(f"{code}: {message}{where}")


def _tokenize(text: str):
    """Yield (line number, column of first token, tokens) for meaningful lines."""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        stripped = line.strip()
        if not stripped:
            continue
        yield lineno, line.index(stripped[0]) + 1, stripped.split()


def _int_field(token: str, what: str, lineno: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise InstanceParseError("E_BAD_INT", f"{what} must be an integer, got {token!r}", lineno) from None


def parse_instance(text: str) -> MultistageGraph:
    """Strict parse of an instance document.

    Syntax problems raise :class:`InstanceParseError` with a code and line;
    structural questions beyond representability (multiple sources, stage
    skew, missing edge sets) are left to ``validate``.
    """
    lines = list(_tokenize(text))
    if not lines:
        raise InstanceParseError("E_EMPTY", "no content")
    lineno, col, tokens = lines[0]
    if tokens != ["msp", "1"]:
        raise InstanceParseError("E_BAD_HEADER", "first directive must be 'msp 1'", lineno, col)

    stages: int | None = None
    vertices: list[tuple[str, int]] = []
    seen_vertices: dict[str, int] = {}
    edges_by_fileid: dict[int, tuple[str, str, int]] = {}
    eset_lines: list[tuple[int, str, list[int]]] = []
    seen_esets: set[str] = set()

    for lineno, col, tokens in lines[1:]:
        directive, args = tokens[0], tokens[1:]
        if directive == "stages":
            if stages is not None:
                raise InstanceParseError("E_DUPLICATE_STAGES", "stages given twice", lineno)
            if len(args) != 1:
                raise InstanceParseError("E_SYNTAX", "stages takes one argument", lineno)
            stages = _int_field(args[0], "stage count", lineno)
        elif directive == "vertex":
            if len(args) != 2:
                raise InstanceParseError("E_SYNTAX", "vertex takes NAME STAGE", lineno)
            name, stage = args[0], _int_field(args[1], "vertex stage", lineno)
            if name in seen_vertices:
                raise InstanceParseError("E_DUPLICATE_VERTEX", f"vertex {name!r} declared twice", lineno)
            seen_vertices[name] = stage
            vertices.append((name, stage))
        elif directive == "edge":
            if len(args) != 4:
                raise InstanceParseError("E_SYNTAX", "edge takes ID FROM TO STAGE", lineno)
            fileid = _int_field(args[0], "edge id", lineno)
            if fileid in edges_by_fileid:
                raise InstanceParseError("E_DUPLICATE_EDGE", f"edge id {fileid} declared twice", lineno)
            stage = _int_field(args[3], "edge stage", lineno)
            edges_by_fileid[fileid] = (args[1], args[2], stage)
        elif directive == "eset":
            if not args:
                raise InstanceParseError("E_SYNTAX", "eset takes VERTEX [ID...]", lineno)
            if args[0] in seen_esets:
                raise InstanceParseError("E_DUPLICATE_ESET", f"eset for {args[0]!r} given twice", lineno)
            seen_esets.add(args[0])
            members = [_int_field(t, "edge id", lineno) for t in args[1:]]
            eset_lines.append((lineno, args[0], members))
        else:
            raise InstanceParseError("E_SYNTAX", f"unknown directive {directive!r}", lineno, col)

    if stages is None:
        raise InstanceParseError("E_MISSING_STAGES", "no stages directive")

    esets: dict[str, list[tuple[str, str, int]]] = {}
    for lineno, vname, members in eset_lines:
        if vname not in seen_vertices:
            raise InstanceParseError("E_UNKNOWN_VERTEX", f"eset for undeclared vertex {vname!r}", lineno)
        triples = []
        for fileid in members:
            if fileid not in edges_by_fileid:
                raise InstanceParseError("E_UNKNOWN_EDGE", f"eset references unknown edge id {fileid}", lineno)
            triples.append(edges_by_fileid[fileid])
        esets[vname] = triples

    try:
        return MultistageGraph(stages, vertices, edges_by_fileid.values(), esets)
    except GraphStructureError as exc:
        raise InstanceParseError("E_STRUCTURE", str(exc)) from exc


def serialize_instance(g: MultistageGraph) -> str:
    """Canonical document for a graph (requires token-safe vertex names)."""
    for name in g.vertex_names():
        if not name or any(ch.isspace() for ch in name) or "#" in name:
            raise ValueError(f"vertex name {name!r} cannot be serialized")
    out = ["msp 1", f"stages {g.stage_count}"]
    for stage in range(g.stage_count + 1):
        for name in g.stage_vertex_names(stage):
            out.append(f"vertex {name} {stage}")
    for eid in range(g.edge_count):
        src, dst, stage = g.edge_triple(eid)
        out.append(f"edge {eid} {src} {dst} {stage}")
    for stage in range(g.stage_count + 1):
        for name in g.stage_vertex_names(stage):
            if g.has_eset(name):
                members = " ".join(str(i) for i in edge_ids(g.eset(name)))
                out.append(f"eset {name} {members}".rstrip())
    return "\n".join(out) + "\n"


def parse_ugraph(text: str) -> UndirectedGraph:
    """Parse the undirected edge-list format."""
    declared_n = 0
    pairs: list[tuple[int, int]] = []
    max_seen = 0
    for lineno, col, tokens in _tokenize(text):
        if tokens[0] == "vertices":
            if len(tokens) != 2:
                raise InstanceParseError("E_SYNTAX", "vertices takes one count", lineno)
            declared_n = _int_field(tokens[1], "vertex count", lineno)
            continue
        if len(tokens) != 2:
            raise InstanceParseError("E_SYNTAX", "expected 'u v' edge line", lineno, col)
        u = _int_field(tokens[0], "vertex", lineno)
        v = _int_field(tokens[1], "vertex", lineno)
        if u < 1 or v < 1:
            raise InstanceParseError("E_BAD_VERTEX", "vertices are positive integers", lineno)
        if u == v:
            raise InstanceParseError("E_SELF_LOOP", f"self-loop at {u}", lineno)
        pairs.append((min(u, v), max(u, v)))
        max_seen = max(max_seen, u, v)
    n = max(declared_n, max_seen)
    if n == 0:
        raise InstanceParseError("E_EMPTY", "no content")
    return UndirectedGraph.from_pairs(n, pairs)


def serialize_ugraph(ug: UndirectedGraph) -> str:
    out = [f"vertices {ug.n}"]
    out.extend(f"{u} {v}" for u, v in sorted(ug.edges))
    return "\n".join(out) + "\n"
