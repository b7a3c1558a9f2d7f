"""Directed 2-complexes over execution graphs, fairness and depth filtrations."""

from __future__ import annotations

import json
from collections import defaultdict, deque
from dataclasses import dataclass
from typing import NamedTuple

from .semantics import ExecutionGraph, condensation, strongly_connected_components

COMPLEX_SCHEMA = "singulock.complex/1"
POLICIES = ("both", "squares", "triangles", "none")
WEAK, STRONG = "weak", "strong"


class Cell1(NamedTuple):
    id: int
    src: int
    dst: int


@dataclass(frozen=True)
class TwoCell:
    """A filled square ``s->a->t``/``s->b->t`` or triangle ``v0->v1->v2``, ``v0->v2``.

    ``edges`` is ``(e_sa, e_at, e_sb, e_bt)`` for squares and
    ``(e01, e12, e02)`` for triangles.
    """

    kind: str
    vertices: tuple
    edges: tuple

    @property
    def boundary(self):
        if self.kind == "square":
            sa, at, sb, bt = self.edges
            return ((sa, 1), (at, 1), (sb, -1), (bt, -1))
        e01, e12, e02 = self.edges
        return ((e01, 1), (e12, 1), (e02, -1))


@dataclass(frozen=True)
class ExecComplex:
    vertices: tuple  # sorted vertex ids
    edges: tuple  # Cell1, sorted by id
    two_cells: tuple

    @property
    def edge_ids(self):
        return frozenset(e.id for e in self.edges)

    def check(self):
        """Raise ValueError if a cell references a missing face."""
        vs = set(self.vertices)
        byid = {e.id: e for e in self.edges}
        for e in self.edges:
            if e.src not in vs or e.dst not in vs:
                raise ValueError(f"edge {e.id} has an endpoint outside the complex")
        for c in self.two_cells:
            for eid, _ in c.boundary:
                if eid not in byid:
                    raise ValueError(f"two-cell {c} uses missing edge {eid}")
            if c.kind == "square":
                s, a, b, t = c.vertices
                want = [(s, a), (a, t), (s, b), (b, t)]
                if a == b:
                    raise ValueError("square with equal middle vertices")
            else:
                v0, v1, v2 = c.vertices
                want = [(v0, v1), (v1, v2), (v0, v2)]
            got = [(byid[e].src, byid[e].dst) for e in c.edges]
            if got != want:
                raise ValueError(f"two-cell {c} does not match its edges")


def build_complex(graph: ExecutionGraph, policy: str = "both") -> ExecComplex:
    """Lift ``graph`` to a 2-complex.

    Squares fill pairs of interleavings ``s->a->t``, ``s->b->t`` (``a < b``)
    that fire the same two transitions in opposite order with disjoint
    participants. Triangles fill every ``v0->v1->v2`` whose composite edge
    ``v0->v2`` exists, for pairwise distinct vertices.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown two-cell policy {policy!r}")
    edges = graph.edges
    cells = []
    if policy in ("squares", "both"):
        squares = []
        for s in range(graph.num_vertices):
            paths = defaultdict(list)
            for i1 in graph.out_edges[s]:
                e1 = edges[i1]
                for i2 in graph.out_edges[e1.dst]:
                    e2 = edges[i2]
                    if set(e1.label.participants) & set(e2.label.participants):
                        continue
                    paths[(e2.dst, e1.label, e2.label)].append((i1, i2))
            for (t, l1, l2), pairs in paths.items():
                partners = paths.get((t, l2, l1), ())
                for i1, i2 in pairs:
                    a = edges[i1].dst
                    for i3, i4 in partners:
                        b = edges[i3].dst
                        if a < b and len({i1, i2, i3, i4}) == 4:
                            squares.append(TwoCell("square", (s, a, b, t), (i1, i2, i3, i4)))
        squares.sort(key=lambda c: c.edges)
        cells.extend(squares)
    if policy in ("triangles", "both"):
        triangles = []
        for i01, e01 in enumerate(edges):
            s0, s1 = e01.src, e01.dst
            if s0 == s1:
                continue
            for i12 in graph.out_edges[s1]:
                s2 = edges[i12].dst
                if s2 in (s0, s1):
                    continue
                for i02 in graph.out_edges[s0]:
                    if edges[i02].dst == s2:
                        triangles.append(TwoCell("triangle", (s0, s1, s2), (i01, i12, i02)))
        triangles.sort(key=lambda c: c.edges)
        cells.extend(triangles)
    return ExecComplex(
        vertices=tuple(range(graph.num_vertices)),
        edges=tuple(Cell1(i, e.src, e.dst) for i, e in enumerate(edges)),
        two_cells=tuple(cells),
    )


# -- fairness ----------------------------------------------------------------


@dataclass(frozen=True)
class FairnessAnalysis:
    mode: str
    fair_sccs: frozenset
    fair_edges: frozenset
    fair_vertices: frozenset
    recurrent: tuple = ()  # (vertex set, edge set) per accepted fair region


def _internal_edges(graph, verts):
    return [i for v in sorted(verts) for i in graph.out_edges[v] if graph.edges[i].dst in verts]


def _weak_fair(graph, verts, internal):
    if not internal:
        return False
    always = frozenset.intersection(*(graph.enabled[v] for v in verts))
    covered = {p for i in internal for p in graph.edges[i].label.participants}
    return always <= covered


def _strong_regions(graph, verts):
    """Maximal strongly connected subsets of ``verts`` that satisfy strong fairness."""
    found = []
    work = [frozenset(verts)]
    while work:
        region = work.pop()
        internal = _internal_edges(graph, region)
        if not internal:
            continue
        covered = {p for i in internal for p in graph.edges[i].label.participants}
        bad = {p for v in region for p in graph.enabled[v]} - covered
        if not bad:
            found.append((region, frozenset(internal)))
            continue
        keep = {v for v in region if not (graph.enabled[v] & bad)}
        for comp in strongly_connected_components(graph.num_vertices, graph.successors, keep):
            work.append(frozenset(comp))
    found.sort(key=lambda r: min(r[0]))
    return found


def _fair_regions(graph, mode, cond=None):
    cond = cond or condensation(graph)
    fair = set()
    regions = []
    for cid, members in enumerate(cond.members):
        if not cond.has_edge[cid]:
            continue
        verts = frozenset(members)
        if mode == WEAK:
            internal = _internal_edges(graph, verts)
            if _weak_fair(graph, verts, internal):
                fair.add(cid)
                regions.append((verts, frozenset(internal)))
        elif mode == STRONG:
            found = _strong_regions(graph, verts)
            if found:
                fair.add(cid)
                regions.extend(found)
        else:
            raise ValueError(f"unknown fairness mode {mode!r}")
    return frozenset(fair), tuple(regions)


def fair_sccs(graph: ExecutionGraph, mode: str = WEAK) -> frozenset:
    """Ids (in :func:`condensation` numbering) of SCCs admitting a fair run."""
    return _fair_regions(graph, mode)[0]


def fair_edges(graph: ExecutionGraph, mode: str = WEAK, fault_anchors: bool = True) -> FairnessAnalysis:
    """Edges lying on at least one fair maximal path.

    Finite maximal paths are vacuously fair, so vertices without outgoing
    edges anchor fair paths (Fault vertices only when ``fault_anchors``).
    """
    cond = condensation(graph)
    fair, regions = _fair_regions(graph, mode, cond)
    anchors = {
        v
        for v in range(graph.num_vertices)
        if not graph.out_edges[v] and (fault_anchors or not graph.is_fault(v))
    }
    targets = set(anchors)
    for cid in fair:
        targets.update(cond.members[cid])
    good = set(targets)
    queue = deque(sorted(targets))
    while queue:
        v = queue.popleft()
        for u in graph.predecessors[v]:
            if u not in good:
                good.add(u)
                queue.append(u)
    edges = frozenset(i for i, e in enumerate(graph.edges) if e.dst in good)
    verts = set(anchors)
    for i in edges:
        verts.add(graph.edges[i].src)
        verts.add(graph.edges[i].dst)
    return FairnessAnalysis(mode, fair, edges, frozenset(verts), regions)


def fair_subcomplex(complex: ExecComplex, analysis: FairnessAnalysis) -> ExecComplex:
    keep = analysis.fair_edges
    return ExecComplex(
        vertices=tuple(v for v in complex.vertices if v in analysis.fair_vertices),
        edges=tuple(e for e in complex.edges if e.id in keep),
        two_cells=tuple(c for c in complex.two_cells if all(e in keep for e in c.edges)),
    )


def restrict(complex: ExecComplex, vertices=None, edges=None) -> ExecComplex:
    """Subcomplex on the given vertex/edge ids; cells survive when all their edges do."""
    vs = set(complex.vertices) if vertices is None else set(vertices)
    es = {e.id for e in complex.edges} if edges is None else set(edges)
    kept = tuple(e for e in complex.edges if e.id in es and e.src in vs and e.dst in vs)
    kept_ids = {e.id for e in kept}
    return ExecComplex(
        vertices=tuple(v for v in complex.vertices if v in vs),
        edges=kept,
        two_cells=tuple(c for c in complex.two_cells if all(e in kept_ids for e in c.edges)),
    )


# -- filtration --------------------------------------------------------------


def edge_depth(graph: ExecutionGraph, edge_id: int) -> int:
    """Exploration level at which a transition is first fired."""
    return graph.depths[graph.edges[edge_id].src] + 1


def depth_filtration(graph: ExecutionGraph, policy: str = "both", k_max: int | None = None) -> list:
    """Nested complexes ``K_0 <= K_1 <= ... <= K_kmax``.

    ``K_i`` holds the states at BFS depth ``<= i`` and the transitions fired
    from states at depth ``< i``; ``k_max`` defaults to the level at which
    the whole graph is present.
    """
    full = build_complex(graph, policy)
    if k_max is None:
        k_max = max((edge_depth(graph, e.id) for e in full.edges), default=0)
        k_max = max(k_max, max(graph.depths, default=0))
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    out = []
    for i in range(k_max + 1):
        verts = [v for v in full.vertices if graph.depths[v] <= i]
        edges = [e.id for e in full.edges if edge_depth(graph, e.id) <= i]
        out.append(restrict(full, verts, edges))
    return out


# -- export ------------------------------------------------------------------


def complex_to_dict(complex: ExecComplex) -> dict:
    return {
        "schema": COMPLEX_SCHEMA,
        "vertices": list(complex.vertices),
        "edges": [{"id": e.id, "src": e.src, "dst": e.dst} for e in complex.edges],
        "two_cells": [
            {"kind": c.kind, "vertices": list(c.vertices), "boundary": [[e, s] for e, s in c.boundary]}
            for c in complex.two_cells
        ],
    }


def complex_to_json(complex: ExecComplex) -> str:
    return json.dumps(complex_to_dict(complex), indent=2, sort_keys=True) + "\n"


def complex_from_dict(doc: dict) -> ExecComplex:
    if doc.get("schema") != COMPLEX_SCHEMA:
        raise ValueError(f"unsupported complex schema {doc.get('schema')!r}")
    cells = []
    for c in doc["two_cells"]:
        cells.append(TwoCell(c["kind"], tuple(c["vertices"]), tuple(e for e, _ in c["boundary"])))
    return ExecComplex(
        vertices=tuple(doc["vertices"]),
        edges=tuple(Cell1(e["id"], e["src"], e["dst"]) for e in doc["edges"]),
        two_cells=tuple(cells),
    )
