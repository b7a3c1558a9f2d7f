"""Deadlock attractors, basins, persistent reachability and livelock detection."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from math import gcd

from .homology import (
    CycleWalk,
    HomologyResult,
    boundary_matrices,
    cycle_basis,
    generator_cycles,
    homology_h1,
)
from .semantics import BoundRefusal, Edge, ExecutionGraph, Condensation, condensation, _bfs_depths
from .topology import WEAK, ExecComplex, build_complex, fair_edges, fair_subcomplex, restrict

STUCK, DIVERGENT = "stuck", "divergent"


@dataclass(frozen=True)
class TrapRegion:
    vertices: frozenset
    internal_edges: int
    kind: str

    @property
    def anchor(self):
        return min(self.vertices)


def trap_regions(graph: ExecutionGraph, cond: Condensation | None = None) -> list:
    """Sink SCCs of the condensation, ordered by their smallest vertex."""
    cond = cond or condensation(graph)
    traps = []
    for cid in cond.sinks():
        verts = frozenset(cond.members[cid])
        internal = sum(1 for v in verts for i in graph.out_edges[v] if graph.edges[i].dst in verts)
        traps.append(TrapRegion(verts, internal, DIVERGENT if internal else STUCK))
    traps.sort(key=lambda t: t.anchor)
    return traps


@dataclass(frozen=True)
class Attractor:
    trap: TrapRegion
    basin: frozenset
    contains_fault: bool
    fair: bool = False  # divergent trap admitting a fair run
    frontier: bool = False  # contains a state a bound left unexpanded

    @property
    def is_deadlock(self):
        """A genuine deadlock: not a modelling fault, not a truncation artefact,
        and either stuck or divergent without any fair run."""
        if self.contains_fault or self.frontier:
            return False
        return self.trap.kind == STUCK or not self.fair


@dataclass(frozen=True)
class DeadlockReport:
    attractors: tuple

    @property
    def deadlocks(self):
        return tuple(a for a in self.attractors if a.is_deadlock)

    @property
    def fault_traps(self):
        return tuple(a for a in self.attractors if a.contains_fault)

    @property
    def divergent(self):
        return tuple(a for a in self.attractors if a.trap.kind == DIVERGENT and not a.contains_fault)


def basin_of(graph: ExecutionGraph, trap: TrapRegion) -> frozenset:
    """Vertices all of whose maximal paths are absorbed into ``trap``."""
    inside = set(trap.vertices)
    pending = [len(s) for s in graph.successors]
    for v in trap.vertices:
        pending[v] = 0
    queue = deque(sorted(inside))
    while queue:
        w = queue.popleft()
        for u in graph.predecessors[w]:
            if u in inside:
                continue
            pending[u] -= 1
            if pending[u] == 0:
                inside.add(u)
                queue.append(u)
    return frozenset(inside)


def deadlock_attractors(graph: ExecutionGraph, mode: str = WEAK) -> DeadlockReport:
    from .topology import fair_sccs

    cond = condensation(graph)
    fair = fair_sccs(graph, mode)
    out = []
    for trap in trap_regions(graph, cond):
        if any(graph.is_terminal(v) for v in trap.vertices):
            continue
        out.append(
            Attractor(
                trap=trap,
                basin=basin_of(graph, trap),
                contains_fault=any(graph.is_fault(v) for v in trap.vertices),
                fair=cond.scc_of[trap.anchor] in fair,
                frontier=not all(graph.expanded[v] for v in trap.vertices),
            )
        )
    return DeadlockReport(tuple(out))


def persistent_reach(graph: ExecutionGraph, v: int, cond: Condensation | None = None) -> frozenset:
    """Intersection of the reach sets of every state reachable from ``v``.

    Equals the unique sink SCC reachable from ``v``, or the empty set when
    several sinks are reachable.
    """
    cond = cond or condensation(graph)
    succ = {}
    for a, b in cond.dag:
        succ.setdefault(a, []).append(b)
    start = cond.scc_of[v]
    seen = {start}
    stack = [start]
    sinks = []
    while stack:
        c = stack.pop()
        nxt = succ.get(c, ())
        if not nxt:
            sinks.append(c)
        for d in nxt:
            if d not in seen:
                seen.add(d)
                stack.append(d)
    if len(sinks) != 1:
        return frozenset()
    return frozenset(cond.members[sinks[0]])


def deadlock_check(graph: ExecutionGraph, v: int, cond: Condensation | None = None):
    """The trap persistently reached from ``v`` if it holds no terminal state."""
    cond = cond or condensation(graph)
    r = persistent_reach(graph, v, cond)
    if not r or any(graph.is_terminal(u) for u in r):
        return None
    for trap in trap_regions(graph, cond):
        if trap.vertices == r:
            return trap
    return None


# -- livelocks ---------------------------------------------------------------


class _Echelon:
    """Exact integer row echelon basis used for incremental rank tests."""

    def __init__(self):
        self.rows = {}  # pivot key -> vector

    def add(self, vec) -> bool:
        v = {k: c for k, c in vec.items() if c}
        while v:
            piv = max(v)
            base = self.rows.get(piv)
            if base is None:
                g = 0
                for c in v.values():
                    g = gcd(g, c)
                self.rows[piv] = {k: c // g for k, c in v.items()}
                return True
            a, b = base[piv], v[piv]
            keys = set(v) | set(base)
            v = {k: a * v.get(k, 0) - b * base.get(k, 0) for k in keys}
            v = {k: c for k, c in v.items() if c}
            g = 0
            for c in v.values():
                g = gcd(g, c)
            if g > 1:
                v = {k: c // g for k, c in v.items()}
        return False


def _simple_directed_cycles(graph: ExecutionGraph, verts, edge_ids, cap):
    """Simple directed cycles (as edge id tuples) inside an edge set, up to ``cap``."""
    out_of = {}
    for i in sorted(edge_ids):
        out_of.setdefault(graph.edges[i].src, []).append(i)
    found = []
    for start in sorted(verts):
        stack = [(start, iter(out_of.get(start, ())))]
        path = []
        on_path = {start}
        while stack:
            v, it = stack[-1]
            i = next(it, None)
            if i is None:
                stack.pop()
                if path:
                    on_path.discard(v)
                    path.pop()
                continue
            w = graph.edges[i].dst
            if w == start:
                found.append(tuple(path + [i]))
                if len(found) >= cap:
                    return found
            elif w > start and w not in on_path:
                on_path.add(w)
                path.append(i)
                stack.append((w, iter(out_of.get(w, ()))))
    return found


@dataclass(frozen=True)
class LivelockReport:
    fair_h1: HomologyResult
    livelock_rank: int  # independent fair directed cycles that survive in fair H1
    witnesses: tuple  # CycleWalk, directed
    generators: tuple  # CycleWalk rendering of every fair H1 generator
    regions: tuple  # vertex sets of the fair recurrent regions
    benign_caveat: bool = True

    @property
    def livelock_present(self):
        return self.livelock_rank > 0

    @property
    def undirected_classes(self):
        """Fair H1 rank not accounted for by fair directed cycles."""
        return self.fair_h1.betti - self.livelock_rank


def detect_livelocks(graph: ExecutionGraph, policy: str = "both", mode: str = WEAK, complex: ExecComplex | None = None, cycle_cap: int = 5000) -> LivelockReport:
    """Fair H1 and the part of it carried by fair directed cycles.

    The livelock rank counts fair recurrent cycles (loops a fair scheduler
    can repeat forever) that are non-zero in fair H1; directed witness walks
    are chosen greedily from the simple cycles of those regions.
    """
    K = complex if complex is not None else build_complex(graph, policy)
    analysis = fair_edges(graph, mode)
    F = fair_subcomplex(K, analysis)
    h = homology_h1(F)
    _, d2 = boundary_matrices(F)
    cols = {}
    for (r, c), v in d2.entries.items():
        cols.setdefault(c, {})[F.edges[r].id] = v

    def seeded():
        ech = _Echelon()
        for c in sorted(cols):
            ech.add(cols[c])
        return ech

    rec_edges = set()
    rec_verts = set()
    for verts, internal in analysis.recurrent:
        rec_edges.update(internal)
        rec_verts.update(verts)
    rec_edges &= F.edge_ids
    ech = seeded()
    rank = 0
    for _, chain in cycle_basis(restrict(F, rec_verts, rec_edges)):
        if ech.add(chain):
            rank += 1

    witnesses = []
    if rank:
        ech = seeded()
        for cyc in _simple_directed_cycles(graph, rec_verts, rec_edges, cycle_cap):
            chain = {}
            for i in cyc:
                chain[i] = chain.get(i, 0) + 1
            if ech.add(chain):
                witnesses.append(CycleWalk(cyc, True))
                if len(witnesses) == rank:
                    break
    regions = tuple(sorted((tuple(sorted(v)) for v, _ in analysis.recurrent)))
    return LivelockReport(
        fair_h1=h,
        livelock_rank=rank,
        witnesses=tuple(witnesses),
        generators=tuple(generator_cycles(F, h)),
        regions=regions,
    )


# -- bounded future classes --------------------------------------------------


@dataclass(frozen=True)
class FutureClasses:
    origin: int
    depth: int
    count: int
    representatives: tuple  # one walk (edge id tuple) per class, sorted
    endpoints: frozenset
    collapse: bool  # single class whose endpoints lie in one trap region
    trap: TrapRegion | None = None
    deadlock_collapse: bool = False  # collapse into a trap without terminal states


def bounded_walks(graph: ExecutionGraph, origin: int, depth: int, cap: int = 100_000) -> list:
    """Walks from ``origin`` of length <= ``depth`` that cannot be extended within the bound."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    walks = []
    stack = [(origin, ())]
    while stack:
        v, walk = stack.pop()
        if len(walk) < depth and not graph.expanded[v]:
            raise BoundRefusal(f"walks from {origin} leave the explored region before depth {depth}")
        outs = graph.out_edges[v]
        if len(walk) == depth or not outs:
            walks.append(walk)
            if len(walks) > cap:
                raise BoundRefusal(f"more than {cap} walks from {origin} at depth {depth}")
            continue
        for i in reversed(outs):
            stack.append((graph.edges[i].dst, walk + (i,)))
    walks.sort()
    return walks


def _flip_rules(complex: ExecComplex):
    rules = {}
    for c in complex.two_cells:
        if c.kind == "square":
            sa, at, sb, bt = c.edges
            rules.setdefault((sa, at), []).append((sb, bt))
            rules.setdefault((sb, bt), []).append((sa, at))
        else:
            e01, e12, e02 = c.edges
            rules.setdefault((e01, e12), []).append((e02,))
            rules.setdefault((e02,), []).append((e01, e12))
    return rules


def future_classes_bounded(graph: ExecutionGraph, complex: ExecComplex, origin: int, depth: int, cap: int = 100_000) -> FutureClasses:
    walks = bounded_walks(graph, origin, depth, cap)
    pool = set(walks)
    rules = _flip_rules(complex)
    cls = {}
    reps = []
    for w in walks:
        if w in cls:
            continue
        cid = len(reps)
        reps.append(w)
        cls[w] = cid
        queue = deque([w])
        while queue:
            cur = queue.popleft()
            for i in range(len(cur)):
                for width in (1, 2):
                    for repl in rules.get(cur[i : i + width], ()):
                        nxt = cur[:i] + repl + cur[i + width :]
                        if nxt in pool and nxt not in cls:
                            cls[nxt] = cid
                            queue.append(nxt)
    ends = frozenset(graph.edges[w[-1]].dst if w else origin for w in walks)
    trap = None
    collapse = False
    if len(reps) == 1:
        for t in trap_regions(graph):
            if ends <= t.vertices:
                trap, collapse = t, True
                break
    dead = trap is not None and not any(graph.is_terminal(v) for v in trap.vertices)
    return FutureClasses(origin, depth, len(reps), tuple(reps), ends, collapse, trap, dead)


# -- severity ----------------------------------------------------------------


@dataclass(frozen=True)
class SeverityMetrics:
    basin_fractions: tuple  # ((attractor anchor vertex, fraction), ...)
    fair_betti: int
    fair_torsion: tuple
    livelock_rank: int

    @property
    def empty(self):
        return not self.basin_fractions and not self.fair_betti and not self.fair_torsion


def severity(deadlocks: DeadlockReport, livelocks: LivelockReport, graph: ExecutionGraph) -> SeverityMetrics:
    n = graph.num_vertices
    fractions = tuple((a.trap.anchor, len(a.basin) / n) for a in deadlocks.attractors)
    return SeverityMetrics(fractions, livelocks.fair_h1.betti, livelocks.fair_h1.torsion, livelocks.livelock_rank)


# -- bisimulation ------------------------------------------------------------


def _observation(graph: ExecutionGraph, v: int, observe: str):
    cls = graph.classes[v]
    if observe == "labels" or not graph.states:
        return (cls.kind, cls.reason)
    s = graph.states[v]
    return (cls.kind, cls.reason, s.channels, s.locks)


def bisim_minimize(graph: ExecutionGraph, observe: str = "memory") -> ExecutionGraph:
    """Quotient by strong bisimulation over edge labels (tau observable).

    ``observe="memory"`` starts refinement from states grouped by class,
    channel contents and lock owners; ``observe="labels"`` by class only.
    """
    if observe not in ("memory", "labels"):
        raise ValueError(f"unknown observation {observe!r}")
    n = graph.num_vertices
    block = _renumber([_observation(graph, v, observe) for v in range(n)])
    while True:
        sigs = []
        for v in range(n):
            moves = sorted({(graph.edges[i].label.participants, graph.edges[i].label.description, block[graph.edges[i].dst]) for i in graph.out_edges[v]})
            sigs.append((block[v], tuple(moves)))
        new = _renumber(sigs)
        if max(new, default=-1) == max(block, default=-1):
            block = new
            break
        block = new
    # number blocks by their smallest member so the root block is 0
    first = {}
    for v in range(n):
        first.setdefault(block[v], v)
    order = sorted(first, key=first.get)
    ren = {b: i for i, b in enumerate(order)}
    qb = [ren[block[v]] for v in range(n)]
    reps = [first[b] for b in order]
    edges = []
    seen = set()
    for e in graph.edges:
        key = (qb[e.src], e.label, qb[e.dst])
        if key not in seen:
            seen.add(key)
            edges.append(Edge(*key))
    edges.sort(key=lambda e: (e.src, e.label.participants, e.label.description, e.dst))
    m = len(reps)
    enabled = [set() for _ in range(m)]
    for e in edges:
        enabled[e.src].update(e.label.participants)
    expanded = [True] * m
    for v in range(n):
        if not graph.expanded[v]:
            expanded[qb[v]] = False
    return ExecutionGraph(
        num_vertices=m,
        edges=tuple(edges),
        classes=tuple(graph.classes[r] for r in reps),
        depths=_bfs_depths(m, edges, qb[graph.root]),
        enabled=tuple(frozenset(s) for s in enabled),
        expanded=tuple(expanded),
        states=tuple(graph.states[r] for r in reps) if graph.states else (),
        keys=tuple(graph.keys[r] for r in reps) if graph.keys else (),
        truncated=graph.truncated,
        root=qb[graph.root],
    )


def _renumber(items):
    ids = {}
    return [ids.setdefault(x, len(ids)) for x in items]
