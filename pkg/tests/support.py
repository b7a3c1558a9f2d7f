"""Shared helpers for the test suite."""

import random
from functools import lru_cache

from hypothesis import strategies as st

from singulock import explore
from singulock.corpus import fixture_names, load_fixture
from singulock.semantics import TERMINAL, ExecutionGraph, StateClass
from singulock.topology import Cell1, ExecComplex, TwoCell, restrict

FIXTURES = fixture_names()


@lru_cache(maxsize=None)
def fixture_graph(name):
    program, _ = load_fixture(name)
    return explore(program)


def vertex_of(graph, predicate):
    """The unique vertex satisfying ``predicate(graph, v)``."""
    hits = [v for v in range(graph.num_vertices) if predicate(graph, v)]
    assert len(hits) == 1, hits
    return hits[0]


def hold_and_wait(graph):
    return vertex_of(graph, lambda g, v: not g.out_edges[v] and not g.is_terminal(v))


def random_annotated_graph(rng, max_vertices=40, max_procs=4, extra_enabled=0.3):
    """Sparse random graph with process annotations and spurious enabledness."""
    n = rng.randint(1, max_vertices)
    k = rng.randint(1, max_procs)
    edges = []
    for v in range(n):
        for _ in range(rng.choice([0, 1, 1, 1, 2, 2, 3])):
            size = 2 if k > 1 and rng.random() < 0.25 else 1
            edges.append((v, tuple(sorted(rng.sample(range(1, k + 1), size))), rng.randrange(n)))
    enabled = []
    for v in range(n):
        s = {p for src, parts, _ in edges if src == v for p in parts}
        s |= {p for p in range(1, k + 1) if rng.random() < extra_enabled}
        enabled.append(frozenset(s))
    classes = []
    for v in range(n):
        out = any(src == v for src, _, _ in edges)
        classes.append(StateClass("running") if out or rng.random() < 0.5 else TERMINAL)
    return ExecutionGraph.from_edges(n, edges, classes=classes, enabled=enabled)


@st.composite
def annotated_graphs(draw, max_vertices=20):
    seed = draw(st.integers(0, 2**32 - 1))
    return random_annotated_graph(random.Random(seed), max_vertices=max_vertices)


def random_complex(rng, max_vertices=12):
    """Random DAG-oriented graph with a random subset of its triangles filled."""
    n = rng.randint(1, max_vertices)
    edges = sorted({tuple(sorted(rng.sample(range(n), 2))) for _ in range(rng.randint(0, 3 * n))} if n > 1 else set())
    eid = {e: i for i, e in enumerate(edges)}
    tris = [
        (a, b, c)
        for (a, b) in edges
        for c in range(b + 1, n)
        if (b, c) in eid and (a, c) in eid
    ]
    chosen = [t for t in tris if rng.random() < 0.5]
    cells = tuple(TwoCell("triangle", t, (eid[t[0], t[1]], eid[t[1], t[2]], eid[t[0], t[2]])) for t in chosen)
    return ExecComplex(tuple(range(n)), tuple(Cell1(i, a, b) for (a, b), i in eid.items()), cells)


def random_nested(rng):
    """Random filtration: each cell enters no earlier than its faces."""
    k = random_complex(rng)
    levels = rng.randint(1, 5)
    vb = {v: rng.randrange(levels) for v in k.vertices}
    eb = {e.id: max(vb[e.src], vb[e.dst], rng.randrange(levels)) for e in k.edges}
    steps = []
    for i in range(levels):
        steps.append(restrict(k, [v for v in k.vertices if vb[v] <= i], [e for e in eb if eb[e] <= i]))
    return steps


# PASS/FAIL lines of the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES = []
