"""Labelled transition semantics and reachable execution graphs.

A global state is the tuple (processes, store, channels, locks). Processes
keep recursive calls folded (``Call("X")``) so that returning to a
definition revisits the same state; calls are unfolded only to find the
next action. A ``Par`` reached as a continuation splits the process: the
first component keeps the parent's pid, the others receive
``max(pid) + 1, max(pid) + 2, ...`` in left-to-right order.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

from .calculus import (
    Acquire,
    Call,
    Choice,
    Par,
    Prefix,
    Program,
    Receive,
    Release,
    Send,
    Skip,
    Tau,
    Term,
    format_term,
)

GRAPH_SCHEMA = "singulock.graph/1"


@dataclass(frozen=True)
class GlobalState:
    processes: tuple  # ((pid, term), ...) ordered by pid
    store: tuple = ()  # ((var, value), ...) sorted
    channels: tuple = ()  # ((name, (v1, v2, ...)), ...) sorted
    locks: tuple = ()  # ((resource, owner pid or None), ...) sorted
    fault: str | None = None

    @property
    def pids(self):
        return tuple(p for p, _ in self.processes)

    def fifo(self, channel):
        return dict(self.channels)[channel]

    def owner(self, resource):
        return dict(self.locks)[resource]


@dataclass(frozen=True)
class Label:
    participants: tuple  # sorted pids
    description: str

    def __str__(self):
        return f"{self.description}@{','.join(map(str, self.participants))}"


@dataclass(frozen=True)
class StateClass:
    kind: str  # "terminal" | "running" | "fault"
    reason: str | None = None

    def __str__(self):
        return f"fault({self.reason})" if self.kind == "fault" else self.kind


TERMINAL = StateClass("terminal")
RUNNING = StateClass("running")


class Edge(NamedTuple):
    src: int
    label: Label
    dst: int


# -- term helpers ------------------------------------------------------------


def _head(program: Program, term: Term) -> Term:
    while isinstance(term, Call):
        term = program.definitions[term.name]
    return term


def _flatten(program: Program, term: Term) -> list:
    """Split a continuation into its parallel components."""
    resolved = _head(program, term)
    if isinstance(resolved, Par):
        return _flatten(program, resolved.left) + _flatten(program, resolved.right)
    if isinstance(resolved, Skip):
        return [Skip()]
    return [term]


def initial_state(program: Program) -> GlobalState:
    comps = _flatten(program, program.main)
    return GlobalState(
        processes=tuple((i + 1, t) for i, t in enumerate(comps)),
        store=(),
        channels=tuple((c, ()) for c in sorted(program.channels)),
        locks=tuple((r, None) for r in sorted(program.resources)),
    )


class _Builder:
    """Mutable scratch copy of a state used while firing one transition."""

    def __init__(self, state: GlobalState):
        self.procs = dict(state.processes)
        self.store = dict(state.store)
        self.channels = dict(state.channels)
        self.locks = dict(state.locks)
        self.next_pid = max(self.procs, default=0) + 1

    def advance(self, program, pid, continuation):
        comps = _flatten(program, continuation)
        self.procs[pid] = comps[0]
        for extra in comps[1:]:
            self.procs[self.next_pid] = extra
            self.next_pid += 1

    def freeze(self, fault=None) -> GlobalState:
        return GlobalState(
            processes=tuple(sorted(self.procs.items())),
            store=tuple(sorted(self.store.items())),
            channels=tuple(sorted(self.channels.items())),
            locks=tuple(sorted(self.locks.items())),
            fault=fault,
        )


def step(program: Program, state: GlobalState) -> list:
    """All (Label, successor) pairs of ``state``, in deterministic order."""
    if state.fault is not None:
        return []
    heads = [(pid, _head(program, t)) for pid, t in state.processes]
    locks = dict(state.locks)
    chans = dict(state.channels)
    out = {}

    def emit(label, succ):
        out.setdefault((label, succ), None)

    for pid, h in heads:
        if isinstance(h, Choice):
            for branch in (h.left, h.right):
                b = _Builder(state)
                b.advance(program, pid, branch)
                emit(Label((pid,), "tau"), b.freeze())
            continue
        if not isinstance(h, Prefix):
            continue
        a = h.action
        if isinstance(a, Tau):
            b = _Builder(state)
            b.advance(program, pid, h.body)
            emit(Label((pid,), "tau"), b.freeze())
        elif isinstance(a, Acquire):
            if locks[a.resource] is None:
                b = _Builder(state)
                b.locks[a.resource] = pid
                b.advance(program, pid, h.body)
                emit(Label((pid,), f"acq({a.resource})"), b.freeze())
        elif isinstance(a, Release):
            b = _Builder(state)
            if locks[a.resource] == pid:
                b.locks[a.resource] = None
                b.advance(program, pid, h.body)
                emit(Label((pid,), f"rel({a.resource})"), b.freeze())
            else:
                del b.procs[pid]
                emit(Label((pid,), f"bad-release({a.resource})"), b.freeze(fault="bad-release"))
        elif isinstance(a, Send):
            cap = program.channels[a.channel]
            if cap == 0:
                for pid2, h2 in heads:
                    if (
                        pid2 != pid
                        and isinstance(h2, Prefix)
                        and isinstance(h2.action, Receive)
                        and h2.action.channel == a.channel
                    ):
                        b = _Builder(state)
                        b.store[h2.action.var] = a.value
                        b.advance(program, pid, h.body)
                        b.advance(program, pid2, h2.body)
                        emit(Label(tuple(sorted((pid, pid2))), f"sync({a.channel},{a.value})"), b.freeze())
            elif len(chans[a.channel]) < cap:
                b = _Builder(state)
                b.channels[a.channel] = chans[a.channel] + (a.value,)
                b.advance(program, pid, h.body)
                emit(Label((pid,), f"put({a.channel},{a.value})"), b.freeze())
        elif isinstance(a, Receive):
            fifo = chans[a.channel]
            if program.channels[a.channel] > 0 and fifo:
                b = _Builder(state)
                b.channels[a.channel] = fifo[1:]
                b.store[a.var] = fifo[0]
                b.advance(program, pid, h.body)
                emit(Label((pid,), f"get({a.channel},{fifo[0]}->{a.var})"), b.freeze())
    return list(out)


def classify_state(program: Program, state: GlobalState) -> StateClass:
    if state.fault is not None:
        return StateClass("fault", state.fault)
    if all(isinstance(t, Skip) for _, t in state.processes):
        return TERMINAL
    return RUNNING


def canonical_key(state: GlobalState, include_store: bool = True) -> bytes:
    """Deterministic byte encoding of a state.

    Encoding: compact JSON array ``[processes, store, channels, locks, fault]``
    with processes in pid order, terms rendered by ``format_term`` and every
    map sorted by name. With ``include_store=False`` the store slot is empty.
    """
    doc = [
        [[pid, format_term(t)] for pid, t in state.processes],
        [list(kv) for kv in state.store] if include_store else [],
        [[c, list(q)] for c, q in state.channels],
        [[r, o] for r, o in state.locks],
        state.fault,
    ]
    return json.dumps(doc, separators=(",", ":"), ensure_ascii=True).encode("ascii")


class BoundRefusal(RuntimeError):
    """Raised when a question cannot be answered within the configured bounds."""


# -- execution graph ---------------------------------------------------------


@dataclass
class ExecutionGraph:
    """Reachable states in BFS discovery order; vertex 0 is the initial state.

    ``enabled[v]`` is the set of pids taking part in some transition of
    ``v``; ``expanded[v]`` is False when a bound stopped the expansion of
    ``v``. Synthetic graphs (tests) may leave ``states`` empty.
    """

    num_vertices: int
    edges: tuple
    classes: tuple
    depths: tuple
    enabled: tuple
    expanded: tuple = None
    states: tuple = ()
    keys: tuple = ()
    truncated: bool = False
    root: int = 0

    def __post_init__(self):
        if self.expanded is None:
            self.expanded = (True,) * self.num_vertices

    @classmethod
    def from_edges(cls, n, edges, classes=None, enabled=None, root=0):
        """Build a synthetic graph from ``(src, participants, dst)`` triples.

        Descriptions default to ``e<index>``; enabled sets default to the
        participants of outgoing edges.
        """
        es = []
        for i, e in enumerate(edges):
            if len(e) == 4:
                src, parts, desc, dst = e
            else:
                (src, parts, dst), desc = e, f"e{i}"
            es.append(Edge(src, Label(tuple(sorted(parts)), desc), dst))
        if enabled is None:
            en = [set() for _ in range(n)]
            for e in es:
                en[e.src].update(e.label.participants)
            enabled = [frozenset(s) for s in en]
        classes = tuple(classes) if classes is not None else (RUNNING,) * n
        depths = _bfs_depths(n, es, root)
        return cls(n, tuple(es), classes, depths, tuple(frozenset(s) for s in enabled), root=root)

    @cached_property
    def out_edges(self):
        out = [[] for _ in range(self.num_vertices)]
        for i, e in enumerate(self.edges):
            out[e.src].append(i)
        return tuple(tuple(x) for x in out)

    @cached_property
    def successors(self):
        return tuple(tuple(dict.fromkeys(self.edges[i].dst for i in ids)) for ids in self.out_edges)

    @cached_property
    def predecessors(self):
        pred = [[] for _ in range(self.num_vertices)]
        for e in self.edges:
            pred[e.dst].append(e.src)
        return tuple(tuple(dict.fromkeys(p)) for p in pred)

    def enabled_vector(self, v):
        """Per-process enabledness aligned with the processes of state ``v``."""
        return tuple(pid in self.enabled[v] for pid in self.states[v].pids)

    def is_terminal(self, v):
        return self.classes[v].kind == "terminal"

    def is_fault(self, v):
        return self.classes[v].kind == "fault"


def _bfs_depths(n, edges, root):
    adj = [[] for _ in range(n)]
    for e in edges:
        adj[e.src].append(e.dst)
    depth = [-1] * n
    if n:
        depth[root] = 0
        q = deque([root])
        while q:
            u = q.popleft()
            for w in adj[u]:
                if depth[w] < 0:
                    depth[w] = depth[u] + 1
                    q.append(w)
    return tuple(depth)


def explore(program: Program, max_states: int = 100_000, max_depth: int = 10_000, observe_store: bool = False) -> ExecutionGraph:
    """Breadth-first construction of the reachable execution graph.

    Nothing in the calculus reads a variable, so by default the store is left
    out of state identity (dead-variable reduction); ``observe_store=True``
    keeps it.
    """
    if max_states < 1 or max_depth < 1:
        raise ValueError("exploration bounds must be >= 1")
    root = initial_state(program)
    states = [root]
    keys = [canonical_key(root, observe_store)]
    index = {keys[0]: 0}
    depths = [0]
    edges = []
    enabled = []
    expanded = []
    truncated = False
    v = 0
    while v < len(states):
        state = states[v]
        succs = step(program, state)
        enabled.append(frozenset(p for label, _ in succs for p in label.participants))
        if succs and depths[v] >= max_depth:
            truncated = True
            expanded.append(False)
            v += 1
            continue
        complete = True
        for label, succ in succs:
            k = canonical_key(succ, observe_store)
            w = index.get(k)
            if w is None:
                if len(states) >= max_states:
                    truncated = True
                    complete = False
                    continue
                w = len(states)
                index[k] = w
                states.append(succ)
                keys.append(k)
                depths.append(depths[v] + 1)
            edges.append(Edge(v, label, w))
        expanded.append(complete)
        v += 1
    return ExecutionGraph(
        num_vertices=len(states),
        edges=tuple(edges),
        classes=tuple(classify_state(program, s) for s in states),
        depths=tuple(depths),
        enabled=tuple(enabled),
        expanded=tuple(expanded),
        states=tuple(states),
        keys=tuple(keys),
        truncated=truncated,
    )


def reach_set(graph: ExecutionGraph, v: int) -> frozenset:
    seen = {v}
    stack = [v]
    succ = graph.successors
    while stack:
        u = stack.pop()
        for w in succ[u]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return frozenset(seen)


def preorder_leq(graph: ExecutionGraph, a: int, b: int) -> bool:
    """Reachability preorder: ``a <= b`` iff ``b`` is reachable from ``a``."""
    return b in reach_set(graph, a)


# -- strongly connected components -------------------------------------------


@dataclass(frozen=True)
class Condensation:
    scc_of: tuple  # vertex -> scc id
    members: tuple  # scc id -> sorted vertex tuple
    has_edge: tuple  # scc id -> contains at least one internal edge
    dag: tuple = field(default=())  # sorted deduplicated (scc, scc) pairs

    def sinks(self):
        out = {a for a, _ in self.dag}
        return [c for c in range(len(self.members)) if c not in out]


def strongly_connected_components(n, succ, allowed=None):
    """Iterative Tarjan over vertices in ``allowed`` (default: all).

    Yields components as lists in reverse topological order.
    """
    verts = range(n) if allowed is None else sorted(allowed)
    ok = (lambda _w: True) if allowed is None else allowed.__contains__
    index = {}
    low = {}
    on_stack = set()
    stack = []
    counter = 0
    for s in verts:
        if s in index:
            continue
        work = [(s, iter(succ[s]))]
        index[s] = low[s] = counter
        counter += 1
        stack.append(s)
        on_stack.add(s)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if not ok(w):
                    continue
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(succ[w])))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                yield comp


def condensation(graph: ExecutionGraph) -> Condensation:
    comps = [sorted(c) for c in strongly_connected_components(graph.num_vertices, graph.successors)]
    comps.sort(key=lambda c: c[0])
    scc_of = [0] * graph.num_vertices
    for i, c in enumerate(comps):
        for v in c:
            scc_of[v] = i
    has_edge = [False] * len(comps)
    dag = set()
    for e in graph.edges:
        a, b = scc_of[e.src], scc_of[e.dst]
        if a == b:
            has_edge[a] = True
        else:
            dag.add((a, b))
    return Condensation(tuple(scc_of), tuple(tuple(c) for c in comps), tuple(has_edge), tuple(sorted(dag)))


# -- exports -----------------------------------------------------------------


def _dot_escape(s):
    return s.replace("\\", "\\\\").replace('"', '\\"')


def to_dot(graph: ExecutionGraph) -> str:
    lines = ["digraph execution {", "  node [shape=box];"]
    for v in range(graph.num_vertices):
        label = f"{v}: {graph.classes[v]}\\nd={graph.depths[v]}"
        lines.append(f'  s{v} [label="{_dot_escape(label)}"];')
    for e in graph.edges:
        lines.append(f'  s{e.src} -> s{e.dst} [label="{_dot_escape(str(e.label))}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def graph_to_dict(graph: ExecutionGraph) -> dict:
    vertices = []
    for v in range(graph.num_vertices):
        item = {
            "id": v,
            "class": str(graph.classes[v]),
            "depth": graph.depths[v],
            "enabled": sorted(graph.enabled[v]),
            "expanded": graph.expanded[v],
        }
        if graph.keys:
            item["key"] = graph.keys[v].decode("ascii")
        vertices.append(item)
    return {
        "schema": GRAPH_SCHEMA,
        "root": graph.root,
        "truncated": graph.truncated,
        "vertices": vertices,
        "edges": [
            {"id": i, "src": e.src, "dst": e.dst, "participants": list(e.label.participants), "description": e.label.description}
            for i, e in enumerate(graph.edges)
        ],
    }


def to_json(graph: ExecutionGraph) -> str:
    return json.dumps(graph_to_dict(graph), indent=2, sort_keys=True) + "\n"
