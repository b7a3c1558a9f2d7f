"""Deliberately naive reference implementations used to cross-check the pipeline.

Nothing here reuses the algorithms of the main modules: fairness is decided
from explicitly enumerated simple cycles, Smith forms are computed on dense
lists, basins by path enumeration and flip classes by union-find over walks.
Every oracle either answers or raises :class:`OracleRefusal`.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from itertools import combinations

from .calculus import Acquire, Call, Choice, Par, Prefix, Program, Receive, Release, Send, Skip, Tau


class OracleRefusal(RuntimeError):
    """The input is beyond the oracle's configured cap."""


@dataclass
class OracleVerdict:
    agrees: bool
    payload: object = None  # witness when agreeing, counterexample otherwise
    elapsed: float = 0.0
    nodes: int = 0

    def __post_init__(self):
        if not self.agrees and not self.payload:
            raise ValueError("a disagreeing verdict needs a counterexample")


def compare(expected, actual, nodes=0, started=None) -> OracleVerdict:
    """Package an equality check as a verdict."""
    elapsed = time.perf_counter() - started if started is not None else 0.0
    if expected == actual:
        return OracleVerdict(True, expected, elapsed, nodes)
    return OracleVerdict(False, {"expected": expected, "actual": actual}, elapsed, nodes)


# -- graph views -------------------------------------------------------------


def _adjacency(graph):
    out = {v: [] for v in range(graph.num_vertices)}
    for i, e in enumerate(graph.edges):
        out[e.src].append((i, e.dst))
    return out


def simple_cycles(graph, cap: int = 100_000) -> list:
    """Every simple directed cycle as an edge id tuple (Johnson-free brute force)."""
    out = _adjacency(graph)
    cycles = []

    def dfs(start, v, path, visited):
        for i, w in out[v]:
            if w == start:
                cycles.append(tuple(path + [i]))
                if len(cycles) > cap:
                    raise OracleRefusal(f"more than {cap} simple cycles")
            elif w > start and w not in visited:
                visited.add(w)
                dfs(start, w, path + [i], visited)
                visited.discard(w)

    for s in range(graph.num_vertices):
        dfs(s, s, [], {s})
    return cycles


def _cycle_fair(graph, edge_ids, mode):
    verts = {graph.edges[i].src for i in edge_ids}
    executed = set()
    for i in edge_ids:
        executed.update(graph.edges[i].label.participants)
    if mode == "weak":
        demanded = set.intersection(*(set(graph.enabled[v]) for v in verts))
    else:
        demanded = set().union(*(set(graph.enabled[v]) for v in verts))
    return demanded <= executed


def _group(cycles):
    """Merge cycles sharing a vertex into maximal connected unions (edge sets)."""
    groups = []
    for es, vs in cycles:
        merged_e, merged_v = set(es), set(vs)
        rest = []
        for ge, gv in groups:
            if gv & merged_v:
                merged_e |= ge
                merged_v |= gv
            else:
                rest.append((ge, gv))
        groups = rest + [(merged_e, merged_v)]
    return [frozenset(ge) for ge, _ in groups]


def lasso_fair_oracle(graph, mode: str = "weak", cap: int = 200, max_processes: int = 12):
    """Fair edge set and fair cycle witnesses by explicit cycle enumeration.

    An infinite run eventually stays inside the edges of some vertex-connected
    union of simple cycles, so the fair runs are exactly the lassos into a
    fair union. Weak fairness is monotone in the union, so the maximal union
    of each connected group decides it. For strong fairness every set ``Q``
    of processes is tried: the cycles avoiding states that enable anything
    outside ``Q`` are grouped, and a group is fair when every process it
    enables is executed on it.
    """
    if graph.num_vertices > cap:
        raise OracleRefusal(f"{graph.num_vertices} vertices exceed the cap of {cap}")
    raw = simple_cycles(graph)
    cycles = [(frozenset(c), frozenset(graph.edges[i].src for i in c)) for c in raw]
    if mode == "weak":
        witnesses = [g for g in _group(cycles) if _cycle_fair(graph, g, mode)]
    elif mode == "strong":
        pids = sorted(set().union(*graph.enabled)) if graph.num_vertices else []
        if len(pids) > max_processes:
            raise OracleRefusal(f"{len(pids)} processes exceed the cap of {max_processes}")
        found = set()
        for r in range(len(pids) + 1):
            for q in combinations(pids, r):
                allowed = set(q)
                inside = [(es, vs) for es, vs in cycles if all(graph.enabled[v] <= allowed for v in vs)]
                found.update(g for g in _group(inside) if _cycle_fair(graph, g, mode))
        witnesses = list(found)
    else:
        raise ValueError(f"unknown fairness mode {mode!r}")
    anchors = {v for v in range(graph.num_vertices) if not any(e.src == v for e in graph.edges)}
    for w in witnesses:
        anchors.update(graph.edges[i].src for i in w)
    out = _adjacency(graph)
    fair = set()
    for i, e in enumerate(graph.edges):
        seen = {e.dst}
        stack = [e.dst]
        while stack:
            v = stack.pop()
            if v in anchors:
                fair.add(i)
                break
            for _, w in out[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
    return frozenset(fair), sorted(witnesses, key=sorted)


def inevitability_oracle(graph, trap, cap: int = 200, path_limit: int = 1_000_000) -> frozenset:
    """Vertices all of whose maximal paths enter ``trap``.

    Paths are explored depth-first; a path that closes a cycle outside the
    trap can be repeated forever and therefore escapes.
    """
    if graph.num_vertices > cap:
        raise OracleRefusal(f"{graph.num_vertices} vertices exceed the cap of {cap}")
    target = set(trap.vertices if hasattr(trap, "vertices") else trap)
    out = _adjacency(graph)
    budget = [path_limit]

    def inevitable(v, on_path):
        budget[0] -= 1
        if budget[0] < 0:
            raise OracleRefusal(f"more than {path_limit} path steps")
        if v in target:
            return True
        if not out[v] or v in on_path:
            return False
        on_path = on_path | {v}
        return all(inevitable(w, on_path) for _, w in out[v])

    return frozenset(v for v in range(graph.num_vertices) if inevitable(v, frozenset()))


def persistent_reach_oracle(graph, v) -> frozenset:
    """Direct intersection of the reach sets of everything reachable from ``v``."""
    out = _adjacency(graph)

    def reach(u):
        seen = {u}
        stack = [u]
        while stack:
            x = stack.pop()
            for _, w in out[x]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return seen

    result = None
    for u in sorted(reach(v)):
        r = reach(u)
        result = r if result is None else result & r
    return frozenset(result or ())


# -- dense Smith normal form -------------------------------------------------


def dense_snf_oracle(rows, limit: int = 64) -> tuple:
    """Invariant factors of a dense integer matrix (list of lists or IntMatrix)."""
    if hasattr(rows, "to_dense"):
        rows = rows.to_dense()
    a = [list(map(int, r)) for r in rows]
    m = len(a)
    n = len(a[0]) if m else 0
    if m > limit or n > limit:
        raise OracleRefusal(f"dense oracle is limited to {limit}x{limit}")
    factors = []
    t = 0
    while t < min(m, n):
        nonzero = [(abs(a[i][j]), i, j) for i in range(t, m) for j in range(t, n) if a[i][j]]
        if not nonzero:
            break
        _, i, j = min(nonzero)
        a[t], a[i] = a[i], a[t]
        for r in a:
            r[t], r[j] = r[j], r[t]
        done = False
        while not done:
            done = True
            for i in range(t + 1, m):
                q = a[i][t] // a[t][t]
                if q:
                    a[i] = [x - q * y for x, y in zip(a[i], a[t])]
                if a[i][t]:
                    a[t], a[i] = a[i], a[t]
                    done = False
                    break
            if not done:
                continue
            for j in range(t + 1, n):
                q = a[t][j] // a[t][t]
                if q:
                    for r in a:
                        r[j] -= q * r[t]
                if a[t][j]:
                    for r in a:
                        r[t], r[j] = r[j], r[t]
                    done = False
                    break
            if not done:
                continue
            p = a[t][t]
            for i in range(t + 1, m):
                bad = next((j for j in range(t + 1, n) if a[i][j] % p), None)
                if bad is not None:
                    a[t] = [x + y for x, y in zip(a[t], a[i])]
                    done = False
                    break
        factors.append(abs(a[t][t]))
        t += 1
    return tuple(factors)


def dense_homology_oracle(complex, limit: int = 256) -> tuple:
    """(betti_1, torsion) from dense boundary matrices and the rank formula."""
    vid = {v: k for k, v in enumerate(complex.vertices)}
    eid = {e.id: k for k, e in enumerate(complex.edges)}
    d1 = [[0] * len(complex.edges) for _ in complex.vertices]
    for k, e in enumerate(complex.edges):
        d1[vid[e.dst]][k] += 1
        d1[vid[e.src]][k] -= 1
    d2 = [[0] * len(complex.two_cells) for _ in complex.edges]
    for k, c in enumerate(complex.two_cells):
        for e, s in c.boundary:
            d2[eid[e]][k] += s
    r1 = len(dense_snf_oracle(d1, limit)) if complex.edges and complex.vertices else 0
    f2 = dense_snf_oracle(d2, limit) if complex.two_cells and complex.edges else ()
    betti = len(complex.edges) - r1 - len(f2)
    return betti, tuple(f for f in f2 if f > 1)


# -- flip classes ------------------------------------------------------------


def flip_class_oracle(graph, complex, origin, depth, cap: int = 100_000) -> int:
    """Count walk classes under single flips by union-find over all walks."""
    out = _adjacency(graph)
    walks = []

    def grow(v, walk):
        if len(walk) == depth or not out[v]:
            walks.append(tuple(walk))
            if len(walks) > cap:
                raise OracleRefusal(f"more than {cap} walks")
            return
        for i, w in out[v]:
            grow(w, walk + [i])

    grow(origin, [])
    parent = list(range(len(walks)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    sides = []
    for c in complex.two_cells:
        if c.kind == "square":
            sides.append((c.edges[0:2], c.edges[2:4]))
        else:
            sides.append((c.edges[0:2], c.edges[2:3]))

    def one_flip(a, b):
        for x, y in sides:
            for p, q in ((x, y), (y, x)):
                for k in range(len(a) - len(p) + 1):
                    if a[k : k + len(p)] == p and a[:k] + q + a[k + len(p) :] == b:
                        return True
        return False

    for i, j in combinations(range(len(walks)), 2):
        if abs(len(walks[i]) - len(walks[j])) <= 1 and one_flip(walks[i], walks[j]):
            parent[find(i)] = find(j)
    return len({find(i) for i in range(len(walks))})


# -- independent interpreter -------------------------------------------------


@dataclass
class EnumerationCounts:
    vertices: int
    edges: int
    terminal: int
    stuck: int  # non-terminal states without successors
    faults: int
    labels: dict = field(default_factory=dict)


def enumerate_program(program: Program, cap: int = 100_000) -> EnumerationCounts:
    """Count reachable states and transitions with a from-scratch interpreter.

    State: (((pid, term), ...), channel contents, lock owners, fault flag).
    Variables are never read, so they are not part of the state.
    """
    defs = program.definitions

    def unfold(t):
        while isinstance(t, Call):
            t = defs[t.name]
        return t

    def split(t):
        u = unfold(t)
        if isinstance(u, Par):
            return split(u.left) + split(u.right)
        return [Skip() if isinstance(u, Skip) else t]

    def place(procs, pid, cont):
        parts = split(cont)
        new = dict(procs)
        top = max(new)
        new[pid] = parts[0]
        for k, extra in enumerate(parts[1:]):
            new[top + 1 + k] = extra
        return tuple(sorted(new.items()))

    start = (
        tuple((k + 1, t) for k, t in enumerate(split(program.main))),
        tuple((c, ()) for c in sorted(program.channels)),
        tuple((r, 0) for r in sorted(program.resources)),
        False,
    )

    def moves(s):
        procs, chans, locks, fault = s
        if fault:
            return set()
        pm, cm, lm = dict(procs), dict(chans), dict(locks)
        res = set()
        for pid, t in procs:
            h = unfold(t)
            if isinstance(h, Choice):
                res.add(((pid,), "tau", (place(pm, pid, h.left), chans, locks, False)))
                res.add(((pid,), "tau", (place(pm, pid, h.right), chans, locks, False)))
            if not isinstance(h, Prefix):
                continue
            act, body = h.action, h.body
            if isinstance(act, Tau):
                res.add(((pid,), "tau", (place(pm, pid, body), chans, locks, False)))
            elif isinstance(act, Acquire) and lm[act.resource] == 0:
                nl = tuple(sorted({**lm, act.resource: pid}.items()))
                res.add(((pid,), f"acq({act.resource})", (place(pm, pid, body), chans, nl, False)))
            elif isinstance(act, Release):
                if lm[act.resource] == pid:
                    nl = tuple(sorted({**lm, act.resource: 0}.items()))
                    res.add(((pid,), f"rel({act.resource})", (place(pm, pid, body), chans, nl, False)))
                else:
                    rest = tuple((p, x) for p, x in procs if p != pid)
                    res.add(((pid,), f"bad-release({act.resource})", (rest, chans, locks, True)))
            elif isinstance(act, Send):
                cap_c = program.channels[act.channel]
                if cap_c == 0:
                    for pid2, t2 in procs:
                        h2 = unfold(t2)
                        if pid2 != pid and isinstance(h2, Prefix) and isinstance(h2.action, Receive) and h2.action.channel == act.channel:
                            mid = dict(place(pm, pid, body))
                            res.add((tuple(sorted((pid, pid2))), f"sync({act.channel},{act.value})", (place(mid, pid2, h2.body), chans, locks, False)))
                elif len(cm[act.channel]) < cap_c:
                    nc = tuple(sorted({**cm, act.channel: cm[act.channel] + (act.value,)}.items()))
                    res.add(((pid,), f"put({act.channel},{act.value})", (place(pm, pid, body), nc, locks, False)))
            elif isinstance(act, Receive) and program.channels[act.channel] > 0 and cm[act.channel]:
                q = cm[act.channel]
                nc = tuple(sorted({**cm, act.channel: q[1:]}.items()))
                res.add(((pid,), f"get({act.channel},{q[0]}->{act.var})", (place(pm, pid, body), nc, locks, False)))
        return res

    seen = {start}
    stack = [start]
    n_edges = terminal = stuck = faults = 0
    labels = {}
    while stack:
        s = stack.pop()
        ms = moves(s)
        n_edges += len(ms)
        if s[3]:
            faults += 1
        elif all(isinstance(t, Skip) for _, t in s[0]):
            terminal += 1
        elif not ms:
            stuck += 1
        for parts, desc, nxt in ms:
            kind = desc.split("(")[0]
            labels[kind] = labels.get(kind, 0) + 1
            if nxt not in seen:
                seen.add(nxt)
                if len(seen) > cap:
                    raise OracleRefusal(f"more than {cap} states")
                stack.append(nxt)
    return EnumerationCounts(len(seen), n_edges, terminal, stuck, faults, labels)
