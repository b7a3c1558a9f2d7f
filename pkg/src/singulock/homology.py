"""Integer homology of execution complexes and GF(2) depth persistence."""

from __future__ import annotations

import csv
import io
import math
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import NamedTuple

from ._kernels import reduce_columns
from .topology import ExecComplex


@dataclass(frozen=True)
class IntMatrix:
    rows: int
    cols: int
    entries: dict = field(default_factory=dict)  # (row, col) -> nonzero int

    def __post_init__(self):
        for (r, c), v in self.entries.items():
            if not (0 <= r < self.rows and 0 <= c < self.cols):
                raise ValueError(f"entry ({r}, {c}) out of bounds")
            if v == 0:
                raise ValueError("explicit zero entry")

    @classmethod
    def from_dense(cls, dense):
        rows = len(dense)
        cols = len(dense[0]) if rows else 0
        entries = {(r, c): int(v) for r, row in enumerate(dense) for c, v in enumerate(row) if v}
        return cls(rows, cols, entries)

    def to_dense(self):
        out = [[0] * self.cols for _ in range(self.rows)]
        for (r, c), v in self.entries.items():
            out[r][c] = v
        return out

    def __matmul__(self, other: "IntMatrix") -> "IntMatrix":
        if self.cols != other.rows:
            raise ValueError("shape mismatch")
        by_row = defaultdict(list)
        for (r, c), v in other.entries.items():
            by_row[r].append((c, v))
        acc = defaultdict(int)
        for (r, k), v in self.entries.items():
            for c, w in by_row[k]:
                acc[(r, c)] += v * w
        return IntMatrix(self.rows, other.cols, {rc: v for rc, v in acc.items() if v})


class SNFResult(NamedTuple):
    factors: tuple  # invariant factors d1 | d2 | ... (all > 0)
    rank: int
    pivot_rows: tuple = ()
    left_inverse: dict | None = None  # column index -> {row: value}


def smith_normal_form(m: IntMatrix, track: bool = False) -> SNFResult:
    """Invariant factors of ``m`` by sparse unimodular elimination.

    Pivots are the smallest nonzero entry (ties: lowest (row, col)); a pivot
    is only retired once it divides every remaining entry, so the factors
    come out already ordered by divisibility. With ``track`` the inverse of
    the accumulated row transform is kept: retiring pivot ``k`` makes
    ``factors[k] * left_inverse[pivot_rows[k]]`` a generator of the image.
    """
    rows = defaultdict(dict)
    cols = defaultdict(set)
    for (r, c), v in m.entries.items():
        rows[r][c] = v
        cols[c].add(r)
    linv = {r: {r: 1} for r in range(m.rows)} if track else None

    def put(r, c, v):
        if v:
            rows[r][c] = v
            cols[c].add(r)
        else:
            rows[r].pop(c, None)
            cols[c].discard(r)

    def row_add(i, k, q):
        # R_i += q R_k
        for c, v in list(rows[k].items()):
            put(i, c, rows[i].get(c, 0) + q * v)
        if linv is not None:
            ci, ck = linv[i], linv[k]
            for r, v in ci.items():
                nv = ck.get(r, 0) - q * v
                if nv:
                    ck[r] = nv
                else:
                    ck.pop(r, None)

    def col_add(j, k, q):
        # C_j += q C_k
        for r in list(cols[k]):
            put(r, j, rows[r].get(j, 0) + q * rows[r][k])

    factors = []
    pivot_rows = []
    while any(rows.values()):
        r, c = min(((r, c) for r, row in rows.items() for c in row), key=lambda rc: (abs(rows[rc[0]][rc[1]]), rc))
        while True:
            p = rows[r][c]
            for i in sorted(cols[c] - {r}):
                row_add(i, r, -(rows[i][c] // p))
            for j in sorted(set(rows[r]) - {c}):
                col_add(j, c, -(rows[r][j] // p))
            rest = [(abs(rows[i][c]), i, c) for i in cols[c] if i != r]
            rest += [(abs(rows[r][j]), r, j) for j in rows[r] if j != c]
            if rest:
                _, r, c = min(rest)
                continue
            if abs(p) != 1:
                bad = next(
                    (i for i in sorted(rows) if i != r and any(v % p for v in rows[i].values())),
                    None,
                )
                if bad is not None:
                    row_add(r, bad, 1)
                    continue
            break
        factors.append(abs(p))
        pivot_rows.append(r)
        put(r, c, 0)
        del rows[r]
        cols.pop(c, None)
    return SNFResult(tuple(factors), len(factors), tuple(pivot_rows), linv)


# -- boundary matrices -------------------------------------------------------


def boundary_matrices(complex: ExecComplex):
    """``(d1, d2)`` with rows/columns in the order of ``complex`` cells."""
    vpos = {v: i for i, v in enumerate(complex.vertices)}
    epos = {e.id: i for i, e in enumerate(complex.edges)}
    d1 = {}
    for j, e in enumerate(complex.edges):
        if e.src != e.dst:
            d1[(vpos[e.dst], j)] = 1
            d1[(vpos[e.src], j)] = -1
    d2 = {}
    for j, cell in enumerate(complex.two_cells):
        for eid, sign in cell.boundary:
            key = (epos[eid], j)
            v = d2.get(key, 0) + sign
            if v:
                d2[key] = v
            else:
                d2.pop(key, None)
    return (
        IntMatrix(len(complex.vertices), len(complex.edges), d1),
        IntMatrix(len(complex.edges), len(complex.two_cells), d2),
    )


def homology_h0(complex: ExecComplex) -> int:
    parent = {v: v for v in complex.vertices}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    count = len(parent)
    for e in complex.edges:
        a, b = find(e.src), find(e.dst)
        if a != b:
            parent[a] = b
            count -= 1
    return count


# -- first homology ----------------------------------------------------------


@dataclass(frozen=True)
class HomologyResult:
    betti: int
    torsion: tuple
    generators: tuple  # chains: tuple of (edge id, coefficient), sorted by edge id
    orders: tuple = ()  # 0 for free generators, else the torsion order

    @property
    def trivial(self):
        return self.betti == 0 and not self.torsion


def _spanning_forest(complex: ExecComplex):
    """Tree edge ids of a spanning forest preferring directed BFS tree edges."""
    out = defaultdict(list)
    for e in complex.edges:
        out[e.src].append(e)
    seen = set()
    tree = []
    for root in complex.vertices:
        if root in seen:
            continue
        seen.add(root)
        q = deque([root])
        while q:
            u = q.popleft()
            for e in out[u]:
                if e.dst not in seen:
                    seen.add(e.dst)
                    tree.append(e)
                    q.append(e.dst)
    parent = {v: v for v in complex.vertices}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    chosen = set()
    for e in tree + list(complex.edges):
        a, b = find(e.src), find(e.dst)
        if a != b:
            parent[a] = b
            chosen.add(e.id)
    return chosen


def cycle_basis(complex: ExecComplex):
    """Fundamental cycles of a spanning forest, as ``{edge id: coeff}`` dicts.

    Every non-tree edge contributes the cycle it closes with coefficient +1,
    so the coordinate of a cycle ``z`` on this basis is ``z[non-tree edge]``.
    Returns ``[(non_tree_edge_id, chain), ...]``.
    """
    tree_ids = _spanning_forest(complex)
    adj = defaultdict(list)
    for e in complex.edges:
        if e.id in tree_ids:
            adj[e.src].append((e.dst, e.id, 1))
            adj[e.dst].append((e.src, e.id, -1))
    up = {}
    level = {}
    for root in complex.vertices:
        if root in level:
            continue
        level[root] = 0
        up[root] = None
        q = deque([root])
        while q:
            u = q.popleft()
            for w, eid, sign in adj[u]:
                if w not in level:
                    level[w] = level[u] + 1
                    up[w] = (u, eid, sign)  # edge eid traversed u->w has sign
                    q.append(w)

    def path(a, b):
        """Signed tree edges of the path a -> b."""
        from_a, from_b = [], []
        while level[a] > level[b]:
            u, eid, sign = up[a]
            from_a.append((eid, -sign))
            a = u
        while level[b] > level[a]:
            u, eid, sign = up[b]
            from_b.append((eid, sign))
            b = u
        while a != b:
            u, eid, sign = up[a]
            from_a.append((eid, -sign))
            a = u
            u, eid, sign = up[b]
            from_b.append((eid, sign))
            b = u
        return from_a + from_b[::-1]

    basis = []
    for e in complex.edges:
        if e.id in tree_ids:
            continue
        chain = {e.id: 1}
        for eid, s in path(e.dst, e.src):
            chain[eid] = chain.get(eid, 0) + s
        basis.append((e.id, {k: v for k, v in chain.items() if v}))
    return basis


def _is_directed(chain):
    signs = {v > 0 for v in chain.values()}
    return len(signs) == 1


def chain_boundary(complex: ExecComplex, chain) -> dict:
    ends = {e.id: (e.src, e.dst) for e in complex.edges}
    acc = defaultdict(int)
    for eid, c in dict(chain).items():
        s, t = ends[eid]
        acc[t] += c
        acc[s] -= c
    return {v: c for v, c in acc.items() if c}


def homology_h1(complex: ExecComplex) -> HomologyResult:
    """H1 = ker d1 / im d2 with integer generators.

    Generators are expressed on a fundamental cycle basis; directed cycles
    are ordered last so that elimination prefers to consume undirected ones,
    leaving directed walks as free generators where possible.
    """
    d1, d2 = boundary_matrices(complex)
    rank1 = len(complex.vertices) - homology_h0(complex)
    snf2 = smith_normal_form(d2)
    betti = len(complex.edges) - rank1 - snf2.rank
    torsion = tuple(d for d in snf2.factors if d > 1)

    basis = cycle_basis(complex)
    basis.sort(key=lambda item: (_is_directed(item[1]), item[0]))
    row_of = {eid: i for i, (eid, _) in enumerate(basis)}
    coords = {}
    for (pos, j), v in d2.entries.items():
        eid = complex.edges[pos].id
        if eid in row_of:
            coords[(row_of[eid], j)] = v
    snf = smith_normal_form(IntMatrix(len(basis), len(complex.two_cells), coords), track=True)
    if snf.rank != snf2.rank or tuple(d for d in snf.factors if d > 1) != torsion:
        raise ArithmeticError("cycle-coordinate reduction disagrees with the boundary matrix")

    def realize(column):
        acc = defaultdict(int)
        for row, coeff in column.items():
            for eid, c in basis[row][1].items():
                acc[eid] += coeff * c
        chain = tuple(sorted((k, v) for k, v in acc.items() if v))
        if chain_boundary(complex, chain):
            raise ArithmeticError("generator is not a cycle")
        return chain

    pivots = set(snf.pivot_rows)
    gens, orders = [], []
    for row in range(len(basis)):
        if row not in pivots:
            gens.append(realize(snf.left_inverse[row]))
            orders.append(0)
    for row, d in zip(snf.pivot_rows, snf.factors):
        if d > 1:
            gens.append(realize(snf.left_inverse[row]))
            orders.append(d)
    return HomologyResult(betti, torsion, tuple(gens), tuple(orders))


# -- witnesses ---------------------------------------------------------------


@dataclass(frozen=True)
class CycleWalk:
    """A homology generator rendered as a closed walk when possible.

    ``edges`` is the walk in traversal order when ``directed``; otherwise
    it is the signed chain ``((edge id, coeff), ...)``.
    """

    edges: tuple
    directed: bool
    order: int = 0


def _euler_circuit(complex: ExecComplex, chain):
    ends = {e.id: (e.src, e.dst) for e in complex.edges}
    out = defaultdict(list)
    total = 0
    for eid, c in sorted(chain):
        out[ends[eid][0]].extend([eid] * c)
        total += c
    for v in out:
        out[v].reverse()
    start = min(out)
    stack = [(start, None)]
    walk = []
    while stack:
        v, via = stack[-1]
        if out[v]:
            eid = out[v].pop()
            stack.append((ends[eid][1], eid))
        else:
            stack.pop()
            if via is not None:
                walk.append(via)
    walk.reverse()
    return tuple(walk) if len(walk) == total else None


def generator_cycles(complex: ExecComplex, result: HomologyResult) -> list:
    walks = []
    orders = result.orders or (0,) * len(result.generators)
    for chain, order in zip(result.generators, orders):
        walk = None
        if chain and _is_directed(dict(chain)):
            signed = tuple((e, abs(c)) for e, c in chain)
            walk = _euler_circuit(complex, signed)
        if walk is not None:
            walks.append(CycleWalk(walk, True, order))
        else:
            walks.append(CycleWalk(tuple(chain), False, order))
    return walks


# -- persistence -------------------------------------------------------------


class PersistencePair(NamedTuple):
    birth: int
    death: float  # int depth or math.inf
    representative: tuple  # edge ids of a GF(2) cycle born at ``birth``


def _cell_key(cell):
    return (cell.kind, cell.edges)


def persistent_h1(filtration) -> list:
    """GF(2) persistence pairs of 1-cycles along a nested filtration."""
    filtration = list(filtration)
    if not filtration:
        return []
    vb, eb, cb = {}, {}, {}
    ends = {}
    for i, K in enumerate(filtration):
        if i:
            prev = filtration[i - 1]
            cur_v = set(K.vertices)
            cur_e = {e.id: (e.src, e.dst) for e in K.edges}
            cur_c = {_cell_key(c) for c in K.two_cells}
            if (
                not set(prev.vertices) <= cur_v
                or any(cur_e.get(e.id) != (e.src, e.dst) for e in prev.edges)
                or not {_cell_key(c) for c in prev.two_cells} <= cur_c
            ):
                raise ValueError(f"filtration is not nested at step {i}")
        for v in K.vertices:
            vb.setdefault(v, i)
        for e in K.edges:
            eb.setdefault(e.id, i)
            ends[e.id] = (e.src, e.dst)
        for c in K.two_cells:
            cb.setdefault(_cell_key(c), i)

    cell_index = {_cell_key(c): j for j, c in enumerate(filtration[-1].two_cells)}
    order = [(vb[v], 0, v, v) for v in vb]
    order += [(eb[e], 1, e, e) for e in eb]
    order += [(cb[k], 2, cell_index[k], k) for k in cb]
    order.sort(key=lambda t: t[:3])
    pos = {}
    for i, (_, dim, _, ident) in enumerate(order):
        pos[(dim, ident)] = i
    columns = []
    for birth, dim, _, ident in order:
        if dim == 0:
            columns.append([])
        elif dim == 1:
            s, t = ends[ident]
            columns.append([] if s == t else sorted((pos[(0, s)], pos[(0, t)])))
        else:
            columns.append(sorted({pos[(1, e)] for e in ident[1]}))

    lows, reps = reduce_columns(columns)
    killed = {}
    for j, low in enumerate(lows):
        if low >= 0 and order[j][1] == 2:
            killed[low] = j
    pairs = []
    for j, (birth, dim, _, ident) in enumerate(order):
        if dim != 1 or lows[j] >= 0:
            continue
        rep = tuple(sorted(order[k][3] for k in reps[j]))
        death = order[killed[j]][0] if j in killed else math.inf
        pairs.append(PersistencePair(birth, death, rep))
    pairs.sort()
    return pairs


def persistence_csv(pairs) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["birth", "death", "representative"])
    for p in pairs:
        death = "inf" if p.death == math.inf else str(p.death)
        w.writerow([p.birth, death, " ".join(map(str, p.representative))])
    return buf.getvalue()
