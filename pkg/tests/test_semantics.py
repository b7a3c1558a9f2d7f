import json

import pytest
from hypothesis import given

from singulock import explore, parse_program
from singulock.calculus import Skip
from singulock.oracle import enumerate_program, persistent_reach_oracle
from singulock.semantics import (
    GRAPH_SCHEMA,
    GlobalState,
    canonical_key,
    classify_state,
    condensation,
    graph_to_dict,
    initial_state,
    preorder_leq,
    reach_set,
    step,
    strongly_connected_components,
    to_dot,
    to_json,
)
from singulock.corpus import load_fixture

from support import FIXTURES, annotated_graphs, fixture_graph, hold_and_wait


def successors(source, state=None):
    p = parse_program(source)
    return p, step(p, state if state is not None else initial_state(p))


class TestInitialState:
    def test_skip(self):
        s = initial_state(parse_program("main = skip"))
        assert len(s.processes) == 1
        assert s.processes[0][0] == 1

    def test_diamond_pids(self):
        assert initial_state(load_fixture("FX-DIAMOND")[0]).pids == (1, 2)

    def test_phil2_locks_free(self):
        s = initial_state(load_fixture("FX-PHIL2")[0])
        assert s.pids == (1, 2)
        assert s.locks == (("r1", None), ("r2", None))


class TestStep:
    def test_ping_sync(self):
        p = load_fixture("FX-PING")[0]
        out = step(p, initial_state(p))
        assert len(out) == 1
        label, _ = out[0]
        assert label.description == "sync(a,1)"
        assert label.participants == (1, 2)

    def test_blocking_acquire(self):
        p = parse_program("res r; main = (release(r); skip) || (acquire(r); skip)")
        s = initial_state(p)
        held = GlobalState(s.processes, (), (), (("r", 1),))
        labels = [str(l) for l, _ in step(p, held)]
        assert not any(l.startswith("acq") for l in labels)

    def test_bad_release_faults(self):
        p = parse_program("res r; main = (tau; skip) || (release(r); skip)")
        out = step(p, initial_state(p))
        bad = [(l, s) for l, s in out if l.description.startswith("bad-release")]
        assert len(bad) == 1
        assert classify_state(p, bad[0][1]).kind == "fault"
        assert step(p, bad[0][1]) == []

    def test_buffered_fifo(self):
        p = parse_program("chan c:2; main = (c!0; c!1; skip) || (c?x; c?y; skip)")
        g = explore(p)
        gets = sorted({e.label.description for e in g.edges if e.label.description.startswith("get")})
        assert gets == ["get(c,0->x)", "get(c,1->y)"]

    def test_capacity_bound(self):
        p = parse_program("chan c:1; main = c!0; c!1; skip")
        g = explore(p)
        assert g.num_vertices == 2  # second put blocks forever

    def test_choice_is_owned_tau(self):
        p, out = successors("main = (tau; skip) |~| skip")
        assert [str(l) for l, _ in out] == ["tau@1", "tau@1"]

    def test_dynamic_spawn_numbering(self):
        p, out = successors("main = (tau; (skip || tau; skip || tau; skip)) || skip")
        (_, s), = out
        assert s.pids == (1, 2, 3, 4)

    def test_self_sync_impossible(self):
        g = explore(parse_program("chan a; def X = a!1; X |~| a?x; X; main = X"))
        assert not any("sync" in e.label.description for e in g.edges)


class TestClassify:
    def test_all_skip_terminal(self):
        p = parse_program("main = skip || skip")
        assert classify_state(p, initial_state(p)).kind == "terminal"

    def test_hold_and_wait_running(self):
        g = fixture_graph("FX-PHIL2")
        v = hold_and_wait(g)
        assert g.classes[v].kind == "running"
        assert g.out_edges[v] == ()


class TestCanonicalKey:
    def test_equal_states_equal_keys(self):
        p = load_fixture("FX-DIAMOND")[0]
        assert canonical_key(initial_state(p)) == canonical_key(initial_state(p))

    def test_fifo_difference(self):
        s = GlobalState(((1, Skip()),), (), (("a", (0,)),), ())
        t = GlobalState(((1, Skip()),), (), (("a", (1,)),), ())
        assert canonical_key(s) != canonical_key(t)

    def test_ping_key_stable(self):
        # frozen bytes: the encoding must not vary between interpreter runs
        key = canonical_key(initial_state(load_fixture("FX-PING")[0]), include_store=False)
        assert key == b'[[[1,"X"],[2,"Y"]],[],[["a",[]]],[],null]'


class TestExplore:
    def test_diamond(self):
        g = fixture_graph("FX-DIAMOND")
        assert (g.num_vertices, len(g.edges), g.truncated) == (4, 4, False)

    def test_ping(self):
        g = fixture_graph("FX-PING")
        assert g.num_vertices == 1
        assert [(e.src, e.dst) for e in g.edges] == [(0, 0)]

    def test_ping_with_store_observed(self):
        g = explore(load_fixture("FX-PING")[0], observe_store=True)
        assert g.num_vertices == 2

    @pytest.mark.parametrize("name", FIXTURES)
    def test_counts_match_enumeration_oracle(self, name):
        g = fixture_graph(name)
        counts = enumerate_program(load_fixture(name)[0])
        assert (g.num_vertices, len(g.edges)) == (counts.vertices, counts.edges)
        terminal = sum(g.is_terminal(v) for v in range(g.num_vertices))
        stuck = sum(1 for v in range(g.num_vertices) if not g.out_edges[v] and g.classes[v].kind == "running")
        assert (terminal, stuck) == (counts.terminal, counts.stuck)

    def test_phil2_one_terminal_one_stuck(self):
        counts = enumerate_program(load_fixture("FX-PHIL2")[0])
        assert (counts.terminal, counts.stuck) == (1, 1)

    def test_truncation_by_states(self):
        g = explore(load_fixture("FX-PHIL3")[0], max_states=10)
        assert g.truncated
        assert g.num_vertices == 10
        assert not all(g.expanded)

    def test_truncation_by_depth(self):
        g = explore(load_fixture("FX-PHIL2")[0], max_depth=2)
        assert g.truncated
        assert max(g.depths) == 2

    def test_bad_bounds(self):
        with pytest.raises(ValueError):
            explore(load_fixture("FX-PING")[0], max_states=0)


class TestReach:
    def test_terminal_reaches_itself(self):
        g = fixture_graph("FX-DIAMOND")
        t = next(v for v in range(4) if g.is_terminal(v))
        assert reach_set(g, t) == {t}

    def test_diamond_root(self):
        assert reach_set(fixture_graph("FX-DIAMOND"), 0) == frozenset(range(4))

    def test_ping(self):
        assert reach_set(fixture_graph("FX-PING"), 0) == {0}

    def test_preorder_examples(self):
        g = fixture_graph("FX-DIAMOND")
        t = next(v for v in range(4) if g.is_terminal(v))
        assert preorder_leq(g, 0, 0)
        assert preorder_leq(g, 0, t)
        assert not preorder_leq(g, t, 0)


class TestSCC:
    def test_dag(self):
        g = fixture_graph("FX-CHOICE")
        assert len(condensation(g).members) == g.num_vertices

    def test_ping(self):
        c = condensation(fixture_graph("FX-PING"))
        assert list(map(list, c.members)) == [[0]]
        assert c.has_edge[0]

    def test_retry_matches_pairwise_reachability(self):
        g = fixture_graph("FX-RETRY")
        c = condensation(g)
        reach = [reach_set(g, v) for v in range(g.num_vertices)]
        for u in range(g.num_vertices):
            for v in range(g.num_vertices):
                same = v in reach[u] and u in reach[v]
                assert same == (c.scc_of[u] == c.scc_of[v])
        # the retry loop of process 1 lives in the root's SCC
        assert len(c.members[c.scc_of[0]]) > 1


class TestExport:
    def test_json_schema(self):
        doc = graph_to_dict(fixture_graph("FX-DIAMOND"))
        assert doc["schema"] == GRAPH_SCHEMA
        assert json.loads(to_json(fixture_graph("FX-DIAMOND"))) == doc

    def test_dot(self):
        dot = to_dot(fixture_graph("FX-PING"))
        assert dot.startswith("digraph")
        assert "sync(a,1)" in dot


class TestInvariants:
    @pytest.mark.parametrize("name", FIXTURES)
    def test_determinism(self, name):
        p = load_fixture(name)[0]
        assert to_json(explore(p)) == to_json(explore(p))

    @pytest.mark.parametrize("name", FIXTURES)
    def test_enabledness_soundness(self, name):
        g = fixture_graph(name)
        for v in range(g.num_vertices):
            assert g.enabled[v] == {p for i in g.out_edges[v] for p in g.edges[i].label.participants}

    @pytest.mark.parametrize("name", FIXTURES)
    def test_closure_and_depth(self, name):
        g = fixture_graph(name)
        for e in g.edges:
            assert 0 <= e.dst < g.num_vertices
            assert g.depths[e.dst] <= g.depths[e.src] + 1

    @pytest.mark.parametrize("name", FIXTURES)
    def test_preorder_laws(self, name):
        g = fixture_graph(name)
        n = g.num_vertices
        reach = [reach_set(g, v) for v in range(n)]
        for a in range(n):
            assert preorder_leq(g, a, a)
            for b in reach[a]:
                for c in reach[b]:
                    assert preorder_leq(g, a, c)

    @pytest.mark.parametrize("name", FIXTURES)
    def test_persistent_reach_oracle_agrees(self, name):
        from singulock.singularity import persistent_reach

        g = fixture_graph(name)
        for v in range(g.num_vertices):
            assert persistent_reach(g, v) == persistent_reach_oracle(g, v)

    @given(annotated_graphs(max_vertices=30))
    def test_persistent_reach_random(self, g):
        from singulock.singularity import persistent_reach

        for v in range(g.num_vertices):
            assert persistent_reach(g, v) == persistent_reach_oracle(g, v)

    @given(annotated_graphs())
    def test_scc_partition(self, g):
        comps = strongly_connected_components(g.num_vertices, g.successors)
        assert sorted(v for c in comps for v in c) == list(range(g.num_vertices))
