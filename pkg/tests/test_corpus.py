import pytest

from singulock.calculus import Program
from singulock.corpus import (
    MANIFEST_SCHEMA,
    fixture_names,
    fixture_path,
    fixture_source,
    load_fixture,
    manifest,
    provenance,
)
from singulock.homology import homology_h1
from singulock.oracle import dense_homology_oracle, enumerate_program, lasso_fair_oracle
from singulock.report import AnalysisConfig, analyze
from singulock.topology import build_complex

from support import FIXTURES, fixture_graph

EXPECTED_KEYS = {
    "vertices",
    "edges",
    "attractors",
    "betti1",
    "betti1_unfilled",
    "betti1_fair",
    "livelock_rank",
    "persistence",
    "exit_code",
}


def report_for(name):
    return analyze(load_fixture(name)[0], AnalysisConfig(input=name), graph=fixture_graph(name))


class TestManifest:
    def test_schema(self):
        assert manifest()["schema"] == MANIFEST_SCHEMA

    def test_names(self):
        assert fixture_names() == ["FX-CHOICE", "FX-DIAMOND", "FX-PHIL2", "FX-PHIL3", "FX-PING", "FX-RETRY"]

    def test_unknown_fixture(self):
        with pytest.raises(KeyError):
            load_fixture("FX-NONE")
        with pytest.raises(KeyError):
            provenance("FX-NONE")

    @pytest.mark.parametrize("name", FIXTURES)
    def test_every_value_has_provenance(self, name):
        prov = provenance(name)
        assert set(prov) == EXPECTED_KEYS
        assert all(isinstance(p, str) and p for p in prov.values())

    @pytest.mark.parametrize("name", FIXTURES)
    def test_source_file_exists(self, name):
        assert fixture_path(name).is_file()
        assert fixture_source(name).strip()

    @pytest.mark.parametrize("name", FIXTURES)
    def test_description(self, name):
        assert manifest()["fixtures"][name]["description"]


class TestLoadFixture:
    def test_diamond(self):
        program, expected = load_fixture("FX-DIAMOND")
        assert isinstance(program, Program)
        assert (expected["vertices"], expected["edges"], expected["betti1"]) == (4, 4, 0)

    def test_ping(self):
        _, expected = load_fixture("FX-PING")
        assert expected["vertices"] == 1
        assert expected["betti1_fair"] == 1
        assert expected["exit_code"] == 11


class TestReproduction:
    """Each frozen expectation is recomputed by the pipeline and its oracle."""

    @pytest.mark.parametrize("name", FIXTURES)
    def test_counts(self, name):
        _, expected = load_fixture(name)
        c = enumerate_program(load_fixture(name)[0])
        g = fixture_graph(name)
        assert expected["vertices"] == g.num_vertices == c.vertices
        assert expected["edges"] == len(g.edges) == c.edges

    @pytest.mark.parametrize("name", FIXTURES)
    def test_homology(self, name):
        _, expected = load_fixture(name)
        g = fixture_graph(name)
        k = build_complex(g)
        assert expected["betti1"] == homology_h1(k).betti == dense_homology_oracle(k)[0]
        bare = build_complex(g, "none")
        assert expected["betti1_unfilled"] == homology_h1(bare).betti == dense_homology_oracle(bare)[0]

    @pytest.mark.parametrize("name", FIXTURES)
    def test_report_fields(self, name):
        _, expected = load_fixture(name)
        r = report_for(name)
        assert [a["kind"] for a in r["attractors"]] == expected["attractors"]
        assert r["fair-homology"]["betti1"] == expected["betti1_fair"]
        assert r["fair-homology"]["livelock_rank"] == expected["livelock_rank"]
        assert [p[:2] for p in r["persistence"]["pairs"]] == expected["persistence"]
        assert r["verdict"]["exit_code"] == expected["exit_code"]

    @pytest.mark.parametrize("name", FIXTURES)
    def test_livelock_iff_oracle_fair_cycle(self, name):
        _, expected = load_fixture(name)
        _, witnesses = lasso_fair_oracle(fixture_graph(name))
        assert (expected["livelock_rank"] > 0) == bool(witnesses)
