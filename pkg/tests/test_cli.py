import json
import subprocess
import sys

import pytest

from singulock.cli import run
from singulock.corpus import fixture_path, load_fixture
from singulock.report import (
    EXIT_BOTH,
    EXIT_BOUND,
    EXIT_DEADLOCK,
    EXIT_FAULT_ONLY,
    EXIT_INPUT,
    EXIT_LIVELOCK,
    EXIT_OK,
    REPORT_SCHEMA,
)

from support import FIXTURES

SECTIONS = {
    "schema",
    "header",
    "graph-stats",
    "attractors",
    "basins",
    "fault-traps",
    "fair-analysis",
    "homology",
    "fair-homology",
    "persistence",
    "future-classes",
    "severity",
    "caveats",
    "verdict",
}


def analyze(capsys, *argv):
    code = run(["analyze", *map(str, argv)])
    out = capsys.readouterr()
    return code, out.out, out.err


class TestExitCodes:
    @pytest.mark.parametrize("name", FIXTURES)
    def test_fixture_exit_code(self, capsys, name):
        code, out, _ = analyze(capsys, name)
        assert code == load_fixture(name)[1]["exit_code"]
        assert json.loads(out)["verdict"]["exit_code"] == code

    def test_named_codes(self):
        assert (EXIT_OK, EXIT_DEADLOCK, EXIT_LIVELOCK, EXIT_BOTH, EXIT_FAULT_ONLY) == (0, 10, 11, 12, 13)
        assert (EXIT_INPUT, EXIT_BOUND) == (2, 3)

    def test_missing_file(self, capsys):
        code, out, err = analyze(capsys, "missing.ccs")
        assert code == EXIT_INPUT
        assert out == ""
        assert "missing.ccs" in err

    def test_parse_error(self, capsys, tmp_path):
        bad = tmp_path / "bad.ccs"
        bad.write_text("main = (skip\n")
        code, _, err = analyze(capsys, bad)
        assert code == EXIT_INPUT
        assert "bad.ccs:" in err

    def test_undeclared_channel(self, capsys, tmp_path):
        bad = tmp_path / "undeclared.ccs"
        bad.write_text("main = z!1; skip\n")
        assert analyze(capsys, bad)[0] == EXIT_INPUT

    def test_bad_bound(self, capsys):
        assert analyze(capsys, "FX-PING", "--max-states", "0")[0] == EXIT_INPUT

    def test_truncation(self, capsys):
        code, out, err = analyze(capsys, "FX-PHIL3", "--max-states", "20")
        assert code == EXIT_BOUND
        doc = json.loads(out)
        assert doc["caveats"]["truncated"] and doc["graph-stats"]["truncated"]
        assert "bound" in err

    def test_fault_only(self, capsys, tmp_path):
        src = tmp_path / "fault.ccs"
        src.write_text("res r; main = release(r); skip\n")
        code, out, _ = analyze(capsys, src)
        assert code == EXIT_FAULT_ONLY
        assert json.loads(out)["fault-traps"]

    def test_clean_terminating_program(self, capsys, tmp_path):
        src = tmp_path / "ok.ccs"
        src.write_text("chan a; main = (a!1; skip) || (a?x; skip)\n")
        assert analyze(capsys, src)[0] == EXIT_OK


class TestReport:
    @pytest.mark.parametrize("name", FIXTURES)
    def test_sections(self, capsys, name):
        _, out, _ = analyze(capsys, name)
        doc = json.loads(out)
        assert set(doc) == SECTIONS
        assert doc["schema"] == REPORT_SCHEMA

    @pytest.mark.parametrize("name", FIXTURES)
    def test_byte_identical_runs(self, capsys, name):
        assert analyze(capsys, name)[1] == analyze(capsys, name)[1]

    @pytest.mark.parametrize("name", FIXTURES)
    def test_exit_code_sound(self, capsys, name):
        code, out, _ = analyze(capsys, name)
        doc = json.loads(out)
        deadlock = any(a["deadlock"] for a in doc["attractors"])
        livelock = doc["fair-homology"]["livelock_rank"] > 0
        assert deadlock == doc["verdict"]["deadlock"]
        assert livelock == doc["verdict"]["livelock"]
        assert code == {(False, False): EXIT_OK, (True, False): EXIT_DEADLOCK, (False, True): EXIT_LIVELOCK, (True, True): EXIT_BOTH}[deadlock, livelock]

    def test_file_path_and_fixture_name_agree(self, capsys):
        by_name = json.loads(analyze(capsys, "FX-DIAMOND")[1])
        by_path = json.loads(analyze(capsys, fixture_path("FX-DIAMOND"))[1])
        del by_name["header"], by_path["header"]
        assert by_name == by_path

    def test_ccs_suffix_resolves_fixture(self, capsys):
        assert analyze(capsys, "FX-PING.ccs")[0] == EXIT_LIVELOCK

    def test_seed_recorded(self, capsys, monkeypatch):
        monkeypatch.setenv("SINGULOCK_SEED", "1234")
        assert json.loads(analyze(capsys, "FX-PING")[1])["header"]["seed"] == "1234"

    def test_seed_absent(self, capsys, monkeypatch):
        monkeypatch.delenv("SINGULOCK_SEED", raising=False)
        assert json.loads(analyze(capsys, "FX-PING")[1])["header"]["seed"] is None

    def test_config_echoed(self, capsys):
        doc = json.loads(analyze(capsys, "FX-DIAMOND", "--fairness", "strong", "--cells", "squares")[1])
        assert doc["header"]["config"]["fairness"] == "strong"
        assert doc["header"]["config"]["cells"] == "squares"

    def test_text_format(self, capsys):
        code, out, _ = analyze(capsys, "FX-PHIL2", "--format", "text")
        assert code == EXIT_DEADLOCK
        assert "deadlock" in out.lower()
        with pytest.raises(json.JSONDecodeError):
            json.loads(out)

    def test_cells_none_keeps_diamond_hole(self, capsys):
        doc = json.loads(analyze(capsys, "FX-DIAMOND", "--cells", "none")[1])
        assert doc["homology"]["betti1"] == 1
        assert doc["fair-homology"]["livelock_rank"] == 0

    def test_future_depth(self, capsys):
        doc = json.loads(analyze(capsys, "FX-DIAMOND", "--future-depth", "2")[1])
        root = doc["future-classes"][0]
        assert (root["origin"], root["depth"], root["classes"]) == ("root", 2, 1)


class TestExports:
    def test_dot_and_csv(self, capsys, tmp_path):
        dot, csv = tmp_path / "g.dot", tmp_path / "p.csv"
        code, out, _ = analyze(capsys, "FX-PING", "--dot", dot, "--csv", csv)
        assert code == EXIT_LIVELOCK
        assert dot.read_text().startswith("digraph")
        assert csv.read_text().splitlines() == ["birth,death,representative", "1,inf,0"]
        assert json.loads(out)

    def test_explore_json(self, capsys):
        assert run(["explore", "FX-DIAMOND"]) == EXIT_OK
        doc = json.loads(capsys.readouterr().out)
        assert len(doc["vertices"]) == 4

    def test_explore_text(self, capsys):
        run(["explore", "FX-PHIL2", "--format", "text"])
        assert capsys.readouterr().out == "23 states, 26 transitions\n"

    def test_explore_truncated(self, capsys):
        assert run(["explore", "FX-PHIL3", "--max-states", "5"]) == EXIT_BOUND

    def test_filtration(self, capsys):
        assert run(["filtration", "FX-PING"]) == EXIT_OK
        assert capsys.readouterr().out.splitlines()[1] == "1,inf,0"

    def test_filtration_kmax(self, capsys):
        run(["filtration", "FX-DIAMOND", "--cells", "squares", "--kmax", "1"])
        assert capsys.readouterr().out.splitlines() == ["birth,death,representative"]

    def test_export_dot(self, capsys):
        assert run(["export-dot", "FX-DIAMOND"]) == EXIT_OK
        assert capsys.readouterr().out.startswith("digraph")

    def test_module_entry_point(self):
        proc = subprocess.run(
            [sys.executable, "-m", "singulock", "analyze", "FX-PHIL2"], capture_output=True, text=True, timeout=60
        )
        assert proc.returncode == EXIT_DEADLOCK
        assert json.loads(proc.stdout)["verdict"]["deadlock"] is True

    def test_usage_error(self, capsys):
        with pytest.raises(SystemExit) as info:
            run(["frobnicate"])
        assert info.value.code == 2
