from __future__ import annotations

import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from ccsni.cli import main, run_corpus

CORPUS = Path(__file__).resolve().parent.parent / "corpus" / "paper"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def write(tmp_path):
    def _write(name, text):
        f = tmp_path / name
        f.write_text(text, encoding="utf-8")
        return f
    return _write


def test_secure_pbndc_insecure(capsys):
    code, out, _ = run(capsys, "secure", "--property", "pbndc", CORPUS / "high_then_low.ccsni")
    assert code == 1
    assert json.loads(out)["status"] == "insecure"


def test_typecheck_asym(capsys):
    code, out, _ = run(capsys, "typecheck", "--system", "asym", CORPUS / "out_h_out_l.ccsni")
    assert code == 0
    assert json.loads(out)["principal"] == {"flag": "T", "read": "l", "write": "l"}


def test_bisim_reflexive(capsys, write):
    a = write("a.ccsni", "main = a_h(x).'b_l<x>.0 | 'c_l<u>.0")
    code, out, _ = run(capsys, "bisim", "--kind", "weak", a, a)
    assert code == 0 and json.loads(out)["equivalent"] is True


def test_bisim_negative(capsys, write):
    a = write("a.ccsni", "main = 'b_l<u>.0")
    b = write("b.ccsni", "main = 0")
    code, out, _ = run(capsys, "bisim", "--kind", "uptohigh", a, b)
    assert code == 1 and json.loads(out)["counterexample"]


def test_parse_round_trip(capsys, write):
    f = write("p.ccsni", "agent A() = 'a_h<u>.A()\nmain = A() | b_l.0")
    code, out, _ = run(capsys, "parse", f)
    assert code == 0
    assert "agent A() = 'a_h<u>.A()" in out


def test_lts_formats(capsys):
    code, out, _ = run(capsys, "lts", "--format", "json", CORPUS / "high_then_low.ccsni")
    assert code == 0 and len(json.loads(out)["states"]) == 3
    code, out, _ = run(capsys, "lts", "--format", "dot", CORPUS / "high_then_low.ccsni")
    assert code == 0 and out.startswith("digraph")


def test_state_cap_exit_code(capsys, write):
    f = write("big.ccsni", "agent A() = 'a_h<u>.(A() | A())\nmain = A()")
    code, _, err = run(capsys, "lts", "--max-states", "20", f)
    assert code == 3 and "cap" in err
    code, _, _ = run(capsys, "secure", "--property", "pbndc", "--max-states", "20", f)
    assert code == 3


def test_input_errors(capsys, write, tmp_path):
    bad = write("bad.ccsni", "main = a_h(x).")
    code, _, err = run(capsys, "parse", bad)
    assert code == 2 and "bad.ccsni:1:" in err
    code, _, err = run(capsys, "parse", tmp_path / "missing.ccsni")
    assert code == 2
    wf = write("wf.ccsni", "main = B()")
    code, _, err = run(capsys, "typecheck", wf)
    assert code == 2 and "UndefinedAgent" in err


def test_usage_errors(capsys):
    assert run(capsys, "bisim", "--kind", "strong", "a", "b")[0] == 2
    assert run(capsys)[0] == 2
    assert run(capsys, "lts", "--max-states", "0", "x.ccsni")[0] == 2
    assert run(capsys, "secure", "--property", "bndc", "--depth", "0", "x.ccsni")[0] == 2


def test_attacker_file(capsys, write):
    att = write("att.txt", "'a_h<e>.0")
    code, out, _ = run(capsys, "secure", "--property", "bndc", "--attacker", att,
                       CORPUS / "high_then_low.ccsni")
    assert code == 1 and json.loads(out)["witness"] == "'a_h<e>.0"
    low = write("low.txt", "'b_l<e>.0")
    code, _, err = run(capsys, "secure", "--property", "bndc", "--attacker", low,
                       CORPUS / "high_then_low.ccsni")
    assert code == 2 and "not high" in err


def test_bndc_no_counterexample_exit(capsys):
    code, out, _ = run(capsys, "secure", "--property", "bndc", "--depth", "2",
                       CORPUS / "high_or_low.ccsni")
    assert code == 0
    assert json.loads(out)["status"] == "no-counterexample-up-to-bound"


def test_levels_sidecar(capsys, write):
    f = write("d.ccsni", "main = a_x(v).'b_top<v>.0")
    write("d.levels.json", json.dumps({"elements": ["bot", "x", "y", "top"],
                                       "covers": [["bot", "x"], ["bot", "y"], ["x", "top"], ["y", "top"]]}))
    code, out, _ = run(capsys, "typecheck", "--system", "asym", f)
    assert code == 0
    assert json.loads(out)["principal"] == {"flag": "T", "read": "x", "write": "top"}
    code, _, err = run(capsys, "secure", "--property", "pbndc", f)
    assert code == 2 and "two-level" in err


def test_bad_sidecar(capsys, write):
    f = write("d.ccsni", "main = 0")
    write("d.levels.json", "{")
    assert run(capsys, "parse", f)[0] == 2


def test_text_output(capsys):
    code, out, _ = run(capsys, "typecheck", "--output", "text", CORPUS / "high_then_low.ccsni")
    assert code == 1 and "typeable: no" in out


class TestCorpus:
    def test_shipped_corpus_matches(self, capsys):
        code, out, _ = run(capsys, "corpus", CORPUS, "--report", "json", "--no-timing")
        report = json.loads(out)
        assert code == 0 and report["mismatches"] == []
        assert len(report["entries"]) == 8

    def test_deterministic(self, capsys):
        first = run(capsys, "corpus", CORPUS, "--report", "json", "--no-timing")[1]
        second = run(capsys, "corpus", CORPUS, "--report", "json", "--no-timing", "--jobs", "2")[1]
        assert first == second
        assert "seconds" not in first

    def test_empty_dir(self, capsys, tmp_path):
        code, out, _ = run(capsys, "corpus", tmp_path, "--report", "json")
        assert code == 0 and json.loads(out)["entries"] == []

    def test_wrong_expectation(self, capsys, tmp_path):
        shutil.copy(CORPUS / "high_then_low.ccsni", tmp_path)
        (tmp_path / "expectations.json").write_text(json.dumps({"high_then_low.ccsni": {"pbndc": "secure"}}))
        code, out, _ = run(capsys, "corpus", tmp_path)
        assert code == 1 and "MISMATCH" in out

    def test_manifest_errors(self, capsys, tmp_path):
        shutil.copy(CORPUS / "high_then_low.ccsni", tmp_path)
        assert run(capsys, "corpus", tmp_path)[0] == 2  # no manifest
        (tmp_path / "expectations.json").write_text("[]")
        assert run(capsys, "corpus", tmp_path)[0] == 2
        (tmp_path / "expectations.json").write_text(json.dumps({"nope.ccsni": {}}))
        assert run(capsys, "corpus", tmp_path)[0] == 2

    def test_timings_present_by_default(self):
        report = run_corpus(CORPUS)
        assert all("seconds" in e for e in report["entries"])


def test_experiment(capsys):
    code, out, _ = run(capsys, "experiment", "typed-context-closure", CORPUS / "high_or_low.ccsni")
    data = json.loads(out)
    assert code == 0
    assert data["program_pbndc"] == "secure" and data["contexts_checked"] > 0
    assert data["findings"] == []


def test_console_script_entry():
    out = subprocess.run([sys.executable, "-m", "ccsni.cli", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and "kernels:" in out.stdout
