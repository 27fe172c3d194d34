import io
import json
import subprocess
import sys

import pytest

from hcpnkit.cli import run
from tests.helpers import FIXTURES, PRODUCER


def cli(*argv, stdin=""):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err, io.StringIO(stdin))
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def producer(tmp_path):
    p = tmp_path / "producer.hcpn"
    p.write_text(PRODUCER)
    return str(p)


def test_validate_ok():
    code, out, _ = cli("validate", "--builtin", "atc_metaverse")
    assert code == 0 and "ok" in out


def test_validate_reports_diagnostics(tmp_path):
    bad = tmp_path / "bad.hcpn"
    bad.write_text("colorset INT = int; var x : INT; main N;\n"
                   "page N { place p : INT; trans t; arc t -> p : 1`x; }\n")
    code, out, _ = cli("validate", str(bad))
    assert code == 2 and "uncovered variable" in out


def test_missing_file():
    code, _, err = cli("statespace", "missing.hcpn")
    assert code == 2 and "not found" in err


@pytest.mark.parametrize("argv", [
    [], ["frobnicate"], ["analyze"], ["analyze", "--builtin", "nope"],
    ["analyze", "--builtin", "atc_metaverse", "--input", "4"],
    ["sim", "--builtin", "atc_metaverse", "--steps", "-1"],
    ["check", "--builtin", "atc_metaverse"],
])
def test_usage_errors(argv):
    assert cli(*argv)[0] == 4


def test_budget_exit(producer):
    code, out, err = cli("statespace", producer, "--max-nodes", "100", "--format", "json")
    report = json.loads(out)
    assert code == 3 and report["exhausted"] is True and report["nodes"] == 100
    assert "budget" in err


def test_analyze_json_round_trip():
    code, out, _ = cli("analyze", "--builtin", "atc_metaverse", "--input", "3", "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert list(data)[:4] == ["nodes", "edges", "exhausted", "initial"]
    assert "ATC_Metaverse.Cloud_Server.Process_Results" in data["deadTransitions"]
    assert json.dumps(data, indent=2) + "\n" == out or json.dumps(data, indent=2) == out.rstrip("\n")


def test_analyze_text():
    code, out, _ = cli("analyze", "--builtin", "atc_metaverse", "--input", "2")
    assert code == 0 and out.startswith("nodes: ")


def test_output_is_byte_stable():
    runs = {cli("analyze", "--builtin", "atc_metaverse", "--input", "1", "--format", "json",
                "--workers", str(w))[1] for w in (1, 2, 8)}
    assert len(runs) == 1


def test_files_written(tmp_path):
    dot, js = tmp_path / "g.dot", tmp_path / "r.json"
    code, _, _ = cli("statespace", str(FIXTURES / "twin_workers.hcpn"), "--dot", str(dot),
                     "--json", str(js))
    assert code == 0
    assert dot.read_text().startswith("digraph")
    assert json.loads(js.read_text())["nodes"] == 64
    assert [p.name for p in tmp_path.iterdir() if p.name.startswith(".")] == []


@pytest.mark.parametrize("script, cmd", [("fig13", 0), ("fig13", 1), ("fig14", 2), ("fig15", 5)])
def test_check_builtin_scripts(script, cmd):
    code, out, _ = cli("check", "--builtin", "atc_metaverse", "--input", str(cmd),
                       "--props", f"builtin:{script}")
    assert code == 0, out


def test_check_false_property():
    code, _, _ = cli("check", "--builtin", "atc_metaverse", "--input", "0", "--props", "builtin:fig15")
    assert code == 1


def test_check_json():
    code, out, _ = cli("check", "--builtin", "atc_metaverse", "--input", "2",
                       "--props", "builtin:fig14", "--format", "json")
    assert code == 0
    assert "witness" in out


def test_check_bad_script(tmp_path):
    p = tmp_path / "x.ctl"
    p.write_text('prop X := POS(NF("a", mark("Nowhere.x") == empty));')
    assert cli("check", "--builtin", "atc_metaverse", "--props", str(p))[0] == 2


def test_check_budget(producer, tmp_path):
    p = tmp_path / "x.ctl"
    p.write_text("prop X := TT; eval X at init;")
    assert cli("check", producer, "--props", str(p), "--max-nodes", "10")[0] == 3


def test_sim_is_reproducible():
    a = cli("sim", "--builtin", "atc_metaverse", "--input", "2", "--seed", "9", "--steps", "40")
    b = cli("sim", "--builtin", "atc_metaverse", "--input", "2", "--seed", "9", "--steps", "40")
    assert a == b and a[0] == 0
    assert "recommendation" in a[1]


def test_step_session():
    code, out, _ = cli("step", str(FIXTURES / "twin_workers.hcpn"), stdin="1\nm\nu\nu\n9\nq\n")
    assert code == 0
    assert "fired Shop.A.take" in out
    assert "undone" in out and "nothing to undo" in out and "out of range" in out


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "hcpnkit.cli", "analyze", "--builtin",
                           "atc_metaverse", "--input", "4"], capture_output=True, text=True)
    assert proc.returncode == 4
