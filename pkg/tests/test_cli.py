import json
import subprocess
import sys

import pytest

from rmpst.cli import main

from conftest import HAVE_SOLVER

SOLVER_ARGS = [] if HAVE_SOLVER else ["--solver", "enumerate"]


def run(*args):
    return subprocess.run([sys.executable, "-m", "rmpst.cli", *args], capture_output=True, text=True, timeout=300)


def test_missing_protocol_is_a_usage_error():
    assert run("check").returncode == 2


def test_unknown_file_is_a_usage_error(capsys):
    assert main(["check", "no_such_file.rscr"]) == 2
    assert "no such file" in capsys.readouterr().err


def test_check_bundled_example(capsys):
    assert main(["check", "higherlower", *SOLVER_ARGS]) == 0
    assert "well-formed" in capsys.readouterr().out


def test_trace_eq_reports_equal():
    res = run("trace-eq", "g1", "--depth", "4", *SOLVER_ARGS)
    assert res.returncode == 0
    assert "equal" in res.stdout


def test_progress_json(capsys):
    assert main(["progress", "g3", "--depth", "5", "--json", *SOLVER_ARGS]) == 0
    out = capsys.readouterr().out
    data = json.loads(out[out.index("{"):out.rindex("}") + 1])
    assert data["ok"] is True and data["depth"] == 5


def test_project_single_role(capsys):
    assert main(["project", "g1", "--role", "C", *SOLVER_ARGS]) == 0
    assert capsys.readouterr().out.strip() == "C: <Fst>(x:int) . B ? Snd(y:int{x = y}) . D ! Trd(z:int{x = z}) . end"


def test_unknown_role_is_a_usage_error():
    assert main(["project", "g1", "--role", "Z", *SOLVER_ARGS]) == 2


def test_fsm_dot(capsys):
    assert main(["fsm", "higherlower", "--role", "C", "--dot", *SOLVER_ARGS]) == 0
    assert capsys.readouterr().out.startswith('digraph "C"')


def test_gen_writes_into_directory(tmp_path):
    assert main(["gen", "higherlower", "--role", "B", "--out", str(tmp_path), *SOLVER_ARGS]) == 0
    files = list(tmp_path.glob("*.py"))
    assert len(files) == 1 and "class Callbacks(Protocol)" in files[0].read_text()


def test_gen_without_role_is_a_usage_error():
    assert main(["gen", "higherlower", *SOLVER_ARGS]) == 2


def test_unprojectable_file_fails(tmp_path, capsys):
    src = tmp_path / "bad.rscr"
    src.write_text("global protocol Bad(role A, role B, role C, role D) {\n"
                   "  choice at A { a(x:int) from A to B; x(u:int) from B to C; }\n"
                   "  or { b(x:int) from A to B; y(u:int) from B to D; }\n}\n")
    assert main(["check", str(src), *SOLVER_ARGS]) == 1
    assert "not well-formed" in capsys.readouterr().out


def test_syntax_error_fails_with_position(tmp_path, capsys):
    src = tmp_path / "broken.rscr"
    src.write_text("global protocol P(role A, role B){ m(x:int) from A to B }")
    assert main(["check", str(src)]) == 1
    assert "SyntaxError" in capsys.readouterr().err


def test_empty_payload_is_a_warning_unless_strict(tmp_path, capsys):
    src = tmp_path / "empty.rscr"
    src.write_text("global protocol E(role A, role B){ m(x:int{x > 0 && x < 0}) from A to B; }")
    assert main(["check", str(src), *SOLVER_ARGS]) == 0
    assert "warning" in capsys.readouterr().out
    assert main(["check", str(src), "--strict", *SOLVER_ARGS]) == 1


@pytest.mark.parametrize("name", ["higherlower", "pingpong1"])
def test_simulate_bundled_strategy(name, capsys):
    assert main(["simulate", name, "--seed", "1", *SOLVER_ARGS]) == 0
    assert "replays against the projected configuration" in capsys.readouterr().out
