import json

import pytest

from wholediff.cli import main

MASS_SHELL_SRC = """\
independent p1 p2 p3
param m
dependent E
constraint E^2 - p1^2 - p2^2 - p3^2 - m^2 = 0 solves E
representation dE/dp1 = p1/E
representation dE/dp2 = p2/E
representation dE/dp3 = p3/E
opaque f(p1,p2,p3,E)
"""


@pytest.fixture()
def ctx_file(tmp_path):
    path = tmp_path / "massshell.ctx"
    path.write_text(MASS_SHELL_SRC)
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_derive_whole(ctx_file, capsys):
    code, out, _ = run(capsys, "derive", ctx_file, "--expr", "f", "--wrt", "p1")
    assert code == 0
    assert out.strip() == "p1*D[f,E]/E + D[f,p1]"


def test_derive_representation(ctx_file, capsys):
    code, out, _ = run(capsys, "derive", ctx_file, "--expr", "E", "--wrt", "p1")
    assert code == 0
    assert out.strip() == "p1/E"


def test_derive_plain_flag(ctx_file, capsys):
    code, out, _ = run(capsys, "derive", ctx_file, "--expr", "E", "--wrt", "p1", "--plain")
    assert code == 0
    assert out.strip() == "0"


def test_derive_unknown_variable_exit2(ctx_file, capsys):
    code, _, err = run(capsys, "derive", ctx_file, "--expr", "f", "--wrt", "q")
    assert code == 2
    assert "q" in err and "at 0..1" in err


def test_commutator_apply(ctx_file, capsys):
    code, out, _ = run(
        capsys, "commutator", ctx_file, "--a", "W[p1]", "--b", "D[E]", "--apply", "f"
    )
    assert code == 0
    assert out.strip() == "p1*D[f,E]/E^2"


def test_commutator_commuting_zero(ctx_file, capsys):
    code, out, _ = run(
        capsys, "commutator", ctx_file, "--a", "W[p1]", "--b", "W[p2]", "--apply", "f"
    )
    assert code == 0
    assert out.strip() == "0"


def test_commutator_feynman(ctx_file, capsys):
    code, out, _ = run(
        capsys,
        "commutator", ctx_file,
        "--a", "W[p1]", "--b", "W[p2]", "--apply", "f",
        "--ordering", "paper", "--feynman",
    )
    assert code == 0
    assert out.strip() == "i*B3*D[f,E]/E^3"


def test_commutator_operator_output(ctx_file, capsys):
    code, out, _ = run(capsys, "commutator", ctx_file, "--a", "W[p1]", "--b", "D[E]")
    assert code == 0
    assert "W[p1]" in out and "D[E]" in out


def test_scenario_mass_shell(tmp_path, capsys):
    code, out, _ = run(
        capsys,
        "scenario", "mass-shell",
        "--dim", "3", "--feynman", "--ordering", "paper",
        "--out", str(tmp_path), "--format", "json",
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["command"] == "scenario"
    assert (tmp_path / "mass-shell.ctx").exists()
    entries = doc["result"]["position_commutators"]
    assert len(entries) == 4 and entries[0][0] == "0"


def test_scenario_retarded(tmp_path, capsys):
    code, out, _ = run(
        capsys,
        "scenario", "retarded", "--trajectory", "0.5*tp",
        "--out", str(tmp_path), "--format", "json",
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["result"]["representations"]["dtp/dt"] == "2"
    assert doc["result"]["representations"]["dtp/dx"] == "-2"
    assert (tmp_path / "retarded.ctx").exists()


def test_scenario_unknown_exit2(capsys):
    code, _, err = run(capsys, "scenario", "unknown")
    assert code == 2


def test_scenario_retarded_superluminal_exit3(tmp_path, capsys):
    code, _, err = run(
        capsys, "scenario", "retarded", "--trajectory", "2*tp", "--out", str(tmp_path)
    )
    assert code == 3


def test_verify_pass(ctx_file, capsys):
    code, out, _ = run(
        capsys,
        "verify", ctx_file,
        "--lhs", "D[f,p1] + p1*D[f,E]/E",
        "--rhs", "D[f,p1] + D[f,E]*p1/E",
        "--samples", "20",
    )
    assert code == 0
    assert "verdict: pass" in out


def test_verify_fail_exit1(ctx_file, capsys):
    code, out, _ = run(
        capsys, "verify", ctx_file, "--lhs", "p1", "--rhs", "p2", "--samples", "10"
    )
    assert code == 1
    assert "verdict: fail" in out


def test_verify_numeric_error_exit4(ctx_file, capsys):
    code, _, err = run(
        capsys, "verify", ctx_file, "--lhs", "1/(E-E)", "--rhs", "p1", "--samples", "3"
    )
    assert code == 4


def test_verify_json_byte_stable(ctx_file, capsys):
    argv = [
        "verify", ctx_file,
        "--lhs", "p1*D[f,E]/E^2", "--rhs", "p1*D[f,E]/E^2",
        "--samples", "25", "--seed", "7", "--format", "json",
    ]
    code1, out1, _ = run(capsys, *argv)
    code2, out2, _ = run(capsys, *argv)
    assert code1 == code2 == 0
    assert out1 == out2
    doc = json.loads(out1)
    assert set(doc) == {"command", "context", "result"}
    assert {"samples", "failures", "max_abs_err", "max_rel_err", "verdict"} <= set(
        doc["result"]
    )


def test_invalid_context_exit3(tmp_path, capsys):
    bad = tmp_path / "bad.ctx"
    bad.write_text(MASS_SHELL_SRC + "dependent E\n")
    code, _, err = run(capsys, "derive", str(bad), "--expr", "E", "--wrt", "p1")
    assert code == 3


def test_malformed_context_exit2(tmp_path, capsys):
    bad = tmp_path / "bad.ctx"
    bad.write_text("frobnicate\n")
    code, _, _ = run(capsys, "derive", str(bad), "--expr", "E", "--wrt", "p1")
    assert code == 2


def test_missing_subcommand_exit2(capsys):
    assert run(capsys)[0] == 2


def test_bad_flag_exit2(ctx_file, capsys):
    code, _, _ = run(capsys, "derive", ctx_file, "--expr", "E", "--wrt", "p1", "--format", "xml")
    assert code == 2
