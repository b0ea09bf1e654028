"""Command-line interface: flags, exit codes, report files, determinism."""

import json

import pytest

from phmorph.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_list_text(capsys):
    code, out = run(capsys, "list")
    assert code == 0
    assert "flat-projection-4-2" in out
    assert "hopf" in out


def test_list_json(capsys):
    code, out = run(capsys, "list", "--format", "json")
    assert code == 0
    data = json.loads(out)
    names = [row["name"] for row in data]
    assert names == sorted(names)
    assert "nonphwc-anisotropic" in names


def test_verify_pass_exit_zero(capsys):
    code, out = run(capsys, "verify", "--scenario", "flat-projection-4-2",
                    "--sigma", "exp(0.3*x1)", "--samples", "4", "--seed", "1")
    assert code == 0
    assert "verdict" in out or "pass" in out


def test_verify_failure_exit_one(capsys):
    # absurdly tight FD tolerance forces residual failures
    code, out = run(capsys, "verify", "--scenario", "flat-projection-6-4",
                    "--sigma", "exp(0.3*x1)", "--rho", "1+0.2*x5^2",
                    "--samples", "3", "--seed", "1", "--tol-fd", "1e-18")
    assert code == 1


def test_verify_unknown_scenario_exit_two(capsys):
    code, _ = run(capsys, "verify", "--scenario", "nope")
    assert code == 2


def test_verify_bad_expression_exit_two(capsys):
    code, _ = run(capsys, "verify", "--scenario", "flat-projection-4-2",
                  "--sigma", "exp(")
    assert code == 2


def test_verify_bad_config_exit_two(capsys):
    code, _ = run(capsys, "verify", "--scenario", "flat-projection-4-2",
                  "--samples", "0")
    assert code == 2


def test_verify_rho_and_special_sigma_conflict(capsys):
    code, _ = run(capsys, "verify", "--scenario", "flat-projection-6-4",
                  "--rho", "2", "--special-sigma", "1+0.1*x1")
    assert code == 2


def test_identity_subset_selector(capsys):
    code, out = run(capsys, "verify", "--scenario", "flat-projection-4-2",
                    "--samples", "3", "--identities",
                    "tension-transform,koszul-horizontal", "--format", "json")
    assert code == 0
    data = json.loads(out)
    ran = {row["name"] for row in data["per_identity"]}
    assert ran == {"tension-transform", "koszul-horizontal"}


def test_unknown_identity_exit_two(capsys):
    code, _ = run(capsys, "verify", "--scenario", "flat-projection-4-2",
                  "--identities", "tension-warp")
    assert code == 2


def test_json_report_schema(tmp_path, capsys):
    report = tmp_path / "out.json"
    code, _ = run(capsys, "verify", "--scenario", "curved-fibers-nonharmonic",
                  "--sigma", "1+0.1*x1^2", "--samples", "4",
                  "--report", str(report))
    assert code == 0
    data = json.loads(report.read_text())
    assert data["schema_version"] == 1
    assert data["scenario"] == "curved-fibers-nonharmonic"
    assert data["verdict"] == "pass"
    for key in ("config", "per_identity", "skipped_identities", "flags",
                "warnings"):
        assert key in data
    for row in data["per_identity"]:
        assert {"name", "passed", "max_abs_residual", "max_rel_residual",
                "samples_pass", "samples_fail", "samples_error"} <= set(row)


def test_reports_byte_identical(tmp_path, capsys):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for path in paths:
        code, _ = run(capsys, "verify", "--scenario", "holomorphic-poly",
                      "--sigma", "exp(0.2*x1)", "--rho", "1+0.1*x2^2",
                      "--samples", "5", "--seed", "9",
                      "--report", str(path))
        assert code == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_csv_format(capsys):
    code, out = run(capsys, "verify", "--scenario", "flat-projection-4-2",
                    "--samples", "3", "--format", "csv")
    assert code == 0
    header = out.splitlines()[0]
    assert header.startswith("identity,")
    assert "max_rel_residual" in header
