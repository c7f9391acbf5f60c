import json
import math

import pytest

from zerosphere import __version__
from zerosphere.cli import EXIT_ERROR, EXIT_OK, EXIT_VIOLATED, main
from zerosphere.settings import generate_default_config


def write_job(tmp_path, **fields):
    raw = {"version": 1, "output": {"dir": "out"}}
    raw.update(fields)
    path = tmp_path / "job.json"
    path.write_text(json.dumps(raw))
    return path


def read_report(path):
    return json.loads(path.read_text())


def test_scan_sphere(tmp_path, capsys):
    path = write_job(
        tmp_path,
        command="scan",
        shape={"type": "sphere", "a": 1.0},
        quadrature={"n_theta": 32, "n_phi": 64},
        directions={"n_theta": 8, "n_phi": 16},
        k={"min": 3.0, "max": 3.3, "steps": 31},
    )
    assert main(["--config", str(path)]) == EXIT_OK
    report = read_report(tmp_path / "out" / "report.json")
    assert report["command"] == "scan"
    assert report["exit_code"] == EXIT_OK
    assert report["version"] == __version__
    assert report["candidates"][0]["k"] == pytest.approx(math.pi, abs=1e-7)
    assert len((tmp_path / "out" / "curve.csv").read_text().splitlines()) == 32
    assert "Wrote" in capsys.readouterr().out


def test_verify_sphere_consistent(tmp_path):
    path = write_job(
        tmp_path,
        command="verify-sphere",
        shape={"type": "sphere", "a": 1.0},
        k={"value": math.pi},
        options={"probes": 4},
    )
    assert main(["--config", str(path), "--quiet"]) == EXIT_OK
    assert read_report(tmp_path / "out" / "report.json")["verdict"] == "consistent"


def test_verify_sphere_off_zero_is_violated(tmp_path, capsys):
    path = write_job(
        tmp_path,
        command="verify-sphere",
        shape={"type": "sphere", "a": 1.0},
        k={"value": 1.0},
        options={"probes": 4},
    )
    assert main(["--config", str(path)]) == EXIT_VIOLATED
    assert "Verdict: violated" in capsys.readouterr().out
    assert read_report(tmp_path / "out" / "report.json")["exit_code"] == EXIT_VIOLATED


def test_verify_sphere_first_zeros(tmp_path):
    path = write_job(
        tmp_path,
        command="verify-sphere",
        shape={"type": "sphere", "a": 1.0},
        options={"n_zeros": 1, "probes": 4},
    )
    assert main(["--config", str(path), "--quiet"]) == EXIT_OK
    report = read_report(tmp_path / "out" / "report.json")
    assert report["k_values"] == [pytest.approx(math.pi)]
    assert len(report["jumps"][0]["records"]) == 4


def test_mesh_scan(tmp_path, icosphere_off):
    path = write_job(
        tmp_path,
        command="mesh-scan",
        shape={"type": "mesh", "path": icosphere_off.name},
        directions={"n_theta": 8, "n_phi": 16},
        k={"min": 2.5, "max": 3.8, "steps": 66},
    )
    assert main(["--config", str(path), "--quiet"]) == EXIT_OK
    report = read_report(tmp_path / "out" / "report.json")
    assert report["command"] == "mesh-scan"
    assert report["verdict"] == "consistent"
    assert report["details"]["mesh"]["triangles"] == 1280
    assert report["shape"] == {"type": "mesh"}


@pytest.mark.parametrize("threshold, code, verdict", [
    (1e-6, EXIT_OK, "consistent"),
    (1.0, EXIT_VIOLATED, "violated"),
])
def test_discriminate_ellipsoid(tmp_path, threshold, code, verdict):
    path = write_job(
        tmp_path,
        command="discriminate",
        shape={"type": "ellipsoid", "axes": [1.0, 1.0, 1.2]},
        quadrature={"n_theta": 48, "n_phi": 96},
        directions={"n_theta": 8, "n_phi": 16},
        k={"min": 2.0, "max": 4.0, "steps": 101},
        tolerances={"threshold": threshold},
    )
    assert main(["--config", str(path), "--quiet"]) == code
    report = read_report(tmp_path / "out" / "report.json")
    assert report["verdict"] == verdict
    assert report["exit_code"] == code
    assert (tmp_path / "out" / "curve.csv").exists()


def test_equivalence_sphere(tmp_path):
    path = write_job(
        tmp_path,
        command="equivalence",
        shape={"type": "sphere", "a": 1.0},
        directions={"n_theta": 8, "n_phi": 16},
        k={"values": [2.0, math.pi]},
    )
    assert main(["--config", str(path), "--quiet"]) == EXIT_OK
    report = read_report(tmp_path / "out" / "report.json")
    assert report["k_values"] == [2.0, math.pi]
    assert [pair["k"] for pair in report["details"]["pairs"]] == [2.0, math.pi]
    assert report["details"]["pairs"][1]["rho_F"] < 1e-9


def test_jump_report(tmp_path):
    path = write_job(
        tmp_path,
        command="jump",
        shape={"type": "sphere", "a": 1.0},
        k={"value": 2.0},
        options={"probes": 3, "c": 0.5},
    )
    assert main(["--config", str(path), "--quiet"]) == EXIT_OK
    report = read_report(tmp_path / "out" / "report.json")
    assert report["k_values"] == [2.0]
    assert report["checks"][0]["name"] == "jump"
    assert report["checks"][0]["status"] == "pass"
    assert len(report["jumps"][0]["records"]) == 3


def test_farfield_sphere(tmp_path, capsys):
    path = write_job(
        tmp_path,
        command="farfield",
        shape={"type": "sphere", "a": 1.0},
        k={"value": 2.0},
        options={"radii": [50.0, 500.0]},
    )
    assert main(["--config", str(path)]) == EXIT_OK
    assert "decay -" in capsys.readouterr().out
    report = read_report(tmp_path / "out" / "report.json")
    checks = {c["name"]: c for c in report["checks"]}
    assert checks["amplitude"]["status"] == "pass"
    assert checks["radiation_exponent"]["bound"] == -1.8
    assert report["details"]["vanishing"] is False


def test_farfield_at_zero_prints_vanishing(tmp_path, capsys):
    path = write_job(
        tmp_path,
        command="farfield",
        shape={"type": "sphere", "a": 1.0},
        k={"value": math.pi},
        options={"beta": [1.0, 0.0, 0.0]},
    )
    assert main(["--config", str(path)]) in (EXIT_OK, EXIT_VIOLATED)
    assert "decay vanishing" in capsys.readouterr().out
    report = read_report(tmp_path / "out" / "report.json")
    assert report["details"]["vanishing"] is True
    assert report["checks"][0]["name"] == "amplitude"
    assert report["checks"][0]["status"] == "pass"


@pytest.mark.slow
def test_theorem_b_ball(tmp_path):
    path = write_job(
        tmp_path,
        command="theorem-b",
        shape={"type": "sphere", "a": 1.0},
        directions={"n_theta": 8, "n_phi": 16},
    )
    assert main(["--config", str(path), "--quiet"]) == EXIT_OK
    report = read_report(tmp_path / "out" / "report.json")
    assert report["mode"] == "volume"
    assert report["k_values"] == [pytest.approx(4.493409457909064)]
    assert report["verdict"] == "consistent"


def test_recover_budget_exhausted(tmp_path):
    path = write_job(
        tmp_path,
        command="recover",
        shape={"type": "star", "a0": 1.0, "coeffs": [[2, 0, 0.05]]},
        k={"value": math.pi},
        options={"l_max": 2, "max_evaluations": 5},
    )
    assert main(["--config", str(path), "--quiet"]) == EXIT_VIOLATED
    assert (tmp_path / "out" / "trace.csv").read_text().startswith("iter,objective\n")
    assert read_report(tmp_path / "out" / "report.json")["converged"] is False


def test_out_overrides_job_dir(tmp_path):
    path = write_job(
        tmp_path,
        command="jump",
        shape={"type": "sphere", "a": 1.0},
        k={"value": 2.0},
        options={"probes": 2, "c": 0.5},
        output={"dir": "ignored", "formats": ["json"]},
    )
    assert main(["--config", str(path), "--out", str(tmp_path / "cli"), "--quiet"]) == EXIT_OK
    assert (tmp_path / "cli" / "report.json").exists()
    assert not (tmp_path / "ignored").exists()


# =============================================================================
# Errors
# =============================================================================

def test_invalid_job(tmp_path, capsys):
    path = write_job(tmp_path, command="scan", shape={"type": "sphere", "a": -1.0}, k={"value": 1.0})
    assert main(["--config", str(path)]) == EXIT_ERROR
    assert capsys.readouterr().err.startswith("Error:")
    assert not (tmp_path / "out").exists()


def test_missing_job(tmp_path, capsys):
    assert main(["--config", str(tmp_path / "absent.json")]) == EXIT_ERROR
    assert "not found" in capsys.readouterr().err


def test_unreadable_job(tmp_path, capsys):
    path = tmp_path / "job.json"
    path.write_bytes(b"\xff\xfe{}")
    assert main(["--config", str(path)]) == EXIT_ERROR
    assert main(["--config", str(tmp_path)]) == EXIT_ERROR
    err = capsys.readouterr().err
    assert err.count("Error: Cannot read job file") == 2


@pytest.mark.parametrize("mesh", ["bad.off", "."])
def test_unreadable_mesh(tmp_path, capsys, mesh):
    (tmp_path / "bad.off").write_bytes(b"OFF\n\xff\xfe 8 12 0\n")
    path = write_job(
        tmp_path,
        command="mesh-scan",
        shape={"type": "mesh", "path": mesh},
        k={"min": 2.0, "max": 3.0, "steps": 11},
    )
    assert main(["--config", str(path)]) == EXIT_ERROR
    assert capsys.readouterr().err.startswith("Error: Cannot read mesh file")
    assert not (tmp_path / "out").exists()


@pytest.mark.parametrize("command, quadrature", [
    ("scan", {"n_theta": 16}),
    ("discriminate", {"n_theta": 48, "n_phi": 48}),
    ("verify-sphere", {"n_theta": 16}),
    ("jump", {"n_theta": 16}),
])
def test_under_resolved_orders(tmp_path, capsys, command, quadrature):
    k = {"value": 7.0} if command in ("verify-sphere", "jump") else {"min": 2.0, "max": 7.0, "steps": 11}
    path = write_job(tmp_path, command=command, shape={"type": "sphere", "a": 1.0}, quadrature=quadrature, k=k)
    assert main(["--config", str(path)]) == EXIT_ERROR
    assert capsys.readouterr().err.startswith("Error: n_")
    assert not (tmp_path / "out").exists()


def test_no_config(capsys):
    assert main([]) == EXIT_ERROR
    assert "--config is required" in capsys.readouterr().err


def test_bad_flag():
    assert main(["--frobnicate"]) == EXIT_ERROR


def test_help_and_version(capsys):
    assert main(["--help"]) == EXIT_OK
    assert main(["--version"]) == EXIT_OK
    assert __version__ in capsys.readouterr().out


# =============================================================================
# Init
# =============================================================================

def test_init_writes_template(tmp_path, capsys):
    path = tmp_path / "new.json"
    assert main(["--init", str(path)]) == EXIT_OK
    assert json.loads(path.read_text()) == generate_default_config()
    assert "Created" in capsys.readouterr().out


def test_init_refuses_overwrite(tmp_path, capsys):
    path = tmp_path / "existing.json"
    path.write_text("keep")
    assert main(["--init", str(path)]) == EXIT_ERROR
    assert path.read_text() == "keep"
    assert "not overwriting" in capsys.readouterr().err
