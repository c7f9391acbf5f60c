import json
import math
from pathlib import Path

import pytest

from zerosphere.exceptions import ResolutionError
from zerosphere.geometry import Ellipsoid, StarShape, default_orders
from zerosphere.settings import (
    CURRENT_VERSION,
    HARDCODED_DEFAULTS,
    ConfigError,
    JobConfig,
    generate_default_config,
    k_values,
    load_job,
    quadrature_orders,
    resolve_job,
    shape_from_spec,
    validate_job,
)


def job(**overrides):
    raw = {
        "version": 1,
        "command": "scan",
        "shape": {"type": "sphere", "a": 1.0},
        "k": {"min": 2.0, "max": 7.0, "steps": 11},
    }
    raw.update(overrides)
    return raw


# =============================================================================
# Loading
# =============================================================================

def test_load_job(tmp_path):
    path = tmp_path / "job.json"
    path.write_text(json.dumps(job(seed=3)))
    loaded = load_job(path)
    assert loaded.command == "scan"
    assert loaded.seed == 3
    assert loaded.config_path == path.resolve()


def test_load_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_job(tmp_path / "absent.json")


def test_load_bad_json(tmp_path):
    path = tmp_path / "job.json"
    path.write_text("{\"version\": 1,")
    with pytest.raises(ConfigError, match="Invalid JSON"):
        load_job(path)


def test_load_unreadable(tmp_path):
    path = tmp_path / "job.json"
    path.write_bytes(b"\xff\xfe{}")
    with pytest.raises(ConfigError, match="Cannot read"):
        load_job(path)
    with pytest.raises(ConfigError, match="Cannot read"):
        load_job(tmp_path)


def test_job_round_trip():
    raw = job(tolerances={"threshold": 1e-5}, seed=4, options={"mode": "volume"})
    assert JobConfig.from_dict(raw).to_dict() == raw


# =============================================================================
# Validation
# =============================================================================

def test_valid_job_passes():
    validate_job(job())
    validate_job(generate_default_config())


@pytest.mark.parametrize("raw, message", [
    ([], "JSON object"),
    ({"command": "scan"}, "version"),
    (job(version=0), "Invalid job version"),
    (job(version=CURRENT_VERSION + 1), "newer"),
    (job(extra=1), "Unknown keys in job"),
    (job(command="plot"), "Invalid command"),
    ({"version": 1, "command": "scan", "k": {"value": 1.0}}, "missing 'shape'"),
    (job(quadrature={"n_theta": 32, "order": 4}), "Unknown keys in 'quadrature'"),
    (job(quadrature={"n_theta": 32.5}), "integer"),
    (job(directions={"n_theta": 0}), "positive"),
    (job(tolerances={"residual": 0.0}), "positive"),
    (job(tolerances={"residual": "small"}), "finite number"),
    (job(output={"formats": ["json", "xml"]}), "formats"),
    (job(output={"dir": 3}), "string"),
    (job(seed=1.5), "seed"),
    (job(seed=True), "seed"),
    (job(options={"mode": "line"}), "Invalid mode"),
    (job(options={"radii": []}), "radii"),
    (job(options={"beta": [0.0, 1.0]}), "beta"),
])
def test_invalid_jobs(raw, message):
    with pytest.raises(ConfigError, match=message):
        validate_job(raw)


@pytest.mark.parametrize("shape, message", [
    ({"type": "cube", "a": 1.0}, "Invalid shape type"),
    ({"type": "sphere"}, "missing"),
    ({"type": "sphere", "a": 1.0, "axes": [1, 1, 1]}, "unknown keys"),
    ({"type": "sphere", "a": -1.0}, "positive"),
    ({"type": "sphere", "a": 1.0, "center": [0, 0]}, "center"),
    ({"type": "ellipsoid", "axes": [1.0, 0.0, 1.0]}, "positive"),
    ({"type": "star", "a0": 1.0, "coeffs": [[2, 0]]}, "star coefficient"),
    ({"type": "star", "a0": 1.0, "coeffs": [[2.0, 0, 0.1]]}, "star coefficient"),
    ({"type": "mesh", "path": "s.off"}, "mesh-scan"),
])
def test_invalid_shapes(shape, message):
    with pytest.raises(ConfigError, match=message):
        validate_job(job(shape=shape))


@pytest.mark.parametrize("command, shape_type", [
    ("verify-sphere", "ellipsoid"),
    ("theorem-b", "star"),
    ("recover", "ellipsoid"),
])
def test_command_shape_rules(command, shape_type):
    shapes = {
        "ellipsoid": {"type": "ellipsoid", "axes": [1.0, 1.0, 1.2]},
        "star": {"type": "star", "a0": 1.0},
    }
    raw = {"version": 1, "command": command, "shape": shapes[shape_type], "k": {"value": 3.0}}
    with pytest.raises(ConfigError, match="shape"):
        validate_job(raw)


def test_mesh_scan_needs_mesh():
    with pytest.raises(ConfigError, match="mesh-scan"):
        validate_job(job(command="mesh-scan"))
    validate_job(job(command="mesh-scan", shape={"type": "mesh", "path": "s.off"}))


@pytest.mark.parametrize("command, k, ok", [
    ("scan", {"min": 1.0, "max": 2.0, "steps": 2}, True),
    ("scan", {"value": 1.0}, False),
    ("scan", {"min": 0.0, "max": 2.0, "steps": 5}, False),
    ("scan", {"min": 2.0, "max": 2.0, "steps": 5}, False),
    ("scan", {"min": 1.0, "max": 2.0, "steps": 1}, False),
    ("jump", {"value": 3.0}, True),
    ("jump", {"value": -3.0}, False),
    ("jump", {"values": [3.0]}, False),
    ("recover", {"min": 1.0, "max": 2.0, "steps": 5}, False),
    ("equivalence", {"values": [2.0, math.pi]}, True),
    ("equivalence", {"min": 1.0, "max": 2.0, "steps": 5}, True),
    ("equivalence", {"values": []}, False),
    ("verify-sphere", {"value": math.pi}, True),
    ("scan", {"min": 1.0, "max": 2.0}, False),
])
def test_k_forms(command, k, ok):
    raw = job(command=command, k=k)
    if ok:
        validate_job(raw)
    else:
        with pytest.raises(ConfigError):
            validate_job(raw)


def test_k_required_for_scans_and_single_k_commands():
    for command in ("scan", "jump", "farfield"):
        raw = job(command=command)
        del raw["k"]
        with pytest.raises(ConfigError, match="needs a 'k'"):
            validate_job(raw)
    raw = job(command="verify-sphere")
    del raw["k"]
    validate_job(raw)


# =============================================================================
# Resolution
# =============================================================================

def test_resolve_defaults():
    resolved = resolve_job(JobConfig.from_dict(job()))
    assert resolved["tolerances"] == HARDCODED_DEFAULTS["tolerances"]
    assert resolved["options"]["mode"] == "surface"
    assert resolved["directions"] == {"n_theta": 16, "n_phi": 32}
    assert resolved["seed"] == 0
    assert Path(resolved["output"]["dir"]) == Path.cwd().resolve()


def test_resolve_does_not_mutate_defaults():
    resolve_job(JobConfig.from_dict(job(tolerances={"threshold": 0.5})))
    assert HARDCODED_DEFAULTS["tolerances"]["threshold"] == 1e-6


def test_resolve_paths_against_job_dir(tmp_path):
    path = tmp_path / "jobs" / "mesh.json"
    path.parent.mkdir()
    path.write_text(json.dumps(job(
        command="mesh-scan",
        shape={"type": "mesh", "path": "surfaces/s.off"},
        output={"dir": "out"},
    )))
    resolved = resolve_job(load_job(path))
    assert resolved["output"]["dir"] == str((tmp_path / "jobs" / "out").resolve())
    assert resolved["shape"]["path"] == str((tmp_path / "jobs" / "surfaces" / "s.off").resolve())


def test_out_flag_wins(tmp_path):
    resolved = resolve_job(JobConfig.from_dict(job(output={"dir": "ignored"})), tmp_path / "cli")
    assert resolved["output"]["dir"] == str((tmp_path / "cli").resolve())


# =============================================================================
# Helpers
# =============================================================================

def test_shape_from_spec():
    assert shape_from_spec({"type": "sphere", "a": 2.0}).sphere_radius == 2.0
    ellipsoid = shape_from_spec({"type": "ellipsoid", "axes": [1, 2, 3], "center": [0, 0, 1]})
    assert isinstance(ellipsoid, Ellipsoid)
    assert ellipsoid.center == (0.0, 0.0, 1.0)
    star = shape_from_spec({"type": "star", "a0": 1.0, "coeffs": [[2, 0, 0.05]]})
    assert star == StarShape(1.0, ((2, 0, 0.05),))
    with pytest.raises(ConfigError):
        shape_from_spec({"type": "mesh", "path": "s.off"})


def test_quadrature_orders():
    assert quadrature_orders({"n_theta": None, "n_phi": None, "n_r": None}, 7.0, 1.0) == default_orders(7.0, 1.0)
    pinned = quadrature_orders({"n_theta": 48, "n_phi": 96, "n_r": 20}, 7.0, 1.0)
    assert (pinned.n_theta, pinned.n_phi, pinned.n_r) == (48, 96, 20)


@pytest.mark.parametrize("section, message", [
    ({"n_theta": 16, "n_phi": None, "n_r": None}, "n_theta = 16"),
    ({"n_theta": 48, "n_phi": 64, "n_r": None}, "n_phi = 64"),
    ({"n_theta": None, "n_phi": 40, "n_r": None}, "n_phi = 40"),
])
def test_quadrature_orders_enforce_resolution(section, message):
    with pytest.raises(ResolutionError, match=message):
        quadrature_orders(section, 7.0, 1.0)


def test_k_values():
    assert k_values({"min": 2.0, "max": 7.0, "steps": 501})[1] == pytest.approx(2.01)
    assert k_values({"min": 2.0, "max": 7.0, "steps": 501})[-1] == 7.0
    assert k_values({"value": 3}) == [3.0]
    assert k_values({"values": [1, 2.5]}) == [1.0, 2.5]
