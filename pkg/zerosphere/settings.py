"""Job file support for zerosphere.

A job is a JSON object naming one command, one shape and the numeric knobs
for that command. Priority: CLI flag (--out) > job value > hardcoded default.
"""

import json
import math
from copy import deepcopy
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .exceptions import ZeroSphereError
from .geometry import Ellipsoid, QuadratureOrders, Shape, StarShape, check_resolution, default_orders, sphere


class ConfigError(ZeroSphereError):
    """Invalid job file."""
    pass


# Every default lives here. Orders set to None follow the resolution rule.
HARDCODED_DEFAULTS: dict[str, Any] = {
    "quadrature": {"n_theta": None, "n_phi": None, "n_r": 16},
    "directions": {"n_theta": 16, "n_phi": 32},
    "tolerances": {
        "residual": 1e-6,
        "exterior": 1e-6,
        "interior": 1e-6,
        "jump": 1e-3,
        "volume_exterior": 1e-5,
        "boundary": 1e-3,
        "helmholtz": 2e-3,
        "threshold": 1e-6,
        "co_vanishing": 1e-6,
        "recovery": 1e-8,
        "farfield": 1e-3,
    },
    "output": {"dir": ".", "formats": ["json", "csv"]},
    "seed": 0,
    "options": {
        "n_zeros": 1,
        "zero_index": 1,
        "c": 1.0,
        "beta": [0.0, 0.0, 1.0],
        "radii": [50.0],
        "mode": "surface",
        "l_max": 4,
        "max_evaluations": 2000,
        "simplex_scale": 0.05,
        "max_restarts": 3,
        "probes": 12,
        "refinement": 1,
    },
}

VALID_TOP_KEYS = {
    "version", "command", "shape", "quadrature", "directions", "k",
    "tolerances", "output", "seed", "options",
}

VALID_COMMANDS = {
    "scan", "verify-sphere", "discriminate", "equivalence", "jump",
    "farfield", "theorem-b", "recover", "mesh-scan",
}

# Keys allowed per shape type (besides "type")
SHAPE_KEYS = {
    "sphere": ({"a"}, {"center"}),
    "ellipsoid": ({"axes"}, {"center"}),
    "star": ({"a0"}, {"coeffs", "center"}),
    "mesh": ({"path"}, set()),
}

# Which k forms each command accepts
K_RANGE_COMMANDS = {"scan", "discriminate", "mesh-scan"}
K_VALUE_COMMANDS = {"jump", "farfield", "recover"}
K_LIST_COMMANDS = {"equivalence", "verify-sphere"}

VALID_FORMATS = {"json", "csv"}
VALID_MODES = {"surface", "volume"}

CURRENT_VERSION = 1


@dataclass
class JobConfig:
    """One parsed job. Sections hold only what the file set; defaults apply in resolve_job."""
    command: str
    shape: dict[str, Any]
    quadrature: dict[str, Any] = field(default_factory=dict)
    directions: dict[str, Any] = field(default_factory=dict)
    k: dict[str, Any] = field(default_factory=dict)
    tolerances: dict[str, Any] = field(default_factory=dict)
    output: dict[str, Any] = field(default_factory=dict)
    seed: Optional[int] = None
    options: dict[str, Any] = field(default_factory=dict)
    version: int = CURRENT_VERSION
    config_path: Optional[Path] = field(default=None, compare=False)

    def to_dict(self) -> dict:
        data: dict[str, Any] = {"version": self.version, "command": self.command, "shape": deepcopy(self.shape)}
        for key in ("quadrature", "directions", "k", "tolerances", "output", "options"):
            value = getattr(self, key)
            if value:
                data[key] = deepcopy(value)
        if self.seed is not None:
            data["seed"] = self.seed
        return data

    @classmethod
    def from_dict(cls, raw: Any, config_path: Optional[Path] = None) -> "JobConfig":
        """Validate a raw job object and build a JobConfig.

        Raises:
            ConfigError: On any schema or value problem
        """
        validate_job(raw)
        return cls(
            command=raw["command"],
            shape=deepcopy(raw["shape"]),
            quadrature=deepcopy(raw.get("quadrature", {})),
            directions=deepcopy(raw.get("directions", {})),
            k=deepcopy(raw.get("k", {})),
            tolerances=deepcopy(raw.get("tolerances", {})),
            output=deepcopy(raw.get("output", {})),
            seed=raw.get("seed"),
            options=deepcopy(raw.get("options", {})),
            version=raw["version"],
            config_path=config_path,
        )


def load_job(path: Path) -> JobConfig:
    """Parse and validate a job file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Job file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"Invalid JSON in {path}: {e}")
    except (OSError, UnicodeDecodeError) as e:
        raise ConfigError(f"Cannot read job file {path}: {e}")
    return JobConfig.from_dict(raw, config_path=path.resolve())


# =============================================================================
# Validation
# =============================================================================

def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _check_section(raw: dict, key: str) -> dict:
    section = raw.get(key, {})
    if not isinstance(section, dict):
        raise ConfigError(f"'{key}' must be an object")
    unknown = set(section) - set(HARDCODED_DEFAULTS[key])
    if unknown:
        raise ConfigError(f"Unknown keys in '{key}': {', '.join(sorted(unknown))}")
    return section


def _validate_setting_types(settings: dict[str, Any], context: str) -> None:
    """Validate types of setting values."""
    number = "number"
    integer = "integer"
    type_checks: dict[str, str] = {
        "n_theta": integer,
        "n_phi": integer,
        "n_r": integer,
        "n_zeros": integer,
        "zero_index": integer,
        "l_max": integer,
        "max_evaluations": integer,
        "max_restarts": integer,
        "probes": integer,
        "refinement": integer,
        "c": number,
        "simplex_scale": number,
        "residual": number,
        "exterior": number,
        "interior": number,
        "jump": number,
        "volume_exterior": number,
        "boundary": number,
        "helmholtz": number,
        "threshold": number,
        "co_vanishing": number,
        "recovery": number,
        "farfield": number,
    }

    nullable = {"n_theta", "n_phi", "n_r"}

    for key, value in settings.items():
        expected = type_checks.get(key)
        if value is None and key in nullable:
            continue
        if expected == integer and not _is_int(value):
            raise ConfigError(f"In {context}: '{key}' must be an integer, got {type(value).__name__}")
        if expected == number and not _is_number(value):
            raise ConfigError(f"In {context}: '{key}' must be a finite number, got {value!r}")


def _validate_point(value: Any, context: str) -> None:
    if not isinstance(value, list) or len(value) != 3 or not all(_is_number(v) for v in value):
        raise ConfigError(f"{context} must be a list of 3 numbers")


def _validate_shape(shape: Any, command: str) -> None:
    if not isinstance(shape, dict):
        raise ConfigError("'shape' must be an object")
    shape_type = shape.get("type")
    if shape_type not in SHAPE_KEYS:
        raise ConfigError(f"Invalid shape type '{shape_type}', must be one of: {', '.join(sorted(SHAPE_KEYS))}")

    required, optional = SHAPE_KEYS[shape_type]
    keys = set(shape) - {"type"}
    missing = required - keys
    if missing:
        raise ConfigError(f"Shape '{shape_type}' is missing: {', '.join(sorted(missing))}")
    unknown = keys - required - optional
    if unknown:
        raise ConfigError(f"Shape '{shape_type}' has unknown keys: {', '.join(sorted(unknown))}")

    if (shape_type == "mesh") != (command == "mesh-scan"):
        raise ConfigError("Mesh shapes are used by (and only by) the 'mesh-scan' command")
    if command in ("verify-sphere", "theorem-b") and shape_type != "sphere":
        raise ConfigError(f"Command '{command}' needs a sphere shape")
    if command == "recover" and shape_type not in ("sphere", "star"):
        raise ConfigError("Command 'recover' starts from a sphere or star shape")

    if "center" in shape:
        _validate_point(shape["center"], "Shape 'center'")
    if shape_type == "sphere" and not (_is_number(shape["a"]) and shape["a"] > 0):
        raise ConfigError("Sphere 'a' must be a positive number")
    if shape_type == "ellipsoid":
        _validate_point(shape["axes"], "Ellipsoid 'axes'")
        if min(shape["axes"]) <= 0:
            raise ConfigError("Ellipsoid axes must be positive")
    if shape_type == "star":
        if not (_is_number(shape["a0"]) and shape["a0"] > 0):
            raise ConfigError("Star 'a0' must be a positive number")
        coeffs = shape.get("coeffs", [])
        if not isinstance(coeffs, list):
            raise ConfigError("Star 'coeffs' must be a list of [l, m, c] entries")
        for entry in coeffs:
            if (not isinstance(entry, list) or len(entry) != 3
                    or not _is_int(entry[0]) or not _is_int(entry[1]) or not _is_number(entry[2])):
                raise ConfigError(f"Invalid star coefficient {entry!r}, expected [l, m, c]")
    if shape_type == "mesh" and not (isinstance(shape["path"], str) and shape["path"]):
        raise ConfigError("Mesh 'path' must be a non-empty string")


def _validate_k(k: Any, command: str) -> None:
    if not isinstance(k, dict):
        raise ConfigError("'k' must be an object")
    keys = set(k)
    if keys == {"min", "max", "steps"}:
        if command not in K_RANGE_COMMANDS | {"equivalence"}:
            raise ConfigError(f"Command '{command}' does not take a k range")
        if not all(_is_number(k[key]) for key in ("min", "max")):
            raise ConfigError("k 'min' and 'max' must be numbers")
        if k["min"] <= 0:
            raise ConfigError(f"k 'min' must be positive, got {k['min']}")
        if k["min"] >= k["max"]:
            raise ConfigError(f"k 'min' must be below 'max', got [{k['min']}, {k['max']}]")
        if not _is_int(k["steps"]) or k["steps"] < 2:
            raise ConfigError("k 'steps' must be an integer >= 2")
    elif keys == {"value"}:
        if command not in K_VALUE_COMMANDS | K_LIST_COMMANDS:
            raise ConfigError(f"Command '{command}' does not take a single k")
        if not (_is_number(k["value"]) and k["value"] > 0):
            raise ConfigError("k 'value' must be a positive number")
    elif keys == {"values"}:
        if command not in K_LIST_COMMANDS:
            raise ConfigError(f"Command '{command}' does not take a k list")
        values = k["values"]
        if not isinstance(values, list) or not values or not all(_is_number(v) and v > 0 for v in values):
            raise ConfigError("k 'values' must be a non-empty list of positive numbers")
    else:
        raise ConfigError("'k' must be {min, max, steps}, {value} or {values}")


def _validate_options(options: dict) -> None:
    _validate_setting_types(options, "options")
    if options.get("mode", "surface") not in VALID_MODES:
        raise ConfigError(f"Invalid mode '{options['mode']}', must be one of: {', '.join(sorted(VALID_MODES))}")
    if "beta" in options:
        _validate_point(options["beta"], "Option 'beta'")
    if "radii" in options:
        radii = options["radii"]
        if not isinstance(radii, list) or not radii or not all(_is_number(r) and r > 0 for r in radii):
            raise ConfigError("Option 'radii' must be a non-empty list of positive numbers")


def validate_job(raw: Any) -> None:
    """Check a raw job object against the schema. Raises ConfigError."""
    if not isinstance(raw, dict):
        raise ConfigError(f"Job must be a JSON object, got {type(raw).__name__}")

    # Version check
    version = raw.get("version")
    if version is None:
        raise ConfigError("Job missing 'version' field")
    if not _is_int(version) or version < 1:
        raise ConfigError(f"Invalid job version: {version}")
    if version > CURRENT_VERSION:
        raise ConfigError(
            f"Job version {version} is newer than supported ({CURRENT_VERSION}). "
            f"Please update zerosphere."
        )

    unknown = set(raw) - VALID_TOP_KEYS
    if unknown:
        raise ConfigError(f"Unknown keys in job: {', '.join(sorted(unknown))}")

    command = raw.get("command")
    if command not in VALID_COMMANDS:
        raise ConfigError(f"Invalid command '{command}', must be one of: {', '.join(sorted(VALID_COMMANDS))}")

    if "shape" not in raw:
        raise ConfigError("Job missing 'shape'")
    _validate_shape(raw["shape"], command)

    for key in ("quadrature", "directions", "tolerances"):
        section = _check_section(raw, key)
        _validate_setting_types(section, key)
        if key == "tolerances" and any(v <= 0 for v in section.values()):
            raise ConfigError("Tolerances must be positive")
        if key != "tolerances" and any(v < 1 for v in section.values() if v is not None):
            raise ConfigError(f"Orders in '{key}' must be positive")

    output = _check_section(raw, "output")
    if "dir" in output and not isinstance(output["dir"], str):
        raise ConfigError("Output 'dir' must be a string")
    formats = output.get("formats", [])
    if not isinstance(formats, list) or set(formats) - VALID_FORMATS:
        raise ConfigError(f"Output 'formats' must be a list drawn from: {', '.join(sorted(VALID_FORMATS))}")

    if "seed" in raw and not _is_int(raw["seed"]):
        raise ConfigError("'seed' must be an integer")

    _validate_options(_check_section(raw, "options"))

    if "k" in raw:
        _validate_k(raw["k"], command)
    elif command in K_RANGE_COMMANDS | K_VALUE_COMMANDS:
        raise ConfigError(f"Command '{command}' needs a 'k' section")


# =============================================================================
# Resolution
# =============================================================================

def resolve_job(job: JobConfig, output_override: Optional[Path] = None) -> dict[str, Any]:
    """Merge job sections onto HARDCODED_DEFAULTS and make paths absolute.

    Relative paths resolve against the job file's directory (or the working
    directory for jobs built in memory). output_override (the --out flag)
    wins over the job's output dir.
    """
    merged: dict[str, Any] = {"command": job.command, "shape": deepcopy(job.shape), "k": deepcopy(job.k)}
    for key in ("quadrature", "directions", "tolerances", "output", "options"):
        section = deepcopy(HARDCODED_DEFAULTS[key])
        section.update(deepcopy(getattr(job, key)))
        merged[key] = section
    merged["seed"] = job.seed if job.seed is not None else HARDCODED_DEFAULTS["seed"]

    base = job.config_path.parent if job.config_path is not None else Path.cwd()
    if output_override is not None:
        merged["output"]["dir"] = str(Path(output_override).resolve())
    else:
        merged["output"]["dir"] = str(_absolute(merged["output"]["dir"], base))
    if merged["shape"]["type"] == "mesh":
        merged["shape"]["path"] = str(_absolute(merged["shape"]["path"], base))
    return merged


def _absolute(value: str, base: Path) -> Path:
    p = Path(value)
    return p if p.is_absolute() else (base / p).resolve()


def shape_from_spec(spec: dict[str, Any]) -> Shape:
    """Build a sphere, ellipsoid or star shape from its job description."""
    center = tuple(spec.get("center", (0.0, 0.0, 0.0)))
    shape_type = spec["type"]
    if shape_type == "sphere":
        return sphere(spec["a"], center)
    if shape_type == "ellipsoid":
        return Ellipsoid(axes=tuple(spec["axes"]), center=center)
    if shape_type == "star":
        coeffs = tuple((int(l), int(m), float(c)) for l, m, c in spec.get("coeffs", []))
        return StarShape(base_radius=spec["a0"], coeffs=coeffs, center=center)
    raise ConfigError(f"Shape type '{shape_type}' has no analytic form")


def quadrature_orders(section: dict[str, Any], k: float, r_max: float) -> QuadratureOrders:
    """Orders from a resolved quadrature section, filling unset ones by the resolution rule.

    Raises:
        ResolutionError: If pinned angular orders violate the rule at k
    """
    rule = default_orders(k, r_max)
    n_theta = section.get("n_theta") or rule.n_theta
    orders = QuadratureOrders(
        n_theta=n_theta,
        n_phi=section.get("n_phi") or 2 * n_theta,
        n_r=section.get("n_r") or rule.n_r,
    )
    return check_resolution(orders, k, r_max)


def k_values(k: dict[str, Any]) -> list[float]:
    """Wavenumbers described by a k section: a range, a single value or a list."""
    if "values" in k:
        return [float(v) for v in k["values"]]
    if "value" in k:
        return [float(k["value"])]
    steps = k["steps"]
    return [k["min"] + (k["max"] - k["min"]) * i / (steps - 1) for i in range(steps)]


def generate_default_config() -> dict:
    """Template job: an ellipsoid discrimination scan."""
    return {
        "version": CURRENT_VERSION,
        "command": "discriminate",
        "shape": {"type": "ellipsoid", "axes": [1.0, 1.0, 1.2]},
        "quadrature": {"n_theta": 48, "n_phi": 96},
        "directions": {"n_theta": 16, "n_phi": 32},
        "k": {"min": 2.0, "max": 7.0, "steps": 501},
        "tolerances": {"threshold": 1e-6},
        "output": {"dir": "./results", "formats": ["json", "csv"]},
        "seed": 0,
    }
