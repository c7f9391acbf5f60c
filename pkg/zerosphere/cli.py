#!/usr/bin/env python3
"""zerosphere - zero-sphere checks for Helmholtz transforms and potentials.

One job per run, described by a JSON file:
  zerosphere --config job.json [--out DIR] [--quiet]
  zerosphere --init job.json     # write a template job

Commands (the job's "command" field):
  scan           - residual curve over a k range
  mesh-scan      - residual curve for an OFF triangle mesh
  discriminate   - scan plus the sphere / non-sphere verdict
  verify-sphere  - transform, field and jump checks on a sphere
  equivalence    - Fourier residual vs exterior field co-vanishing
  jump           - normal-derivative jump of the single layer
  farfield       - far-field amplitude and decay exponents
  theorem-b      - volume checks on a ball at a volume zero
  recover        - Nelder-Mead shape recovery at fixed k

Exit codes: 0 consistent/converged, 2 violated/non-converged, 1 usage or input error.
"""

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np

from . import __version__
from .exceptions import ZeroSphereError
from .fourier import scan_wavenumbers
from .geometry import (
    QuadratureOrders,
    check_resolution,
    direction_grid,
    load_mesh,
    mesh_quadrature,
    surface_quadrature,
)
from .kernels import zero_wavenumbers
from .potentials import far_field_compare, jump_report, ladder_orders
from .recovery import RecoveryConfig, recover_shape
from .report import emit_report
from .settings import (
    generate_default_config,
    k_values,
    load_job,
    quadrature_orders,
    resolve_job,
    shape_from_spec,
)
from .symmetry import (
    DEFAULT_TOLERANCES,
    CheckResult,
    TheoremReport,
    discriminate_shape,
    verify_ball_zero,
    verify_equivalence,
    verify_sphere_at,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VIOLATED = 2

# Far-field radiation quantity must decay at least this fast
RADIATION_EXPONENT = -1.8

Runner = Callable[[dict[str, Any], bool], tuple[Any, int]]


# =============================================================================
# Shared Utilities
# =============================================================================

def _explicit_orders(section: dict[str, Any]) -> Optional[QuadratureOrders]:
    """Orders the job pinned, or None to follow the resolution rule."""
    n_theta = section.get("n_theta")
    if n_theta is None:
        return None
    return QuadratureOrders(
        n_theta=n_theta,
        n_phi=section.get("n_phi") or 2 * n_theta,
        n_r=section.get("n_r") or 16,
    )


def _directions(job: dict[str, Any]):
    return direction_grid(job["directions"]["n_theta"], job["directions"]["n_phi"])


def _theorem_tolerances(job: dict[str, Any]) -> dict[str, float]:
    return {key: job["tolerances"][key] for key in DEFAULT_TOLERANCES}


def _verdict_code(report: TheoremReport) -> int:
    return EXIT_OK if report.verdict == "consistent" else EXIT_VIOLATED


# =============================================================================
# Command Runners
# =============================================================================

def _run_scan(job: dict[str, Any], verbose: bool) -> tuple[Any, int]:
    shape = shape_from_spec(job["shape"])
    k = job["k"]
    orders = quadrature_orders(job["quadrature"], k["max"], shape.max_radius)
    curve = scan_wavenumbers(
        shape, k["min"], k["max"], k["steps"], _directions(job), orders,
        mode=job["options"]["mode"], threshold=job["tolerances"]["threshold"], verbose=verbose,
    )
    return curve, EXIT_OK


def _run_mesh_scan(job: dict[str, Any], verbose: bool) -> tuple[Any, int]:
    path = Path(job["shape"]["path"])
    mesh = load_mesh(path)
    quad = mesh_quadrature(mesh, job["options"]["refinement"])
    if verbose:
        print(f"  Mesh {path.name}: {len(mesh.triangles)} triangles, {len(quad)} nodes, area {quad.area:.6g}")
    k = job["k"]
    report = discriminate_shape(
        quad, k["min"], k["max"], k["steps"], job["tolerances"]["threshold"],
        _directions(job), verbose=verbose,
    )
    report.details["mesh"] = {"path": str(path), "triangles": len(mesh.triangles), "nodes": len(quad)}
    return report, _verdict_code(report)


def _run_discriminate(job: dict[str, Any], verbose: bool) -> tuple[Any, int]:
    shape = shape_from_spec(job["shape"])
    k = job["k"]
    orders = quadrature_orders(job["quadrature"], k["max"], shape.max_radius)
    report = discriminate_shape(
        shape, k["min"], k["max"], k["steps"], job["tolerances"]["threshold"],
        _directions(job), orders, mode=job["options"]["mode"], verbose=verbose,
    )
    return report, _verdict_code(report)


def _run_verify_sphere(job: dict[str, Any], verbose: bool) -> tuple[Any, int]:
    a = job["shape"]["a"]
    orders = _explicit_orders(job["quadrature"])
    tolerances = _theorem_tolerances(job)
    ks = k_values(job["k"]) if job["k"] else zero_wavenumbers(a, "surface", job["options"]["n_zeros"])
    report = verify_sphere_at(
        a, ks, orders, _directions(job), tolerances,
        c=job["options"]["c"], n_jump=job["options"]["probes"],
        center=job["shape"].get("center", (0.0, 0.0, 0.0)), verbose=verbose,
    )
    return report, _verdict_code(report)


def _run_equivalence(job: dict[str, Any], verbose: bool) -> tuple[Any, int]:
    shape = shape_from_spec(job["shape"])
    ks = k_values(job["k"]) if job["k"] else [np.pi / shape.max_radius]
    report = verify_equivalence(
        shape, ks, _explicit_orders(job["quadrature"]), _directions(job),
        tolerance=job["tolerances"]["co_vanishing"], verbose=verbose,
    )
    return report, _verdict_code(report)


def _run_jump(job: dict[str, Any], verbose: bool) -> tuple[Any, int]:
    shape = shape_from_spec(job["shape"])
    k = job["k"]["value"]
    c = job["options"]["c"]
    orders = _explicit_orders(job["quadrature"])
    if orders is not None:
        check_resolution(orders, k, shape.max_radius)
    n_theta, n_phi = (orders.n_theta, orders.n_phi) if orders else ladder_orders(k, shape.max_radius)
    if verbose:
        print(f"  Jump at k = {k:g} on a {n_theta}x{n_phi} surface rule")
    quad = surface_quadrature(shape, n_theta, n_phi)
    jumps = jump_report(quad, k, c, n_probes=job["options"]["probes"])

    tolerance = job["tolerances"]["jump"]
    report = TheoremReport(
        name="jump",
        shape=shape.describe(),
        mode="surface",
        k_values=[k],
        tolerances={"jump": tolerance},
        jumps=[jumps.to_dict()],
        details={"n_theta": n_theta, "n_phi": n_phi},
    )
    report.checks.append(CheckResult("jump", k, jumps.max_jump_error, tolerance * max(1.0, abs(c))))
    if verbose:
        print(f"    max |jump - c| = {jumps.max_jump_error:.3e}")
    return report, _verdict_code(report)


def _run_farfield(job: dict[str, Any], verbose: bool) -> tuple[Any, int]:
    shape = shape_from_spec(job["shape"])
    k = job["k"]["value"]
    c = job["options"]["c"]
    beta = np.asarray(job["options"]["beta"], dtype=float)
    beta = beta / np.linalg.norm(beta)
    orders = quadrature_orders(job["quadrature"], k, shape.max_radius)
    quad = surface_quadrature(shape, orders.n_theta, orders.n_phi)
    far = far_field_compare(quad, k, c, beta, job["options"]["radii"])

    tolerance = job["tolerances"]["farfield"]
    scale = max(1.0, abs(far.transform))
    report = TheoremReport(
        name="farfield",
        shape=shape.describe(),
        mode="surface",
        k_values=[k],
        tolerances={"farfield": tolerance, "radiation_exponent": RADIATION_EXPONENT},
        details=far.to_dict(),
    )
    report.checks.append(CheckResult("amplitude", k, far.amplitude_errors[-1], tolerance * scale))
    if far.radiation_exponent is not None:
        report.checks.append(CheckResult("radiation_exponent", k, far.radiation_exponent, RADIATION_EXPONENT))
    if verbose:
        print(f"  |A(R) - c F_S| = {far.amplitude_errors[-1]:.3e} at R = {far.radii[-1]:g}, decay {far.decay_label}")
    return report, _verdict_code(report)


def _run_theorem_b(job: dict[str, Any], verbose: bool) -> tuple[Any, int]:
    report = verify_ball_zero(
        job["shape"]["a"], job["options"]["zero_index"], _explicit_orders(job["quadrature"]),
        _directions(job), _theorem_tolerances(job), verbose=verbose,
    )
    return report, _verdict_code(report)


def _run_recover(job: dict[str, Any], verbose: bool) -> tuple[Any, int]:
    options = job["options"]
    config = RecoveryConfig(
        k=job["k"]["value"],
        l_max=options["l_max"],
        initial=shape_from_spec(job["shape"]),
        max_evaluations=options["max_evaluations"],
        simplex_scale=options["simplex_scale"],
        tolerance=job["tolerances"]["recovery"],
        seed=job["seed"],
        max_restarts=options["max_restarts"],
    )
    result = recover_shape(config, verbose=verbose)
    return result, EXIT_OK if result.converged else EXIT_VIOLATED


RUNNERS: dict[str, Runner] = {
    "scan": _run_scan,
    "mesh-scan": _run_mesh_scan,
    "discriminate": _run_discriminate,
    "verify-sphere": _run_verify_sphere,
    "equivalence": _run_equivalence,
    "jump": _run_jump,
    "farfield": _run_farfield,
    "theorem-b": _run_theorem_b,
    "recover": _run_recover,
}


# =============================================================================
# Entry Point
# =============================================================================

def create_parser() -> argparse.ArgumentParser:
    """Create argument parser."""
    parser = argparse.ArgumentParser(
        prog="zerosphere",
        description="Zero-sphere checks for Helmholtz transforms and potentials",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""\
Examples:
  zerosphere --config job.json               # Run the job, write next to it
  zerosphere --config job.json --out results # Write report.json / curve.csv to results/
  ZEROSPHERE_THREADS=4 zerosphere --config job.json --quiet
""",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", type=Path, default=None, help="Path to the JSON job file")
    parser.add_argument("--init", type=Path, default=None, metavar="PATH", help="Write a template job file and exit")
    parser.add_argument("--out", type=Path, default=None, help="Output directory (overrides output.dir)")
    parser.add_argument("--quiet", action="store_true", help="Suppress progress output")
    return parser


def run(config_path: Path, out: Optional[Path] = None, quiet: bool = False) -> int:
    """Execute one job file and write its reports. Returns the exit code."""
    verbose = not quiet
    try:
        job = resolve_job(load_job(config_path), out)
        command = job["command"]
        if verbose:
            print(f"zerosphere {__version__}: {command} ({Path(config_path).name})")
        result, code = RUNNERS[command](job, verbose)
        written = emit_report(
            result,
            job["output"]["formats"],
            Path(job["output"]["dir"]),
            extra={"command": command, "exit_code": code, "version": __version__},
        )
    except ZeroSphereError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_ERROR

    if verbose:
        for path in written:
            print(f"  Wrote {path}")
        if isinstance(result, TheoremReport):
            print(f"Verdict: {result.verdict}")
    return code


def init_job(path: Path) -> int:
    """Write the template job (an ellipsoid discrimination scan) to path."""
    path = Path(path)
    if path.exists():
        print(f"Error: {path} already exists, not overwriting", file=sys.stderr)
        return EXIT_ERROR
    try:
        path.write_text(json.dumps(generate_default_config(), indent=2) + "\n")
    except OSError as e:
        print(f"Error: Cannot write {path}: {e}", file=sys.stderr)
        return EXIT_ERROR
    print(f"Created {path}")
    print("\nEdit the command, shape and k range, then run:")
    print(f"  zerosphere --config {path}")
    return EXIT_OK


def main(argv: Optional[list[str]] = None) -> int:
    """Main entry point."""
    parser = create_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors; 2 is reserved for violated verdicts
        return EXIT_OK if e.code == 0 else EXIT_ERROR

    if args.init is not None:
        return init_job(args.init)
    if args.config is None:
        print("Error: --config is required (or --init to create a job file)", file=sys.stderr)
        return EXIT_ERROR

    try:
        return run(args.config, args.out, args.quiet)
    except KeyboardInterrupt:
        print("\nInterrupted", file=sys.stderr)
        return 130


if __name__ == "__main__":
    sys.exit(main())
