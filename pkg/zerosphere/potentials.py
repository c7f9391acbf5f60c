"""Single-layer and volume potentials of the Helmholtz kernel.

u(x) = c sum_i w_i g(x, s_i, k) over a SurfaceQuadrature and
w(x) = sum_j v_j g(x, t_j, k) over a VolumeQuadrature. Direct sums are only
trusted at least COLLAR local spacings away from the nodes; boundary values
and normal derivatives come from an offset ladder extrapolated to the
surface instead of singular on-surface rules.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Literal, Optional, Sequence

import numpy as np

from .exceptions import (
    CollarViolationError,
    ExtrapolationError,
    InvalidArgumentError,
    StencilError,
)
from .fourier import surface_transform
from .geometry import Region, Shape, SurfaceQuadrature, VolumeQuadrature, point_locate
from .harmonics import unit_vectors
from .kernels import FOUR_PI, SERIES_CUTOFF, check_unit_vector, check_wavenumber, green_many
from .workers import parallel_map

Field = Callable[[np.ndarray], complex]
Side = Literal["interior", "exterior"]

# Evaluation points must keep COLLAR local spacings from every node
COLLAR = 3.0
# Relative slack on the collar test, absorbs rounding of ladder offsets
_COLLAR_SLACK = 1e-9
_COLLAR_NEIGHBORS = 8

# Offsets as multiples of the local spacing h, largest first
DEFAULT_LADDER = (16.0, 14.0, 12.0, 10.0, 8.0, 6.0, 4.0)
# Centered-difference half width as a fraction of the offset
STENCIL_FRACTION = 0.25
# Absolute floor for the extrapolation divergence test
DIVERGENCE_FLOOR = 1e-4

FAR_FIELD_MIN_RATIO = 5.0
DECAY_SAMPLE_RANGE = (5.0, 40.0)
DECAY_SAMPLES = 8
# Fields below this fraction of the monopole scale c A / (4 pi r) count as zero
NOISE_FLOOR = 1e-9

# Taylor coefficients (in z = k rho) of 4 pi f(rho), f the flux profile below
_FLUX_SERIES = tuple((1j ** n) * (1 - n) / math.factorial(n) for n in range(2, 10))


# =============================================================================
# Direct sums
# =============================================================================

def _check_collar(quad: SurfaceQuadrature, x: np.ndarray) -> None:
    neighbors = min(_COLLAR_NEIGHBORS, len(quad))
    distances, indices = quad.tree.query(x, k=neighbors)
    distances = np.atleast_1d(distances)
    indices = np.atleast_1d(indices)
    limits = COLLAR * quad.spacing[indices] * (1.0 - _COLLAR_SLACK)
    hit = distances < limits
    if np.any(hit):
        j = int(indices[np.argmax(hit)])
        raise CollarViolationError(
            f"Point {x.tolist()} is {float(np.min(distances)):.3e} from node {j}, "
            f"inside the collar {COLLAR:g} h = {COLLAR * quad.spacing[j]:.3e}"
        )


def single_layer(quad: SurfaceQuadrature, k: float, c: float, x) -> complex:
    """Single-layer potential u(x) = c sum_i w_i g(x, s_i, k).

    Args:
        quad: Surface quadrature
        k: Wavenumber
        c: Constant density
        x: Evaluation point

    Returns:
        u(x)

    Raises:
        CollarViolationError: If x lies within COLLAR local spacings of a node
    """
    k = check_wavenumber(k)
    x = np.asarray(x, dtype=float)
    _check_collar(quad, x)
    return complex(c * np.dot(quad.weights, green_many(x, quad.nodes, k)))


def single_layer_many(quad: SurfaceQuadrature, k: float, c: float, points) -> np.ndarray:
    """single_layer over a batch of points, evaluated per point in parallel."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    return np.array(parallel_map(lambda x: single_layer(quad, k, c, x), points), dtype=complex)


def _flux_profile(rho: np.ndarray, k: float) -> np.ndarray:
    """f(rho) = (e^{ik rho}(1 - ik rho) - 1) / (4 pi k^2 rho^2).

    The radial field f(rho) (t - x)/rho has divergence g(x, t, k) in t and
    stays bounded as t -> x, f(0) = 1/(8 pi).
    """
    z = k * rho
    small = z < SERIES_CUTOFF
    safe = np.where(small, 1.0, z)
    out = (np.exp(1j * safe) * (1.0 - 1j * safe) - 1.0) / (FOUR_PI * safe * safe)
    if np.any(small):
        series = np.polynomial.polynomial.polyval(z, _FLUX_SERIES) / FOUR_PI
        out = np.where(small, series, out)
    return out


def _volume_flux(boundary: SurfaceQuadrature, k: float, x: np.ndarray) -> complex:
    offsets = boundary.nodes - x
    rho = np.linalg.norm(offsets, axis=1)
    flux = np.einsum("ij,ij->i", offsets, boundary.normals) / rho
    return complex(np.dot(boundary.weights, _flux_profile(rho, k) * flux))


def volume_potential(vquad: VolumeQuadrature, k: float, x, subtract: bool = False) -> complex:
    """Volume potential w(x) = integral over D of g(x, t, k).

    By default exterior points use the direct volume sum. With subtract=True
    the kernel is integrated through its bounded radial flux over the
    boundary surface, w(x) = sum_i w_i f(rho_i) (s_i - x).N_i / rho_i, which
    also holds inside D and is the only rule allowed there.

    Raises:
        CollarViolationError: If x is within the boundary collar, or x is
            interior and subtract is False
    """
    k = check_wavenumber(k)
    x = np.asarray(x, dtype=float)
    boundary = vquad.boundary
    _check_collar(boundary, x)

    region = point_locate(vquad.shape, x).region
    if region == Region.NEAR_SURFACE:
        raise CollarViolationError(f"Point {x.tolist()} lies on the boundary")

    if region == Region.INSIDE:
        if not subtract:
            raise CollarViolationError(
                f"Point {x.tolist()} is inside D; interior values need subtract=True"
            )
        return _volume_flux(boundary, k, x)
    if subtract:
        return _volume_flux(boundary, k, x)
    return complex(np.dot(vquad.weights, green_many(x, vquad.nodes, k)))


def interaction_sum(quad_a: SurfaceQuadrature, quad_b: SurfaceQuadrature, k: float) -> complex:
    """Bilinear kernel sum sum_i sum_j a_i b_j g(s_i, t_j, k) between two disjoint surfaces."""
    k = check_wavenumber(k)
    diff = quad_a.nodes[:, None, :] - quad_b.nodes[None, :, :]
    dist = np.linalg.norm(diff, axis=-1)
    if np.any(dist == 0.0):
        raise CollarViolationError("Surfaces share a node")
    kernel = np.exp(1j * k * dist) / (FOUR_PI * dist)
    return complex(quad_a.weights @ kernel @ quad_b.weights)


# =============================================================================
# Boundary limits
# =============================================================================

def extrapolate_to_zero(offsets: Sequence[float], values: Sequence[complex]) -> tuple[complex, float]:
    """Neville polynomial extrapolation of values(eps) to eps = 0.

    Args:
        offsets: Strictly decreasing positive offsets (at least 3)
        values: Field values at those offsets

    Returns:
        (limit, error estimate); the estimate is the last correction
        |P_{0..n} - P_{0..n-1}| of the tableau

    Raises:
        InvalidArgumentError: If the ladder is too short
        ExtrapolationError: If the offsets are not strictly decreasing or the
            corrections grow along the tableau
    """
    eps = np.asarray(offsets, dtype=float)
    vals = np.asarray(values, dtype=complex)
    if len(eps) < 3 or len(eps) != len(vals):
        raise InvalidArgumentError(f"Ladder needs at least 3 offsets with matching values, got {len(eps)}")
    if np.any(eps <= 0) or np.any(np.diff(eps) >= 0):
        raise ExtrapolationError(f"Ladder offsets must be positive and strictly decreasing: {eps.tolist()}")

    tableau = vals.copy()
    estimates = [tableau[0]]
    for m in range(1, len(eps)):
        for i in range(len(eps) - m):
            # p_{i..i+m}(0) from p_{i..i+m-1}(0) and p_{i+1..i+m}(0)
            tableau[i] = (eps[i] * tableau[i + 1] - eps[i + m] * tableau[i]) / (eps[i] - eps[i + m])
        estimates.append(tableau[0])

    corrections = np.abs(np.diff(estimates))
    error = float(corrections[-1])
    if error > max(float(corrections[0]), DIVERGENCE_FLOOR):
        raise ExtrapolationError(
            f"Extrapolation diverges: last correction {error:.3e} exceeds first {corrections[0]:.3e}"
        )
    return complex(estimates[-1]), error


def _check_ladder(ladder: Sequence[float]) -> tuple[float, ...]:
    ladder = tuple(float(m) for m in ladder)
    if len(ladder) < 3:
        raise InvalidArgumentError(f"Ladder needs at least 3 offsets, got {len(ladder)}")
    if any(b >= a for a, b in zip(ladder, ladder[1:])):
        raise ExtrapolationError(f"Ladder must be strictly decreasing: {ladder}")
    inner = (1.0 - STENCIL_FRACTION) * ladder[-1]
    if inner < COLLAR:
        raise InvalidArgumentError(
            f"Smallest offset {ladder[-1]:g} h puts the stencil at {inner:g} h, inside the {COLLAR:g} h collar"
        )
    return ladder


def boundary_limit(
    field: Field,
    point,
    normal,
    h: float,
    side: Side,
    derivative: bool = False,
    ladder: Sequence[float] = DEFAULT_LADDER,
) -> tuple[complex, float]:
    """One-sided boundary value (or normal derivative) of a field at a surface point.

    Samples x = point -/+ eps N for eps = m h over the ladder (minus on the
    interior side), takes N.grad field by centered differences of half width
    eps/4 when derivative is set, and extrapolates eps -> 0.

    Returns:
        (limit, error estimate)
    """
    if side not in ("interior", "exterior"):
        raise InvalidArgumentError(f"Unknown side: {side!r}")
    ladder = _check_ladder(ladder)
    point = np.asarray(point, dtype=float)
    normal = np.asarray(normal, dtype=float)
    sign = -1.0 if side == "interior" else 1.0
    offsets = [m * h for m in ladder]

    values = []
    for eps in offsets:
        x = point + sign * eps * normal
        if derivative:
            delta = STENCIL_FRACTION * eps
            values.append((field(x + delta * normal) - field(x - delta * normal)) / (2.0 * delta))
        else:
            values.append(field(x))
    return extrapolate_to_zero(offsets, values)


def boundary_normal_derivative(
    quad: SurfaceQuadrature,
    k: float,
    c: float,
    surface_index: int,
    side: Side,
    ladder: Sequence[float] = DEFAULT_LADDER,
) -> tuple[complex, float]:
    """One-sided normal derivative (u_N) of the single layer at a quadrature node.

    Args:
        quad: Surface quadrature (also the node set of the potential)
        k: Wavenumber
        c: Density
        surface_index: Node index in quad
        side: "interior" for (u_N)+, "exterior" for (u_N)-
        ladder: Offsets as multiples of the node's spacing, decreasing

    Returns:
        (limit, extrapolation error estimate)
    """
    if not 0 <= surface_index < len(quad):
        raise InvalidArgumentError(f"Node index {surface_index} out of range")
    return boundary_limit(
        lambda x: single_layer(quad, k, c, x),
        quad.nodes[surface_index],
        quad.normals[surface_index],
        float(quad.spacing[surface_index]),
        side,
        derivative=True,
        ladder=ladder,
    )


def ladder_orders(k: float, r_max: float) -> tuple[int, int]:
    """Angular orders for ladder work: n_theta >= max(128, 39 k r_max), even, n_phi = 2 n_theta."""
    n_theta = max(128, math.ceil(39.0 * k * r_max))
    n_theta += n_theta % 2
    return n_theta, 2 * n_theta


def _fibonacci_directions(n: int) -> np.ndarray:
    i = np.arange(n) + 0.5
    theta = np.arccos(1.0 - 2.0 * i / n)
    phi = np.mod(math.pi * (1.0 + math.sqrt(5.0)) * i, 2.0 * math.pi)
    return unit_vectors(theta, phi)


def probe_nodes(quad: SurfaceQuadrature, n: int) -> list[int]:
    """Indices of n well-spread nodes: nearest nodes to a Fibonacci set of directions."""
    if n < 1:
        raise InvalidArgumentError(f"Need at least one probe, got {n}")
    targets = quad.center + quad.extent * _fibonacci_directions(n)
    _, indices = quad.tree.query(targets)
    return sorted(set(int(i) for i in np.atleast_1d(indices)))


@dataclass
class JumpRecord:
    index: int
    point: np.ndarray
    interior: complex
    exterior: complex
    interior_error: float
    exterior_error: float

    @property
    def jump(self) -> complex:
        return self.interior - self.exterior


@dataclass
class JumpReport:
    """Interior and exterior normal-derivative limits at probe nodes."""

    c: float
    k: float
    records: list[JumpRecord] = field(default_factory=list)

    @property
    def max_jump_error(self) -> float:
        """max |jump - c| over the probes."""
        return max(abs(r.jump - self.c) for r in self.records)

    @property
    def max_exterior(self) -> float:
        return max(abs(r.exterior) for r in self.records)

    def to_dict(self) -> dict:
        return {
            "c": self.c,
            "k": self.k,
            "max_jump_error": self.max_jump_error,
            "max_exterior": self.max_exterior,
            "records": [
                {
                    "index": r.index,
                    "point": r.point.tolist(),
                    "interior": r.interior,
                    "exterior": r.exterior,
                    "jump": r.jump,
                    "interior_error": r.interior_error,
                    "exterior_error": r.exterior_error,
                }
                for r in self.records
            ],
        }


def jump_report(
    quad: SurfaceQuadrature,
    k: float,
    c: float,
    indices: Optional[Sequence[int]] = None,
    n_probes: int = 12,
    ladder: Sequence[float] = DEFAULT_LADDER,
) -> JumpReport:
    """Jump (u_N)+ - (u_N)- of the single layer at probe nodes, both sides on the same ladder."""
    k = check_wavenumber(k)
    indices = list(indices) if indices is not None else probe_nodes(quad, n_probes)

    def measure(i: int) -> JumpRecord:
        inner, inner_err = boundary_normal_derivative(quad, k, c, i, "interior", ladder)
        outer, outer_err = boundary_normal_derivative(quad, k, c, i, "exterior", ladder)
        return JumpRecord(i, quad.nodes[i].copy(), inner, outer, inner_err, outer_err)

    return JumpReport(c=c, k=k, records=parallel_map(measure, indices))


# =============================================================================
# Far field
# =============================================================================

def _fit_exponent(radii: np.ndarray, values: np.ndarray, floor: np.ndarray) -> Optional[float]:
    """Least-squares slope of log values against log radii over samples above the floor."""
    keep = values > floor
    if np.count_nonzero(keep) < 3:
        return None
    slope, _ = np.polyfit(np.log(radii[keep]), np.log(values[keep]), 1)
    return float(slope)


@dataclass
class FarFieldReport:
    """Far-field amplitudes A(R) along one ray and fitted decay exponents."""

    k: float
    c: float
    beta: np.ndarray
    transform: complex                 # c F_S(k beta)
    radii: list[float]
    amplitudes: list[complex]
    amplitude_errors: list[float]
    sample_radii: list[float]
    decay_exponent: Optional[float]
    remainder_exponent: Optional[float]
    radiation_exponent: Optional[float]
    vanishing: bool

    def satisfies_decay(self, order: float, tolerance: float = 0.2) -> bool:
        """Whether |u| = O(r^-order) along the ray, up to tolerance in the exponent."""
        if self.vanishing:
            return True
        return self.decay_exponent is not None and self.decay_exponent <= -order + tolerance

    @property
    def decay_label(self) -> str:
        if self.vanishing:
            return "vanishing"
        if self.decay_exponent is None:
            return "not fitted"
        return f"{self.decay_exponent:.3f}"

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "c": self.c,
            "beta": self.beta.tolist(),
            "transform": self.transform,
            "radii": self.radii,
            "amplitudes": self.amplitudes,
            "amplitude_errors": self.amplitude_errors,
            "sample_radii": self.sample_radii,
            "decay_exponent": self.decay_exponent,
            "remainder_exponent": self.remainder_exponent,
            "radiation_exponent": self.radiation_exponent,
            "vanishing": self.vanishing,
        }


def far_field_compare(quad: SurfaceQuadrature, k: float, c: float, beta, radii: Sequence[float]) -> FarFieldReport:
    """Compare u(-R beta) with its far-field form c F_S(k beta) e^{ikR} / (4 pi R).

    Also fits, over DECAY_SAMPLES log-spaced radii in [5, 40] r_max, the
    decay exponents of |u| (-1 generically, -2 when the transform vanishes
    on |xi| = k), of the remainder |u - c F_S e^{ikr}/(4 pi r)| (-2) and of
    the radiation quantity |u_r - iku| (-2). Samples below the noise floor
    are left out; a field below it everywhere is reported as vanishing.

    Raises:
        InvalidArgumentError: If a radius is below 5 r_max
    """
    k = check_wavenumber(k)
    beta = check_unit_vector(beta)
    r_max = float(np.max(np.linalg.norm(quad.nodes, axis=1)))
    radii = [float(R) for R in radii]
    if not radii or min(radii) < FAR_FIELD_MIN_RATIO * r_max:
        raise InvalidArgumentError(f"Far-field radii must be >= {FAR_FIELD_MIN_RATIO:g} r_max = {FAR_FIELD_MIN_RATIO * r_max:.4g}")

    transform = c * surface_transform(quad, k, beta)

    def u(r: float) -> complex:
        return single_layer(quad, k, c, -r * beta)

    amplitudes = [complex(FOUR_PI * R * np.exp(-1j * k * R) * u(R)) for R in radii]
    errors = [abs(a - transform) for a in amplitudes]

    lo, hi = DECAY_SAMPLE_RANGE
    samples = np.geomspace(lo * r_max, hi * r_max, DECAY_SAMPLES)
    values = np.array([u(r) for r in samples])
    scale = abs(c) * quad.area / FOUR_PI
    floor = NOISE_FLOOR * scale / samples

    magnitude = np.abs(values)
    vanishing = bool(np.all(magnitude <= floor))
    decay = None if vanishing else _fit_exponent(samples, magnitude, floor)

    leading = transform * np.exp(1j * k * samples) / (FOUR_PI * samples)
    remainder = _fit_exponent(samples, np.abs(values - leading), floor / samples)

    delta = 1e-3 / k
    u_r = np.array([(u(r + delta) - u(r - delta)) / (2.0 * delta) for r in samples])
    radiation = _fit_exponent(samples, np.abs(u_r - 1j * k * values), floor / samples)

    return FarFieldReport(
        k=k,
        c=c,
        beta=beta,
        transform=transform,
        radii=radii,
        amplitudes=amplitudes,
        amplitude_errors=errors,
        sample_radii=samples.tolist(),
        decay_exponent=decay,
        remainder_exponent=remainder,
        radiation_exponent=radiation,
        vanishing=vanishing,
    )


# =============================================================================
# PDE residuals
# =============================================================================

_STENCIL = np.vstack([np.eye(3), -np.eye(3)])


def helmholtz_residual(field: Field, k: float, x, h: float, shape: Optional[Shape] = None) -> complex:
    """7-point finite-difference value of (Laplacian + k^2) field at x.

    Args:
        field: Evaluator x -> complex
        k: Wavenumber
        x: Stencil center
        h: Stencil step
        shape: When given, every stencil point must lie on x's side of S

    Raises:
        StencilError: If the stencil crosses S or enters the evaluation collar
    """
    k = check_wavenumber(k)
    if h <= 0:
        raise InvalidArgumentError(f"Stencil step must be positive, got {h}")
    x = np.asarray(x, dtype=float)
    points = np.vstack([x, x + h * _STENCIL])

    if shape is not None:
        regions = {point_locate(shape, p).region for p in points}
        if Region.NEAR_SURFACE in regions or len(regions) > 1:
            raise StencilError(f"Stencil of step {h:g} at {x.tolist()} crosses the surface")

    try:
        values = [field(p) for p in points]
    except CollarViolationError as exc:
        raise StencilError(f"Stencil of step {h:g} at {x.tolist()} enters the collar: {exc}") from exc

    center = values[0]
    laplacian = (sum(values[1:]) - 6.0 * center) / (h * h)
    return complex(laplacian + k * k * center)
