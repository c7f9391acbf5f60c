"""Surface and volume Fourier transforms on the sphere |xi| = k.

F_S(k beta) = sum_i w_i e^{ik beta.s_i} approximates the transform of the
constant-density surface measure, F_D(k beta) = sum_j v_j e^{ik beta.x_j}
that of the indicator of D. The sphericity residual normalizes |F| by its
k -> 0 value (area or volume), and scan_wavenumbers searches k for zero
spheres, i.e. wavenumbers where F vanishes in every direction.
"""

import math
from dataclasses import dataclass, field
from typing import Literal, Optional, Union

import numpy as np
from scipy.optimize import minimize_scalar

from .exceptions import InvalidArgumentError
from .geometry import (
    DirectionGrid,
    QuadratureOrders,
    Shape,
    SurfaceQuadrature,
    VolumeQuadrature,
    default_orders,
    surface_quadrature,
    volume_quadrature,
)
from .kernels import check_unit_vector, check_wavenumber
from .workers import parallel_map

Quadrature = Union[SurfaceQuadrature, VolumeQuadrature]
Mode = Literal["surface", "volume"]

DEFAULT_THRESHOLD = 1e-6
DEFAULT_REFINE_TOL = 1e-10

# Upper bound on the node x direction block held in memory at once
_BLOCK_ELEMENTS = 2_000_000


def transform_many(quad: Quadrature, k: float, directions: np.ndarray) -> np.ndarray:
    """F(k beta_q) for a stack of unit directions, shape (Q,).

    Each entry is sum_i w_i cos(phase_i) + i sum_i w_i sin(phase_i) with the
    nodes in their stored order, so a direction's value does not depend on
    which block it lands in.
    """
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    block = max(1, _BLOCK_ELEMENTS // max(1, len(quad.weights)))
    out = np.empty(len(directions), dtype=complex)
    for start in range(0, len(directions), block):
        chunk = directions[start:start + block]
        phase = k * (quad.nodes @ chunk.T)
        out[start:start + block] = quad.weights @ np.cos(phase) + 1j * (quad.weights @ np.sin(phase))
    return out


def surface_transform(quad: SurfaceQuadrature, k: float, beta) -> complex:
    """Quadrature value of the surface integral of e^{ik beta.s} over S."""
    beta = check_unit_vector(beta)
    return complex(transform_many(quad, k, beta[None, :])[0])


def volume_transform(vquad: VolumeQuadrature, k: float, beta) -> complex:
    """Quadrature value of the volume integral of e^{ik beta.x} over D."""
    beta = check_unit_vector(beta)
    return complex(transform_many(vquad, k, beta[None, :])[0])


def normalizer(quad: Quadrature) -> float:
    """k -> 0 value of the transform: total area or total volume."""
    return float(np.sum(quad.weights))


def zero_sphere_residual(quad: Quadrature, k: float, dirs: DirectionGrid) -> tuple[float, float]:
    """Max and weighted-L2 sphericity residuals of |F(k beta)| over the direction grid.

    Both are divided by the k -> 0 normalizer A, so they are dimensionless.
    Only |F| enters, which makes them invariant under translation.

    Returns:
        (residual_max, residual_l2)
    """
    magnitude = np.abs(transform_many(quad, k, dirs.directions))
    scale = normalizer(quad)
    residual_max = float(np.max(magnitude)) / scale
    residual_l2 = math.sqrt(float(np.dot(dirs.weights, magnitude**2)) / (4.0 * math.pi)) / scale
    return residual_max, residual_l2


# =============================================================================
# Wavenumber scans
# =============================================================================

@dataclass(frozen=True)
class ResidualSample:
    k: float
    residual_max: float
    residual_l2: float


@dataclass(frozen=True)
class ResidualMinimum:
    """A local minimum of residual_max refined by golden-section search."""

    k: float
    residual: float


@dataclass
class ResidualCurve:
    """Sampled k -> residual map with refined minima and zero-sphere candidates."""

    samples: list[ResidualSample]
    minima: list[ResidualMinimum] = field(default_factory=list)
    candidates: list[ResidualMinimum] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def k_values(self) -> np.ndarray:
        return np.array([s.k for s in self.samples])

    @property
    def min_residual(self) -> float:
        """Smallest residual_max over samples and refined minima."""
        values = [s.residual_max for s in self.samples] + [m.residual for m in self.minima]
        return min(values)

    def csv_rows(self) -> list[list[float]]:
        return [[s.k, s.residual_max, s.residual_l2] for s in self.samples]

    def to_dict(self) -> dict:
        return {
            "metadata": self.metadata,
            "n_samples": len(self.samples),
            "min_residual": self.min_residual,
            "minima": [{"k": m.k, "residual": m.residual} for m in self.minima],
            "candidates": [{"k": m.k, "residual": m.residual} for m in self.candidates],
        }


def build_quadrature(shape: Shape, mode: Mode, orders: QuadratureOrders) -> Quadrature:
    """Surface or volume rule for a shape at the given orders."""
    if mode == "surface":
        return surface_quadrature(shape, orders.n_theta, orders.n_phi)
    if mode == "volume":
        return volume_quadrature(shape, orders.n_r, orders.n_theta, orders.n_phi)
    raise InvalidArgumentError(f"Unknown transform mode: {mode!r}")


def _refine_minimum(quad: Quadrature, dirs: DirectionGrid, bracket: tuple[float, float, float], tol: float) -> ResidualMinimum:
    def objective(k: float) -> float:
        return zero_sphere_residual(quad, k, dirs)[0]

    result = minimize_scalar(objective, bracket=bracket, method="golden", tol=tol / (2.0 * bracket[1]))
    return ResidualMinimum(k=float(result.x), residual=float(result.fun))


def _refine_endpoint(
    quad: Quadrature, dirs: DirectionGrid, k_end: float, k_next: float, value: float, tol: float
) -> ResidualMinimum:
    """Minimum between a scan endpoint and its neighbour, never leaving the scan interval."""
    def objective(k: float) -> float:
        return zero_sphere_residual(quad, k, dirs)[0]

    bounds = (min(k_end, k_next), max(k_end, k_next))
    result = minimize_scalar(objective, bounds=bounds, method="bounded", options={"xatol": tol})
    if result.fun < value:
        return ResidualMinimum(k=float(result.x), residual=float(result.fun))
    return ResidualMinimum(k=float(k_end), residual=float(value))


def scan_wavenumbers(
    shape: Union[Shape, SurfaceQuadrature],
    k_min: float,
    k_max: float,
    n_k: int,
    dirs: DirectionGrid,
    orders: Optional[QuadratureOrders] = None,
    mode: Mode = "surface",
    threshold: float = DEFAULT_THRESHOLD,
    refine_tol: float = DEFAULT_REFINE_TOL,
    verbose: bool = False,
) -> ResidualCurve:
    """Scan a uniform k grid for zero spheres.

    Every strict local minimum of residual_max is refined by golden-section
    search to refine_tol in k (an endpoint below its neighbour by a bounded
    search inside [k_min, k_max]); refined minima below threshold are reported
    as candidates. Keep the grid step at or below 0.02 / r_max so narrow
    minima are not skipped.

    Args:
        shape: Analytic shape, or a prebuilt SurfaceQuadrature (e.g. from a mesh)
        k_min, k_max: Scan interval, 0 < k_min < k_max
        n_k: Number of grid points, >= 2
        dirs: Direction grid probing |xi| = k
        orders: Quadrature orders (default: resolution rule at k_max)
        mode: "surface" (F_S) or "volume" (F_D)
        threshold: Candidate threshold on the refined residual
        refine_tol: Golden-section tolerance in k
        verbose: Print progress

    Returns:
        ResidualCurve
    """
    k_min = check_wavenumber(k_min)
    k_max = check_wavenumber(k_max)
    if k_min >= k_max:
        raise InvalidArgumentError(f"Need k_min < k_max, got [{k_min}, {k_max}]")
    if n_k < 2:
        raise InvalidArgumentError(f"Need at least 2 scan points, got {n_k}")

    if isinstance(shape, SurfaceQuadrature):
        if mode != "surface":
            raise InvalidArgumentError("Prebuilt surface quadratures only support surface mode")
        quad = shape
        description = {"type": "mesh"} if shape.shape is None else shape.shape.describe()
    else:
        orders = orders or default_orders(k_max, shape.max_radius)
        quad = build_quadrature(shape, mode, orders)
        description = shape.describe()

    k_grid = np.linspace(k_min, k_max, n_k)
    if verbose:
        print(f"  Scanning {n_k} wavenumbers in [{k_min:g}, {k_max:g}] ({mode}, {len(quad)} nodes)")

    pairs = parallel_map(lambda k: zero_sphere_residual(quad, float(k), dirs), k_grid)
    samples = [ResidualSample(float(k), rmax, rl2) for k, (rmax, rl2) in zip(k_grid, pairs)]

    values = np.array([s.residual_max for s in samples])
    interior = np.flatnonzero((values[1:-1] < values[:-2]) & (values[1:-1] < values[2:])) + 1
    brackets = [(k_grid[i - 1], k_grid[i], k_grid[i + 1]) for i in interior]
    minima = parallel_map(lambda b: _refine_minimum(quad, dirs, b, refine_tol), brackets)
    # endpoints count when below their only neighbour
    if values[0] < values[1]:
        minima.insert(0, _refine_endpoint(quad, dirs, k_grid[0], k_grid[1], values[0], refine_tol))
    if values[-1] < values[-2]:
        minima.append(_refine_endpoint(quad, dirs, k_grid[-1], k_grid[-2], values[-1], refine_tol))
    candidates = [m for m in minima if m.residual < threshold]

    if verbose:
        print(f"  {len(minima)} local minima, {len(candidates)} below {threshold:g}")
        for m in candidates:
            print(f"    candidate k = {m.k:.10f} (residual {m.residual:.3e})")

    metadata = {
        "shape": description,
        "mode": mode,
        "orders": quad.orders,
        "directions": dirs.to_dict(),
        "threshold": threshold,
        "k_min": k_min,
        "k_max": k_max,
        "n_k": n_k,
    }
    return ResidualCurve(samples=samples, minima=minima, candidates=candidates, metadata=metadata)
