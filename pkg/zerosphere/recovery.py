"""Derivative-free shape recovery from the sphericity residual.

At fixed k the residual max_beta |F_S(k beta)| / area is minimized over star
shapes a0 (1 + sum c_lm Y_lm), 2 <= l <= L_max, with scipy's Nelder-Mead.
Degree 0 duplicates a0 and degree 1 approximates translations, a flat
direction of the residual, so neither is searched. The minimizer should be a
sphere whose radius a satisfies j0(ka) = 0.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from .exceptions import InvalidArgumentError, InvalidShapeError
from .fourier import zero_sphere_residual
from .geometry import (
    MAX_DEGREE,
    PROBE_ORDERS,
    DirectionGrid,
    QuadratureOrders,
    Shape,
    StarShape,
    direction_grid,
    probe_radius_range,
    sphere,
    surface_quadrature,
)
from .harmonics import angular_product_rule, harmonic_indices
from .kernels import check_wavenumber, sph_bessel_j0

PENALTY = 1e6
# Best objective above this after a converged simplex triggers a restart
STALL_THRESHOLD = 1e-4
RECOVERY_ORDERS = QuadratureOrders(n_theta=24, n_phi=48)
RECOVERY_DIRECTIONS = (12, 24)


def parameter_indices(l_max: int) -> list[tuple[int, int]]:
    """Searched (l, m) pairs: degrees 2..l_max."""
    return harmonic_indices(l_max, l_min=2)


def _l_max_from_size(size: int) -> int:
    if size == 1:
        return 1
    l_max = math.isqrt(size + 3) - 1
    if (l_max + 1) ** 2 - 3 != size:
        raise InvalidArgumentError(f"{size} parameters do not match any degree cap")
    return l_max


def encode_shape(shape: StarShape, l_max: int) -> np.ndarray:
    """Parameter vector [a0, c_lm for 2 <= l <= l_max] of a star shape.

    Raises:
        InvalidArgumentError: If the shape has degree 0 or 1 terms, or terms above l_max
    """
    values = {(l, m): c for l, m, c in shape.coeffs}
    stray = [(l, m) for (l, m), c in values.items() if c != 0.0 and (l < 2 or l > l_max)]
    if stray:
        raise InvalidArgumentError(f"Coefficients {stray} are outside the searched degrees 2..{l_max}")
    return np.array([shape.base_radius] + [values.get(index, 0.0) for index in parameter_indices(l_max)])


def decode_shape(params, center=(0.0, 0.0, 0.0)) -> StarShape:
    """StarShape from a parameter vector (see encode_shape).

    Raises:
        InvalidShapeError: If the decoded radius is not positive everywhere
    """
    params = np.asarray(params, dtype=float)
    indices = parameter_indices(_l_max_from_size(len(params)))
    coeffs = tuple((l, m, float(c)) for (l, m), c in zip(indices, params[1:]) if c != 0.0)
    return StarShape(base_radius=float(params[0]), coeffs=coeffs, center=tuple(center))


def residual_objective(
    params,
    k: float,
    orders: QuadratureOrders = RECOVERY_ORDERS,
    dirs: Optional[DirectionGrid] = None,
    center=(0.0, 0.0, 0.0),
) -> float:
    """residual_max of the decoded shape at fixed k, or a penalty for invalid shapes.

    Shapes whose radius is not positive on the probe grid score
    PENALTY + (size of the violation) and are never integrated.
    """
    params = np.asarray(params, dtype=float)
    dirs = dirs if dirs is not None else direction_grid(*RECOVERY_DIRECTIONS)
    if not np.all(np.isfinite(params)):
        return math.inf
    indices = parameter_indices(_l_max_from_size(len(params)))
    coeffs = tuple((l, m, float(c)) for (l, m), c in zip(indices, params[1:]))
    r_min, _ = probe_radius_range(float(params[0]), coeffs)
    if r_min <= 0:
        return PENALTY - r_min
    try:
        shape = decode_shape(params, center)
    except InvalidShapeError:
        return PENALTY
    quad = surface_quadrature(shape, orders.n_theta, orders.n_phi)
    return zero_sphere_residual(quad, k, dirs)[0]


def distance_to_sphere(shape: Shape, n_theta: int = PROBE_ORDERS[0], n_phi: int = PROBE_ORDERS[1]) -> tuple[float, float]:
    """RMS of (r - rho) / rho over the unit sphere, minimized over rho.

    Returns:
        (distance, best rho); rho = int r^2 / int r
    """
    grid = angular_product_rule(n_theta, n_phi)
    r = shape.radius(grid.theta, grid.phi)
    rho = float(np.dot(grid.weights, r * r) / np.dot(grid.weights, r))
    distance = math.sqrt(float(np.dot(grid.weights, ((r - rho) / rho) ** 2)) / (4.0 * math.pi))
    return distance, rho


@dataclass
class RecoveryConfig:
    """Settings for one recovery run."""

    k: float
    l_max: int = 4
    initial: StarShape = field(default_factory=lambda: sphere(1.0))
    max_evaluations: int = 2000
    simplex_scale: float = 0.05
    tolerance: float = 1e-8
    seed: int = 0
    max_restarts: int = 3
    orders: QuadratureOrders = RECOVERY_ORDERS
    directions: tuple[int, int] = RECOVERY_DIRECTIONS

    def __post_init__(self):
        self.k = check_wavenumber(self.k)
        if not 0 <= self.l_max <= MAX_DEGREE:
            raise InvalidArgumentError(f"l_max must be in [0, {MAX_DEGREE}], got {self.l_max}")
        if not self.tolerance > 0:
            raise InvalidArgumentError(f"Tolerance must be positive, got {self.tolerance}")
        if not self.simplex_scale > 0:
            raise InvalidArgumentError(f"Simplex scale must be positive, got {self.simplex_scale}")
        if self.max_evaluations < 1:
            raise InvalidArgumentError(f"Need at least one evaluation, got {self.max_evaluations}")
        if self.max_restarts < 0:
            raise InvalidArgumentError(f"Restart count cannot be negative, got {self.max_restarts}")


@dataclass
class RecoveryResult:
    shape: StarShape
    objective: float
    trace: list[tuple[int, float]]
    distance: float
    implied_radius: float
    j0_residual: float
    converged: bool
    evaluations: int
    restarts: int

    @property
    def iterations(self) -> int:
        return self.trace[-1][0] if self.trace else 0

    def trace_rows(self) -> list[list[float]]:
        return [[i, value] for i, value in self.trace]

    def to_dict(self) -> dict:
        return {
            "shape": self.shape.describe(),
            "objective": self.objective,
            "distance_to_sphere": self.distance,
            "implied_radius": self.implied_radius,
            "j0_residual": self.j0_residual,
            "converged": self.converged,
            "evaluations": self.evaluations,
            "iterations": self.iterations,
            "restarts": self.restarts,
        }


def _initial_simplex(x0: np.ndarray, scale: float, rng: np.random.Generator) -> np.ndarray:
    """x0 plus one vertex per axis, stepped by +-scale (relative for a0) with seeded signs."""
    steps = np.full(len(x0), scale)
    steps[0] = scale * abs(x0[0])
    signs = rng.choice((-1.0, 1.0), size=len(x0))
    return np.vstack([x0, x0 + np.diag(signs * steps)])


def recover_shape(config: RecoveryConfig, verbose: bool = False) -> RecoveryResult:
    """Minimize the sphericity residual over star shapes with Nelder-Mead.

    Standard coefficients (reflection 1, expansion 2, contraction 0.5,
    shrink 0.5); a run stops when the objective spread over the simplex
    drops below config.tolerance or the evaluation budget is spent. A run
    that stops above STALL_THRESHOLD restarts from the best point (up to
    max_restarts times). Hitting the budget is reported as non-converged.

    Args:
        config: RecoveryConfig
        verbose: Print progress

    Returns:
        RecoveryResult with the best-so-far objective trace
    """
    center = config.initial.center
    x0 = encode_shape(config.initial, config.l_max)
    dirs = direction_grid(*config.directions)
    rng = np.random.default_rng(config.seed)

    state = {"evaluations": 0, "best": math.inf, "best_x": x0.copy()}

    def objective(params: np.ndarray) -> float:
        value = residual_objective(params, config.k, config.orders, dirs, center)
        state["evaluations"] += 1
        if value < state["best"]:
            state["best"] = value
            state["best_x"] = np.array(params, dtype=float)
        return value

    trace = [(0, objective(x0))]
    if verbose:
        print(f"  Recovering at k = {config.k:g}, {len(x0)} parameters, initial objective {trace[0][1]:.3e}")

    def record(_xk) -> None:
        trace.append((trace[-1][0] + 1, state["best"]))

    converged = trace[0][1] <= config.tolerance
    restarts = 0
    start = x0
    while not converged:
        remaining = config.max_evaluations - state["evaluations"]
        if remaining <= 0:
            break
        result = minimize(
            objective,
            start,
            method="Nelder-Mead",
            callback=record,
            options={
                "initial_simplex": _initial_simplex(start, config.simplex_scale, rng),
                "fatol": config.tolerance,
                "xatol": np.inf,
                "maxfev": remaining,
                "adaptive": False,
            },
        )
        spread_met = bool(result.success)
        if verbose:
            print(f"  Run {restarts + 1}: best {state['best']:.3e} after {state['evaluations']} evaluations")
        if spread_met and state["best"] <= STALL_THRESHOLD:
            converged = True
            break
        if not spread_met or restarts >= config.max_restarts:
            break
        restarts += 1
        start = state["best_x"]

    shape = decode_shape(state["best_x"], center)
    distance, rho = distance_to_sphere(shape)
    result = RecoveryResult(
        shape=shape,
        objective=state["best"],
        trace=trace,
        distance=distance,
        implied_radius=rho,
        j0_residual=abs(float(sph_bessel_j0(config.k * rho))),
        converged=converged,
        evaluations=state["evaluations"],
        restarts=restarts,
    )
    if verbose:
        print(f"  Distance to sphere {distance:.3e}, implied a = {rho:.8f}, |j0(ka)| = {result.j0_residual:.3e}")
    return result
