"""Shapes, quadratures and direction grids.

Analytic surfaces are star-shaped about their center and given by a radial
function r(theta, phi): either a truncated real spherical-harmonic series
(StarShape) or an exact ellipsoid (Ellipsoid). Triangle meshes read from
OFF files provide an exploratory, non-smooth alternative.

Quadrature rule of thumb: resolving e^{ik beta.x} over a shape of radius
r_max needs n_theta >= 10 + 4 k r_max (about four nodes per wavelength),
which keeps quadrature error below ~1e-8 for analytic shapes. Cost grows
with k; no upper bound on k is imposed.
"""

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property, lru_cache
from pathlib import Path
from typing import Optional, Union

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.transform import Rotation

from .exceptions import (
    InvalidArgumentError,
    InvalidShapeError,
    MeshOrientationError,
    MeshParseError,
    NonManifoldMeshError,
    ResolutionError,
)
from .harmonics import (
    AngularGrid,
    angular_product_rule,
    fit_real_sph_harm,
    harmonic_indices,
    real_sph_harm_derivatives,
    spherical_angles,
    unit_vectors,
)

MAX_DEGREE = 8
SPHERE_TOLERANCE = 1e-9
MIN_TRIANGLE_AREA = 1e-12
DEFAULT_BAND_FACTOR = 1e-6
MIN_SURFACE_ORDER = 8
MIN_DIRECTION_ORDER = 4

# Dense grid used to check positivity and estimate the extent of a StarShape
PROBE_ORDERS = (48, 96)


# =============================================================================
# Shapes
# =============================================================================

def _as_point(values, name: str) -> tuple[float, float, float]:
    point = tuple(float(v) for v in values)
    if len(point) != 3 or not all(math.isfinite(v) for v in point):
        raise InvalidShapeError(f"{name} must be 3 finite numbers, got {values!r}")
    return point


@lru_cache(maxsize=4)
def _probe_grid(n_theta: int, n_phi: int) -> AngularGrid:
    return angular_product_rule(n_theta, n_phi)


def _series(coeffs, theta: np.ndarray, phi: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sum c_lm Y_lm and its angular derivatives."""
    total = np.zeros_like(theta, dtype=float)
    d_theta = np.zeros_like(total)
    d_phi = np.zeros_like(total)
    for l, m, c in coeffs:
        y, yt, yp = real_sph_harm_derivatives(l, m, theta, phi)
        total += c * y
        d_theta += c * yt
        d_phi += c * yp
    return total, d_theta, d_phi


def probe_radius_range(base_radius: float, coeffs) -> tuple[float, float]:
    """Minimum and maximum of a0 (1 + sum c Y) on the dense probe grid."""
    grid = _probe_grid(*PROBE_ORDERS)
    series = _series(coeffs, grid.theta, grid.phi)[0]
    radii = base_radius * (1.0 + series)
    return float(radii.min()), float(radii.max())


@dataclass(frozen=True)
class StarShape:
    """Star-shaped surface r(theta, phi) = a0 (1 + sum c_lm Y_lm(theta, phi)) about center."""

    base_radius: float
    coeffs: tuple[tuple[int, int, float], ...] = ()
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not math.isfinite(self.base_radius) or self.base_radius <= 0:
            raise InvalidShapeError(f"Base radius must be positive, got {self.base_radius}")
        object.__setattr__(self, "center", _as_point(self.center, "Center"))

        coeffs = []
        seen = set()
        for entry in self.coeffs:
            l, m, c = int(entry[0]), int(entry[1]), float(entry[2])
            if l < 0 or abs(m) > l:
                raise InvalidShapeError(f"Invalid harmonic index (l={l}, m={m})")
            if l > MAX_DEGREE:
                raise InvalidShapeError(f"Degree {l} exceeds the cap L_max = {MAX_DEGREE}")
            if (l, m) in seen:
                raise InvalidShapeError(f"Duplicate coefficient for (l={l}, m={m})")
            if not math.isfinite(c):
                raise InvalidShapeError(f"Coefficient for (l={l}, m={m}) is not finite")
            seen.add((l, m))
            coeffs.append((l, m, c))
        object.__setattr__(self, "coeffs", tuple(sorted(coeffs)))

        r_min, _ = probe_radius_range(self.base_radius, self.coeffs)
        if r_min <= 0:
            raise InvalidShapeError(f"Radius becomes nonpositive (min {r_min:.3g} on probe grid)")

    @property
    def l_max(self) -> int:
        return max((l for l, _, _ in self.coeffs), default=0)

    @property
    def scale(self) -> float:
        return self.base_radius

    @cached_property
    def max_radius(self) -> float:
        return probe_radius_range(self.base_radius, self.coeffs)[1]

    def radius_derivatives(self, theta, phi) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """r, dr/dtheta and dr/dphi at the given angles."""
        theta = np.asarray(theta, dtype=float)
        phi = np.asarray(phi, dtype=float)
        total, d_theta, d_phi = _series(self.coeffs, theta, phi)
        a0 = self.base_radius
        return a0 * (1.0 + total), a0 * d_theta, a0 * d_phi

    def radius(self, theta, phi) -> np.ndarray:
        return self.radius_derivatives(theta, phi)[0]

    def is_sphere(self, tolerance: float = SPHERE_TOLERANCE) -> bool:
        return all(abs(c) <= tolerance for l, _, c in self.coeffs if l >= 1)

    @property
    def sphere_radius(self) -> float:
        """Radius when the shape is a sphere (degree-0 term folded into a0)."""
        c00 = sum(c for l, _, c in self.coeffs if l == 0)
        return self.base_radius * (1.0 + c00 / math.sqrt(4.0 * math.pi))

    def describe(self) -> dict:
        if not self.coeffs:
            return {"type": "sphere", "a": self.base_radius, "center": list(self.center)}
        return {
            "type": "star",
            "a0": self.base_radius,
            "coeffs": [[l, m, c] for l, m, c in self.coeffs],
            "center": list(self.center),
        }


def sphere(a: float, center=(0.0, 0.0, 0.0)) -> StarShape:
    """Sphere of radius a."""
    return StarShape(base_radius=a, center=tuple(center))


_IDENTITY = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))


@dataclass(frozen=True)
class Ellipsoid:
    """Ellipsoid with semi-axes along the columns of orientation, exact radial function."""

    axes: tuple[float, float, float]
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    orientation: tuple[tuple[float, float, float], ...] = _IDENTITY

    def __post_init__(self):
        axes = _as_point(self.axes, "Axes")
        if min(axes) <= 0:
            raise InvalidShapeError(f"Ellipsoid axes must be positive, got {axes}")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "center", _as_point(self.center, "Center"))
        matrix = np.asarray(self.orientation, dtype=float)
        if matrix.shape != (3, 3) or not np.allclose(matrix.T @ matrix, np.eye(3), atol=1e-10):
            raise InvalidShapeError("Ellipsoid orientation must be a rotation matrix")
        object.__setattr__(self, "orientation", tuple(tuple(row) for row in matrix.tolist()))

    @property
    def scale(self) -> float:
        return min(self.axes)

    @property
    def max_radius(self) -> float:
        return max(self.axes)

    @property
    def l_max(self) -> int:
        return 0

    def radius_derivatives(self, theta, phi) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        theta = np.asarray(theta, dtype=float)
        phi = np.asarray(phi, dtype=float)
        rotation_t = np.asarray(self.orientation).T
        st, ct, sp, cp = np.sin(theta), np.cos(theta), np.sin(phi), np.cos(phi)
        u = np.stack([st * cp, st * sp, ct], axis=-1) @ rotation_t.T
        u_theta = np.stack([ct * cp, ct * sp, -st], axis=-1) @ rotation_t.T
        u_phi = np.stack([-st * sp, st * cp, np.zeros_like(st)], axis=-1) @ rotation_t.T

        inv_sq = 1.0 / np.asarray(self.axes) ** 2
        q = np.sum(u * u * inv_sq, axis=-1)
        q_theta = 2.0 * np.sum(u * u_theta * inv_sq, axis=-1)
        q_phi = 2.0 * np.sum(u * u_phi * inv_sq, axis=-1)
        r = q ** -0.5
        factor = -0.5 * q ** -1.5
        return r, factor * q_theta, factor * q_phi

    def radius(self, theta, phi) -> np.ndarray:
        return self.radius_derivatives(theta, phi)[0]

    def is_sphere(self, tolerance: float = SPHERE_TOLERANCE) -> bool:
        return max(self.axes) - min(self.axes) <= tolerance * max(self.axes)

    @property
    def sphere_radius(self) -> float:
        return self.axes[0]

    def describe(self) -> dict:
        info = {"type": "ellipsoid", "axes": list(self.axes), "center": list(self.center)}
        if self.orientation != _IDENTITY:
            info["orientation"] = [list(row) for row in self.orientation]
        return info


Shape = Union[StarShape, Ellipsoid]


def star_radius(shape: Shape, theta: float, phi: float) -> float:
    """Radius of the shape in direction (theta, phi).

    Raises:
        InvalidArgumentError: If the angles are out of range
        InvalidShapeError: If the radius is not positive there
    """
    if not 0.0 <= theta <= math.pi or not 0.0 <= phi < 2.0 * math.pi:
        raise InvalidArgumentError(f"Angles out of range: theta={theta}, phi={phi}")
    r = float(shape.radius(theta, phi))
    if r <= 0:
        raise InvalidShapeError(f"Nonpositive radius {r} at theta={theta}, phi={phi}")
    return r


def translate_shape(shape: Shape, offset) -> Shape:
    """Copy of the shape moved by offset."""
    center = np.asarray(shape.center) + np.asarray(offset, dtype=float)
    return replace(shape, center=tuple(center.tolist()))


def _as_rotation(rotation) -> Rotation:
    if isinstance(rotation, Rotation):
        return rotation
    return Rotation.from_matrix(np.asarray(rotation, dtype=float))


def rotate_shape(shape: Shape, rotation) -> Shape:
    """Rotate a shape (and its center) about the origin.

    StarShape coefficients are rotated numerically: the rotated radial
    function is sampled on a Gauss grid that is exact for the band limit and
    projected back onto the harmonics of each degree.
    """
    rot = _as_rotation(rotation)
    center = tuple(rot.apply(np.asarray(shape.center)).tolist())
    if isinstance(shape, Ellipsoid):
        orientation = rot.as_matrix() @ np.asarray(shape.orientation)
        return Ellipsoid(axes=shape.axes, center=center, orientation=tuple(map(tuple, orientation.tolist())))

    l_max = shape.l_max
    if not shape.coeffs:
        return replace(shape, center=center)
    grid = angular_product_rule(2 * (l_max + 1), 4 * (l_max + 1))
    directions = unit_vectors(grid.theta, grid.phi)
    theta_src, phi_src = spherical_angles(rot.inv().apply(directions))
    values = shape.radius(theta_src, phi_src) / shape.base_radius - 1.0
    indices = harmonic_indices(l_max)
    fitted = fit_real_sph_harm(values, grid, indices)
    coeffs = tuple((l, m, float(c)) for (l, m), c in zip(indices, fitted) if abs(c) > 1e-15)
    return StarShape(base_radius=shape.base_radius, coeffs=coeffs, center=center)


# =============================================================================
# Quadratures
# =============================================================================

@dataclass(frozen=True)
class QuadratureOrders:
    """Orders of the product rules (angular for surfaces, plus radial for volumes)."""

    n_theta: int = 32
    n_phi: int = 64
    n_r: int = 16

    def to_dict(self) -> dict:
        return {"n_theta": self.n_theta, "n_phi": self.n_phi, "n_r": self.n_r}


def required_theta_order(k: float, r_max: float) -> int:
    """Smallest n_theta satisfying n_theta >= 10 + 4 k r_max."""
    return math.ceil(10.0 + 4.0 * k * r_max)


def default_orders(k: float, r_max: float, minimum: int = 32) -> QuadratureOrders:
    """Orders obeying the resolution rule, n_theta even, n_phi = 2 n_theta."""
    n_theta = max(minimum, required_theta_order(k, r_max))
    n_theta += n_theta % 2
    return QuadratureOrders(n_theta=n_theta, n_phi=2 * n_theta, n_r=max(16, n_theta // 2))


def check_resolution(orders: QuadratureOrders, k: float, r_max: float) -> QuadratureOrders:
    """Reject orders below the resolution rule: n_theta >= 10 + 4 k r_max, n_phi >= 2 n_theta.

    Raises:
        ResolutionError: If either angular order is too small
    """
    required = required_theta_order(k, r_max)
    if orders.n_theta < required:
        raise ResolutionError(
            f"n_theta = {orders.n_theta} under-resolves k = {k:g} on r_max = {r_max:g} (need >= {required})"
        )
    if orders.n_phi < 2 * orders.n_theta:
        raise ResolutionError(f"n_phi = {orders.n_phi} is below 2 n_theta = {2 * orders.n_theta}")
    return orders


@dataclass(frozen=True, eq=False)
class SurfaceQuadrature:
    """Nodes on S with outward unit normals, area weights and local node spacing."""

    nodes: np.ndarray
    normals: np.ndarray
    weights: np.ndarray
    spacing: np.ndarray
    center: np.ndarray
    shape: Optional[Shape] = None
    orders: dict = field(default_factory=dict)

    @property
    def area(self) -> float:
        return float(np.sum(self.weights))

    @cached_property
    def extent(self) -> float:
        """Largest node distance from the center."""
        return float(np.max(np.linalg.norm(self.nodes - self.center, axis=1)))

    @cached_property
    def tree(self) -> cKDTree:
        return cKDTree(self.nodes)

    def __len__(self) -> int:
        return len(self.weights)


@dataclass(frozen=True, eq=False)
class VolumeQuadrature:
    """Interior nodes with volume weights; boundary is the matching surface rule."""

    nodes: np.ndarray
    weights: np.ndarray
    spacing: np.ndarray
    center: np.ndarray
    boundary: SurfaceQuadrature
    shape: Optional[Shape] = None
    orders: dict = field(default_factory=dict)

    @property
    def volume(self) -> float:
        return float(np.sum(self.weights))

    @property
    def extent(self) -> float:
        return self.boundary.extent

    def __len__(self) -> int:
        return len(self.weights)


def _check_orders(name: str, orders: tuple[int, ...], minimum: int) -> None:
    if any(int(n) != n or n < minimum for n in orders):
        raise InvalidArgumentError(f"{name} orders must be integers >= {minimum}, got {orders}")


def _frame(theta: np.ndarray, phi: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    st, ct, sp, cp = np.sin(theta), np.cos(theta), np.sin(phi), np.cos(phi)
    r_hat = np.stack([st * cp, st * sp, ct], axis=-1)
    theta_hat = np.stack([ct * cp, ct * sp, -st], axis=-1)
    phi_hat = np.stack([-sp, cp, np.zeros_like(sp)], axis=-1)
    return r_hat, theta_hat, phi_hat


def surface_quadrature(shape: Shape, n_theta: int, n_phi: int) -> SurfaceQuadrature:
    """Product rule on the parametrized surface x(theta, phi) = center + r r_hat.

    Gauss-Legendre in cos(theta) times the trapezoid rule in phi. Weights use
    the exact area element |x_theta x x_phi|; normals are the normalized cross
    product, which points outward for a star-shaped surface.

    Args:
        shape: StarShape or Ellipsoid
        n_theta: Gauss-Legendre order in cos(theta), >= 8
        n_phi: Trapezoid points in phi, >= 8

    Returns:
        SurfaceQuadrature with n_theta * n_phi nodes
    """
    _check_orders("Surface", (n_theta, n_phi), MIN_SURFACE_ORDER)
    grid = angular_product_rule(n_theta, n_phi)
    r, r_theta, r_phi = shape.radius_derivatives(grid.theta, grid.phi)
    if np.any(r <= 0):
        raise InvalidShapeError("Radius is nonpositive at a quadrature node")

    sin_theta = np.sin(grid.theta)
    r_hat, theta_hat, phi_hat = _frame(grid.theta, grid.phi)
    center = np.asarray(shape.center, dtype=float)
    nodes = center + r[:, None] * r_hat

    q = r_phi / sin_theta
    stretch = np.sqrt(r * r + r_theta * r_theta + q * q)
    normals = (r[:, None] * r_hat - r_theta[:, None] * theta_hat - q[:, None] * phi_hat) / stretch[:, None]
    weights = grid.weights * r * stretch

    h_theta = np.sqrt(r * r + r_theta * r_theta) * grid.theta_steps
    h_phi = np.sqrt(r_phi * r_phi + (r * sin_theta) ** 2) * grid.phi_step
    spacing = np.maximum(h_theta, h_phi)

    return SurfaceQuadrature(
        nodes=nodes,
        normals=normals,
        weights=weights,
        spacing=spacing,
        center=center,
        shape=shape,
        orders={"n_theta": n_theta, "n_phi": n_phi},
    )


def volume_quadrature(shape: Shape, n_r: int, n_theta: int, n_phi: int) -> VolumeQuadrature:
    """Radial Gauss-Legendre on [0, r(theta, phi)] nested in the angular product rule.

    Weights carry the rho^2 Jacobian, so sum(weights) is exact for the
    enclosed volume up to the angular rule's error.
    """
    _check_orders("Volume", (n_r, n_theta, n_phi), MIN_SURFACE_ORDER)
    grid = angular_product_rule(n_theta, n_phi)
    radius = shape.radius(grid.theta, grid.phi)
    if np.any(radius <= 0):
        raise InvalidShapeError("Radius is nonpositive at a quadrature node")

    t, wt = np.polynomial.legendre.leggauss(n_r)
    half = 0.5 * radius[:, None]
    rho = half * (1.0 + t[None, :])
    weights = grid.weights[:, None] * half * wt[None, :] * rho * rho

    r_hat = unit_vectors(grid.theta, grid.phi)
    center = np.asarray(shape.center, dtype=float)
    nodes = center + rho[:, :, None] * r_hat[:, None, :]

    h_radial = half * wt[None, :]
    h_angular = rho * np.maximum(grid.theta_steps, np.sin(grid.theta) * grid.phi_step)[:, None]
    spacing = np.maximum(h_radial, h_angular)

    return VolumeQuadrature(
        nodes=nodes.reshape(-1, 3),
        weights=weights.ravel(),
        spacing=spacing.ravel(),
        center=center,
        boundary=surface_quadrature(shape, n_theta, n_phi),
        shape=shape,
        orders={"n_r": n_r, "n_theta": n_theta, "n_phi": n_phi},
    )


# =============================================================================
# Direction grids
# =============================================================================

@dataclass(frozen=True, eq=False)
class DirectionGrid:
    """Unit vectors beta_q with weights summing to 4 pi, closed under beta -> -beta."""

    directions: np.ndarray
    weights: np.ndarray
    n_theta: int
    n_phi: int

    def __len__(self) -> int:
        return len(self.weights)

    def to_dict(self) -> dict:
        return {"n_theta": self.n_theta, "n_phi": self.n_phi}


def direction_grid(n_theta: int, n_phi: int) -> DirectionGrid:
    """Gauss-Legendre x trapezoid grid on S^2.

    GL nodes are symmetric in cos(theta) and n_phi is even, so the antipode
    (pi - theta, phi + pi) of every node is a node.
    """
    _check_orders("Direction", (n_theta, n_phi), MIN_DIRECTION_ORDER)
    if n_phi % 2:
        raise InvalidArgumentError(f"n_phi must be even for antipodal closure, got {n_phi}")
    grid = angular_product_rule(n_theta, n_phi)
    return DirectionGrid(
        directions=unit_vectors(grid.theta, grid.phi),
        weights=grid.weights,
        n_theta=n_theta,
        n_phi=n_phi,
    )


# =============================================================================
# Triangle meshes
# =============================================================================

@dataclass(frozen=True, eq=False)
class TriMesh:
    """Closed, consistently oriented triangle mesh (faces reoriented outward on construction)."""

    vertices: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        vertices = np.asarray(self.vertices, dtype=float)
        triangles = np.asarray(self.triangles, dtype=np.int64)
        if vertices.ndim != 2 or vertices.shape[1] != 3 or len(vertices) == 0:
            raise MeshParseError(f"Vertices must have shape (n, 3), got {vertices.shape}")
        if triangles.ndim != 2 or triangles.shape[1] != 3 or len(triangles) == 0:
            raise MeshParseError(f"Triangles must have shape (m, 3), got {triangles.shape}")
        if triangles.min() < 0 or triangles.max() >= len(vertices):
            raise MeshParseError("Triangle references a vertex index out of range")

        _check_manifold(triangles)
        areas = _triangle_areas(vertices, triangles)
        if np.any(areas <= MIN_TRIANGLE_AREA):
            raise NonManifoldMeshError(f"{int(np.sum(areas <= MIN_TRIANGLE_AREA))} degenerate triangles")

        a, b, c = (vertices[triangles[:, i]] for i in range(3))
        signed_volume = float(np.sum(np.einsum("ij,ij->i", a, np.cross(b, c)))) / 6.0
        if abs(signed_volume) <= MIN_TRIANGLE_AREA:
            raise MeshOrientationError("Mesh encloses no volume; cannot orient outward")
        if signed_volume < 0:
            triangles = triangles[:, ::-1].copy()

        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "triangles", triangles)

    @property
    def area(self) -> float:
        return float(np.sum(_triangle_areas(self.vertices, self.triangles)))


def _triangle_areas(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    a, b, c = (vertices[triangles[:, i]] for i in range(3))
    return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)


def _check_manifold(triangles: np.ndarray) -> None:
    """Every edge in exactly two faces, traversed in opposite directions."""
    directed = np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    undirected = np.sort(directed, axis=1)
    _, counts = np.unique(undirected, axis=0, return_counts=True)
    if np.any(counts != 2):
        open_edges = int(np.sum(counts == 1))
        raise NonManifoldMeshError(
            f"Mesh is not a closed manifold: {open_edges} boundary edges, "
            f"{int(np.sum(counts > 2))} edges shared by more than two faces"
        )
    _, directed_counts = np.unique(directed, axis=0, return_counts=True)
    if np.any(directed_counts != 1):
        raise MeshOrientationError("Faces are not consistently oriented")


def load_mesh(path: Path) -> TriMesh:
    """Read an ASCII OFF file of triangles.

    Raises:
        MeshParseError: If the file is missing or malformed
        NonManifoldMeshError: If the surface is open or degenerate
        MeshOrientationError: If faces cannot be oriented outward
    """
    path = Path(path)
    if not path.exists():
        raise MeshParseError(f"Mesh file not found: {path}")

    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise MeshParseError(f"Cannot read mesh file {path}: {e}")

    tokens = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            tokens.extend(line.split())

    if not tokens or tokens[0] != "OFF":
        raise MeshParseError(f"{path.name}: missing OFF header")
    tokens = tokens[1:]

    try:
        n_vertices, n_faces = int(tokens[0]), int(tokens[1])
        pos = 3
        vertex_values = [float(v) for v in tokens[pos:pos + 3 * n_vertices]]
        if len(vertex_values) != 3 * n_vertices:
            raise MeshParseError(f"{path.name}: expected {n_vertices} vertices")
        pos += 3 * n_vertices
        faces = []
        for i in range(n_faces):
            count = int(tokens[pos])
            if count != 3:
                raise MeshParseError(f"{path.name}: face {i} has {count} vertices, only triangles are supported")
            faces.append([int(v) for v in tokens[pos + 1:pos + 4]])
            pos += 4
    except (ValueError, IndexError) as e:
        raise MeshParseError(f"{path.name}: malformed OFF data ({e})") from e

    if any(len(face) != 3 for face in faces):
        raise MeshParseError(f"{path.name}: truncated face list")

    return TriMesh(vertices=np.array(vertex_values).reshape(-1, 3), triangles=np.array(faces))


@lru_cache(maxsize=8)
def _subdivision_template(level: int) -> tuple[np.ndarray, np.ndarray]:
    """Barycentric (u, v) corners of the 4^level sub-triangles, orientation preserved."""
    n = 2 ** level
    corners = []
    for i in range(n):
        for j in range(n - i):
            corners.append([(i, j), (i + 1, j), (i, j + 1)])
            if i + j < n - 1:
                corners.append([(i + 1, j), (i + 1, j + 1), (i, j + 1)])
    corners = np.asarray(corners, dtype=float) / n
    return corners[..., 0], corners[..., 1]


def mesh_quadrature(mesh: TriMesh, refinement: int = 0) -> SurfaceQuadrature:
    """Edge-midpoint rule on each triangle after `refinement` uniform subdivisions.

    Flat faces are integrated exactly; normals are the face normals.
    """
    if refinement < 0:
        raise InvalidArgumentError(f"Refinement must be >= 0, got {refinement}")
    a, b, c = (mesh.vertices[mesh.triangles[:, i]] for i in range(3))
    cross = np.cross(b - a, c - a)
    face_normals = cross / np.linalg.norm(cross, axis=1)[:, None]

    u, v = _subdivision_template(refinement)
    # sub-triangle corners, shape (faces, subs, 3 corners, 3 coords)
    e1, e2 = (b - a)[:, None, None, :], (c - a)[:, None, None, :]
    corners = a[:, None, None, :] + u[None, :, :, None] * e1 + v[None, :, :, None] * e2
    midpoints = 0.5 * (corners + np.roll(corners, -1, axis=2))

    edges = np.linalg.norm(corners - np.roll(corners, -1, axis=2), axis=3)
    sub_area = 0.5 * np.linalg.norm(
        np.cross(corners[:, :, 1] - corners[:, :, 0], corners[:, :, 2] - corners[:, :, 0]), axis=2
    )
    n_faces, n_subs = sub_area.shape

    nodes = midpoints.reshape(-1, 3)
    weights = np.repeat((sub_area / 3.0).ravel(), 3)
    spacing = np.repeat(edges.max(axis=2).ravel(), 3)
    normals = np.repeat(face_normals, n_subs * 3, axis=0)
    center = np.sum(nodes * weights[:, None], axis=0) / np.sum(weights)

    return SurfaceQuadrature(
        nodes=nodes,
        normals=normals,
        weights=weights,
        spacing=spacing,
        center=center,
        shape=None,
        orders={"refinement": refinement, "faces": int(n_faces)},
    )


# =============================================================================
# Point location
# =============================================================================

class Region(Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"
    NEAR_SURFACE = "near_surface"


@dataclass(frozen=True)
class PointLocation:
    """Region of a point and its radial gap |x - center| - r(theta_x, phi_x)."""

    region: Region
    gap: float


def point_locate(shape: Shape, x, band: Optional[float] = None) -> PointLocation:
    """Locate x relative to the surface by comparing |x - center| with r along x's direction.

    Args:
        shape: StarShape or Ellipsoid
        x: Point to classify
        band: Half-width of the NearSurface collar (default 1e-6 * shape scale)
    """
    if band is None:
        band = DEFAULT_BAND_FACTOR * shape.scale
    offset = np.asarray(x, dtype=float) - np.asarray(shape.center)
    distance = float(np.linalg.norm(offset))
    if distance == 0.0:
        return PointLocation(Region.INSIDE, -float(shape.radius(0.0, 0.0)))
    theta, phi = spherical_angles(offset)
    gap = distance - float(shape.radius(theta, phi))
    if abs(gap) < band:
        return PointLocation(Region.NEAR_SURFACE, gap)
    return PointLocation(Region.INSIDE if gap < 0 else Region.OUTSIDE, gap)
