"""Real spherical harmonics and the Gauss product rule on the unit sphere.

Convention: orthonormal real harmonics without the Condon-Shortley phase,

    Y_l0  = N_l0 P_l(cos theta)
    Y_lm  = sqrt(2) N_lm P_l^m(cos theta) cos(m phi)        m > 0
    Y_l-m = sqrt(2) N_lm P_l^m(cos theta) sin(m phi)        m > 0

with N_lm = sqrt((2l+1)/(4 pi) (l-m)!/(l+m)!) and P_l^m the associated
Legendre function taken positive near theta = 0. The basis satisfies the
addition theorem sum_m Y_lm(u) Y_lm(v) = (2l+1)/(4 pi) P_l(u.v).
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import lpmv

from .exceptions import InvalidArgumentError


@dataclass(frozen=True, eq=False)
class AngularGrid:
    """Gauss-Legendre in cos(theta) x trapezoid in phi, flattened theta-major."""

    theta: np.ndarray
    phi: np.ndarray
    weights: np.ndarray        # solid-angle weights, sum 4 pi
    theta_steps: np.ndarray    # local theta spacing per node
    phi_step: float
    n_theta: int
    n_phi: int


def angular_product_rule(n_theta: int, n_phi: int) -> AngularGrid:
    """Product rule on S^2: GL nodes in x = cos(theta), uniform phi_j = 2 pi j / n_phi."""
    if n_theta < 1 or n_phi < 1:
        raise InvalidArgumentError(f"Angular orders must be positive, got {n_theta}x{n_phi}")
    x, wx = np.polynomial.legendre.leggauss(n_theta)
    # theta increasing from the north pole
    x, wx = x[::-1], wx[::-1]
    theta_1d = np.arccos(x)
    phi_step = 2.0 * math.pi / n_phi
    phi_1d = phi_step * np.arange(n_phi)

    theta = np.repeat(theta_1d, n_phi)
    phi = np.tile(phi_1d, n_theta)
    weights = np.repeat(wx, n_phi) * phi_step
    # d(theta) ~ dx / sin(theta)
    theta_steps = np.repeat(wx / np.sin(theta_1d), n_phi)
    return AngularGrid(theta, phi, weights, theta_steps, phi_step, n_theta, n_phi)


def unit_vectors(theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Radial unit vectors r_hat(theta, phi), shape (..., 3)."""
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


def spherical_angles(vectors: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Polar and azimuthal angles of (nonzero) vectors; phi in [0, 2 pi)."""
    vectors = np.asarray(vectors, dtype=float)
    r = np.linalg.norm(vectors, axis=-1)
    safe = np.where(r == 0, 1.0, r)
    theta = np.arccos(np.clip(vectors[..., 2] / safe, -1.0, 1.0))
    phi = np.mod(np.arctan2(vectors[..., 1], vectors[..., 0]), 2.0 * math.pi)
    return theta, phi


def harmonic_indices(l_max: int, l_min: int = 0, skip_degrees: tuple[int, ...] = ()) -> list[tuple[int, int]]:
    """All (l, m) pairs with l_min <= l <= l_max, m = -l..l, minus skipped degrees."""
    return [(l, m) for l in range(l_min, l_max + 1) if l not in skip_degrees for m in range(-l, l + 1)]


def _legendre(m: int, l: int, x: np.ndarray) -> np.ndarray:
    """Associated Legendre P_l^m(x) without the Condon-Shortley phase (0 when m > l)."""
    if m > l:
        return np.zeros_like(x)
    return (-1.0) ** m * lpmv(m, l, x)


def _normalization(l: int, m: int) -> float:
    return math.sqrt((2 * l + 1) / (4.0 * math.pi) * math.factorial(l - m) / math.factorial(l + m))


def _check_index(l: int, m: int) -> None:
    if l < 0 or abs(m) > l:
        raise InvalidArgumentError(f"Invalid harmonic index (l={l}, m={m})")


def real_sph_harm(l: int, m: int, theta, phi) -> np.ndarray:
    """Real orthonormal spherical harmonic Y_lm(theta, phi)."""
    return real_sph_harm_derivatives(l, m, theta, phi)[0]


def real_sph_harm_derivatives(l: int, m: int, theta, phi) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Y_lm together with its theta and phi derivatives.

    The theta derivative uses the recurrences
        d/dtheta P_l^0 = -P_l^1
        d/dtheta P_l^m = ((l+m)(l-m+1) P_l^(m-1) - P_l^(m+1)) / 2    m >= 1
    which hold for the phase-free Legendre functions.
    """
    _check_index(l, m)
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    x = np.cos(theta)
    am = abs(m)
    norm = _normalization(l, am)

    p = _legendre(am, l, x)
    if am == 0:
        dp = -_legendre(1, l, x)
    else:
        dp = 0.5 * ((l + am) * (l - am + 1) * _legendre(am - 1, l, x) - _legendre(am + 1, l, x))

    if m == 0:
        return norm * p, norm * dp, np.zeros_like(p)

    scale = math.sqrt(2.0) * norm
    if m > 0:
        c, s = np.cos(am * phi), np.sin(am * phi)
        return scale * p * c, scale * dp * c, -am * scale * p * s
    c, s = np.cos(am * phi), np.sin(am * phi)
    return scale * p * s, scale * dp * s, am * scale * p * c


def fit_real_sph_harm(values: np.ndarray, grid: AngularGrid, indices: list[tuple[int, int]]) -> np.ndarray:
    """Project samples on an angular grid onto the given harmonics.

    Exact for band-limited data when the grid integrates products of
    harmonics exactly (n_theta > l_max and n_phi > 2 l_max).
    """
    return np.array([np.dot(grid.weights, values * real_sph_harm(l, m, grid.theta, grid.phi)) for l, m in indices])
