"""Special functions and closed-form reference solutions.

Spherical Bessel j0 and its derivative, the outgoing Helmholtz kernel
g(x, y, k) = e^{ik|x-y|} / (4 pi |x-y|) with its far-field form, the
radial solution of the overdetermined problem on a ball, and the
wavenumbers at which a sphere or a ball has a zero sphere.
"""

import math
from typing import Literal, Union

import numpy as np
from scipy.optimize import bisect

from .exceptions import InvalidArgumentError, SingularEvaluationError

# Scalar aliases for the domain types. A WaveNumber is a float k > 0, a
# ComplexAmplitude a finite complex value.
WaveNumber = float
ComplexAmplitude = complex
ArrayLike = Union[float, np.ndarray]

FOUR_PI = 4.0 * math.pi

# Below this argument j0 and j0' switch to their Taylor series.
SERIES_CUTOFF = 1e-2

# |j0'(ka)| at or below this makes the ball solution degenerate.
DEGENERATE_DERIVATIVE = 1e-10

UNIT_TOLERANCE = 1e-12

# Taylor coefficients of sin(r)/r and of its derivative.
_J0_SERIES = (1.0, -1.0 / 6.0, 1.0 / 120.0, -1.0 / 5040.0, 1.0 / 362880.0, -1.0 / 39916800.0)
_J0_PRIME_SERIES = (-1.0 / 3.0, 1.0 / 30.0, -1.0 / 840.0, 1.0 / 45360.0, -1.0 / 3991680.0)


def check_wavenumber(k: float) -> WaveNumber:
    """Validate a wavenumber and return it as a float."""
    k = float(k)
    if not math.isfinite(k) or k <= 0:
        raise InvalidArgumentError(f"Wavenumber must be positive and finite, got {k}")
    return k


def check_unit_vector(beta, tolerance: float = UNIT_TOLERANCE) -> np.ndarray:
    """Return beta as a float array, rejecting vectors that are not unit length."""
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (3,):
        raise InvalidArgumentError(f"Direction must be a 3-vector, got shape {beta.shape}")
    norm = float(np.linalg.norm(beta))
    if abs(norm - 1.0) > tolerance:
        raise InvalidArgumentError(f"Direction is not a unit vector (|beta| = {norm!r})")
    return beta


def _scalar_or_array(values: np.ndarray, scalar: bool):
    return float(values) if scalar else values


def sph_bessel_j0(r: ArrayLike) -> ArrayLike:
    """Spherical Bessel function j0(r) = sin(r)/r.

    Args:
        r: Nonnegative argument (scalar or array)

    Returns:
        j0(r), with the removable singularity at 0 resolved by series

    Raises:
        InvalidArgumentError: If any r is negative
    """
    scalar = np.ndim(r) == 0
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise InvalidArgumentError("j0 is only evaluated for r >= 0")

    small = r < SERIES_CUTOFF
    safe = np.where(small, 1.0, r)
    out = np.sin(safe) / safe
    if np.any(small):
        r2 = r * r
        out = np.where(small, np.polynomial.polynomial.polyval(r2, _J0_SERIES), out)
    return _scalar_or_array(out, scalar)


def sph_bessel_j0_prime(r: ArrayLike) -> ArrayLike:
    """Derivative j0'(r) = cos(r)/r - sin(r)/r^2.

    Raises:
        InvalidArgumentError: If any r is negative
    """
    scalar = np.ndim(r) == 0
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise InvalidArgumentError("j0' is only evaluated for r >= 0")

    small = r < SERIES_CUTOFF
    safe = np.where(small, 1.0, r)
    out = np.cos(safe) / safe - np.sin(safe) / (safe * safe)
    if np.any(small):
        r2 = r * r
        out = np.where(small, r * np.polynomial.polynomial.polyval(r2, _J0_PRIME_SERIES), out)
    return _scalar_or_array(out, scalar)


def green(x, y, k: float) -> ComplexAmplitude:
    """Outgoing Helmholtz kernel e^{ik|x-y|} / (4 pi |x-y|).

    Raises:
        SingularEvaluationError: If x and y coincide
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dist = float(np.linalg.norm(x - y))
    if dist == 0.0:
        raise SingularEvaluationError(f"Kernel evaluated at coincident points {x.tolist()}")
    return complex(np.exp(1j * k * dist) / (FOUR_PI * dist))


def green_many(x, sources: np.ndarray, k: float) -> np.ndarray:
    """Kernel values g(x, s_i, k) for a stack of source points (no singularity check)."""
    dist = np.linalg.norm(np.asarray(sources) - np.asarray(x, dtype=float), axis=-1)
    return np.exp(1j * k * dist) / (FOUR_PI * dist)


def green_farfield(abs_x: float, beta, y, k: float) -> ComplexAmplitude:
    """Leading far-field term e^{ik|x|}/(4 pi |x|) * e^{ik beta.y} with beta = -x/|x|.

    Raises:
        InvalidArgumentError: If abs_x is not positive or beta is not a unit vector
    """
    if abs_x <= 0:
        raise InvalidArgumentError(f"|x| must be positive, got {abs_x}")
    beta = check_unit_vector(beta)
    phase = k * float(np.dot(beta, np.asarray(y, dtype=float)))
    return complex(np.exp(1j * k * abs_x) / (FOUR_PI * abs_x) * np.exp(1j * phase))


def ball_interior_solution(r: float, a: float, k: float, c: float) -> ComplexAmplitude:
    """Radial solution u = c j0(kr) / (k j0'(ka)) of the overdetermined problem on a ball.

    Args:
        r: Distance from the ball center, 0 <= r <= a
        a: Ball radius
        k: Wavenumber
        c: Neumann datum

    Returns:
        u(r) as a (real-valued) complex amplitude

    Raises:
        InvalidArgumentError: If r is outside [0, a]
        SingularEvaluationError: If |j0'(ka)| <= 1e-10
    """
    k = check_wavenumber(k)
    if a <= 0:
        raise InvalidArgumentError(f"Ball radius must be positive, got {a}")
    if r < 0 or r > a:
        raise InvalidArgumentError(f"r = {r} is outside the ball of radius {a}")
    denominator = k * sph_bessel_j0_prime(k * a)
    if abs(denominator) <= DEGENERATE_DERIVATIVE * k:
        raise SingularEvaluationError(f"j0'(ka) vanishes at ka = {k * a}")
    return complex(c * sph_bessel_j0(k * r) / denominator)


def ball_interior_solution_dr(r: float, a: float, k: float, c: float) -> float:
    """Radial derivative of ball_interior_solution: c j0'(kr) / j0'(ka)."""
    k = check_wavenumber(k)
    denominator = sph_bessel_j0_prime(k * a)
    if abs(denominator) <= DEGENERATE_DERIVATIVE:
        raise SingularEvaluationError(f"j0'(ka) vanishes at ka = {k * a}")
    return c * sph_bessel_j0_prime(k * r) / denominator


def ball_volume_transform(a: float, k: float) -> float:
    """Fourier transform of a ball's indicator on |xi| = k: (4 pi/k^3)(sin ka - ka cos ka)."""
    x = k * a
    if x < SERIES_CUTOFF:
        # 4 pi a^3 (1/3 - x^2/30 + x^4/840)
        return FOUR_PI * a**3 * (1.0 / 3.0 - x * x / 30.0 + x**4 / 840.0)
    return FOUR_PI / k**3 * (math.sin(x) - x * math.cos(x))


def _volume_zero_function(x: float) -> float:
    return math.sin(x) - x * math.cos(x)


def zero_wavenumbers(a: float, kind: Literal["surface", "volume"], n: int) -> list[WaveNumber]:
    """Wavenumbers at which a sphere (surface) or ball (volume) of radius a has a zero sphere.

    Surface zeros satisfy j0(ka) = 0, i.e. ka = m pi. Volume zeros satisfy
    sin(ka) - ka cos(ka) = 0; the m-th one lies in (m pi, (m + 1/2) pi) where
    the function changes sign, and is found by bisection.

    Raises:
        InvalidArgumentError: If a <= 0, n < 1 or kind is unknown
    """
    if a <= 0:
        raise InvalidArgumentError(f"Radius must be positive, got {a}")
    if n < 1:
        raise InvalidArgumentError(f"Need at least one zero, got n = {n}")

    if kind == "surface":
        return [m * math.pi / a for m in range(1, n + 1)]
    if kind != "volume":
        raise InvalidArgumentError(f"Unknown zero kind: {kind!r}")

    zeros = []
    for m in range(1, n + 1):
        x = bisect(_volume_zero_function, m * math.pi, (m + 0.5) * math.pi, xtol=1e-14, rtol=4 * np.finfo(float).eps)
        zeros.append(x / a)
    return zeros
