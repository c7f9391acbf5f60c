import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.special import eval_legendre

from zerosphere.exceptions import InvalidArgumentError
from zerosphere.harmonics import (
    angular_product_rule,
    fit_real_sph_harm,
    harmonic_indices,
    real_sph_harm,
    real_sph_harm_derivatives,
    spherical_angles,
    unit_vectors,
)


def test_product_rule_weights():
    grid = angular_product_rule(12, 24)
    assert len(grid.weights) == 12 * 24
    assert np.sum(grid.weights) == pytest.approx(4 * math.pi, rel=1e-14)
    assert np.all(np.diff(grid.theta[::24]) > 0)


def test_product_rule_rejects_empty():
    with pytest.raises(InvalidArgumentError):
        angular_product_rule(0, 8)


def test_y00_is_constant():
    theta = np.linspace(0.1, 3.0, 7)
    assert_allclose(real_sph_harm(0, 0, theta, theta), 1.0 / math.sqrt(4 * math.pi), rtol=1e-15)


def test_y20_closed_form():
    theta = np.linspace(0.0, math.pi, 9)
    expected = math.sqrt(5.0 / (16.0 * math.pi)) * (3.0 * np.cos(theta) ** 2 - 1.0)
    assert_allclose(real_sph_harm(2, 0, theta, 0.0), expected, atol=1e-15)


@pytest.mark.parametrize("l", [1, 2, 3, 5])
def test_addition_theorem(l):
    rng = np.random.default_rng(l)
    u = rng.normal(size=3)
    v = rng.normal(size=3)
    u, v = u / np.linalg.norm(u), v / np.linalg.norm(v)
    tu, pu = spherical_angles(u)
    tv, pv = spherical_angles(v)
    total = sum(real_sph_harm(l, m, tu, pu) * real_sph_harm(l, m, tv, pv) for m in range(-l, l + 1))
    expected = (2 * l + 1) / (4 * math.pi) * eval_legendre(l, float(np.dot(u, v)))
    assert float(total) == pytest.approx(expected, abs=1e-13)


def test_orthonormal_on_product_rule():
    grid = angular_product_rule(8, 16)
    indices = harmonic_indices(4)
    basis = np.array([real_sph_harm(l, m, grid.theta, grid.phi) for l, m in indices])
    gram = (basis * grid.weights) @ basis.T
    assert_allclose(gram, np.eye(len(indices)), atol=1e-13)


@pytest.mark.parametrize("l, m", [(2, 0), (3, 2), (3, -1), (4, -4)])
def test_derivatives_match_finite_differences(l, m):
    theta, phi, h = 1.1, 0.7, 1e-6
    _, d_theta, d_phi = real_sph_harm_derivatives(l, m, theta, phi)
    fd_theta = (real_sph_harm(l, m, theta + h, phi) - real_sph_harm(l, m, theta - h, phi)) / (2 * h)
    fd_phi = (real_sph_harm(l, m, theta, phi + h) - real_sph_harm(l, m, theta, phi - h)) / (2 * h)
    assert float(d_theta) == pytest.approx(float(fd_theta), abs=1e-8)
    assert float(d_phi) == pytest.approx(float(fd_phi), abs=1e-8)


@pytest.mark.parametrize("l, m", [(-1, 0), (2, 3), (1, -2)])
def test_invalid_index(l, m):
    with pytest.raises(InvalidArgumentError):
        real_sph_harm(l, m, 0.5, 0.5)


def test_harmonic_indices():
    assert len(harmonic_indices(3)) == 16
    assert harmonic_indices(2, l_min=2)[0] == (2, -2)
    assert all(l != 1 for l, _ in harmonic_indices(4, skip_degrees=(1,)))


def test_fit_recovers_coefficients():
    grid = angular_product_rule(6, 12)
    values = 0.3 * real_sph_harm(2, 1, grid.theta, grid.phi) - 0.1 * real_sph_harm(3, -3, grid.theta, grid.phi)
    indices = [(2, 1), (3, -3), (1, 0)]
    assert_allclose(fit_real_sph_harm(values, grid, indices), [0.3, -0.1, 0.0], atol=1e-14)


def test_angles_round_trip():
    vectors = np.array([[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.3, 0.4, -0.866]])
    vectors /= np.linalg.norm(vectors, axis=1)[:, None]
    theta, phi = spherical_angles(vectors)
    assert np.all((phi >= 0) & (phi < 2 * math.pi))
    assert_allclose(unit_vectors(theta, phi), vectors, atol=1e-15)
