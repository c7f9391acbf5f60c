import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from zerosphere.exceptions import InvalidArgumentError
from zerosphere.fourier import (
    build_quadrature,
    normalizer,
    scan_wavenumbers,
    surface_transform,
    transform_many,
    volume_transform,
    zero_sphere_residual,
)
from zerosphere.geometry import (
    QuadratureOrders,
    default_orders,
    direction_grid,
    rotate_shape,
    sphere,
    surface_quadrature,
    translate_shape,
    volume_quadrature,
)
from zerosphere.kernels import ball_volume_transform, sph_bessel_j0


BETAS = [
    (0.0, 0.0, 1.0),
    (1.0, 0.0, 0.0),
    (0.6, 0.0, -0.8),
    (1 / math.sqrt(3), 1 / math.sqrt(3), 1 / math.sqrt(3)),
]


# =============================================================================
# Transforms
# =============================================================================

@pytest.mark.parametrize("ka", [0.5, math.pi, 4.0, 7.3, 12.0])
@pytest.mark.parametrize("beta", BETAS)
def test_sphere_surface_transform_oracle(ka, beta):
    a = 1.5
    k = ka / a
    orders = default_orders(k, a)
    quad = surface_quadrature(sphere(a), orders.n_theta, orders.n_phi)
    expected = 4 * math.pi * a * a * sph_bessel_j0(ka)
    value = surface_transform(quad, k, beta)
    assert abs(value - expected) < 1e-9 * 4 * math.pi * a * a


@pytest.mark.parametrize("ka", [0.5, 4.4934, 9.0])
def test_ball_volume_transform_oracle(ka):
    orders = default_orders(ka, 1.0)
    vquad = volume_quadrature(sphere(1.0), 24, orders.n_theta, orders.n_phi)
    for beta in BETAS:
        value = volume_transform(vquad, ka, beta)
        assert abs(value - ball_volume_transform(1.0, ka)) < 1e-9 * 4 * math.pi / 3


@pytest.mark.parametrize("shape_fixture", ["ellipsoid", "star_y20"])
@pytest.mark.parametrize("k", [2.0, 7.0])
def test_transform_converged_at_default_orders(shape_fixture, k, request):
    """Doubling both angular orders moves F_S by less than 1e-9 of the area."""
    shape = request.getfixturevalue(shape_fixture)
    orders = default_orders(k, shape.max_radius)
    coarse = surface_quadrature(shape, orders.n_theta, orders.n_phi)
    fine = surface_quadrature(shape, 2 * orders.n_theta, 2 * orders.n_phi)
    directions = np.array(BETAS)
    change = np.abs(transform_many(fine, k, directions) - transform_many(coarse, k, directions))
    assert np.max(change) <= 1e-9 * fine.area


def test_transform_rejects_non_unit_direction(sphere_quad):
    with pytest.raises(InvalidArgumentError):
        surface_transform(sphere_quad, 1.0, (1.0, 1.0, 0.0))


def test_conjugate_symmetry(star_y20, dirs):
    quad = surface_quadrature(star_y20, 24, 48)
    forward = transform_many(quad, 3.3, dirs.directions)
    backward = transform_many(quad, 3.3, -dirs.directions)
    assert_allclose(backward, np.conj(forward), atol=1e-12 * quad.area)


def test_translated_sphere_transform_picks_up_phase():
    offset = np.array([0.3, -0.4, 1.2])
    quad0 = surface_quadrature(sphere(1.0), 32, 64)
    quad1 = surface_quadrature(sphere(1.0, center=offset), 32, 64)
    beta = np.array([0.0, 0.6, 0.8])
    expected = np.exp(1j * 2.0 * beta @ offset) * surface_transform(quad0, 2.0, beta)
    assert surface_transform(quad1, 2.0, beta) == pytest.approx(expected, abs=1e-12)


def test_blocked_evaluation_matches_direct(star_y20, monkeypatch):
    import zerosphere.fourier as fourier

    quad = surface_quadrature(star_y20, 16, 32)
    directions = direction_grid(8, 16).directions
    direct = transform_many(quad, 2.0, directions)
    monkeypatch.setattr(fourier, "_BLOCK_ELEMENTS", 3 * len(quad))
    assert_allclose(transform_many(quad, 2.0, directions), direct, rtol=1e-14)


# =============================================================================
# Residuals
# =============================================================================

def test_sphere_residual_is_isotropic(sphere_quad, dirs):
    residual_max, residual_l2 = zero_sphere_residual(sphere_quad, 2.0, dirs)
    assert residual_max == pytest.approx(abs(sph_bessel_j0(2.0)), abs=1e-12)
    assert residual_l2 == pytest.approx(residual_max, abs=1e-12)


def test_residual_small_k_limit(star_y20, dirs):
    quad = surface_quadrature(star_y20, 16, 32)
    residual_max, _ = zero_sphere_residual(quad, 1e-6, dirs)
    assert residual_max == pytest.approx(1.0, abs=1e-9)
    assert normalizer(quad) == pytest.approx(quad.area)


@pytest.mark.parametrize("shape_fixture", ["star_y20", "ellipsoid"])
def test_residual_translation_invariant(shape_fixture, request, dirs):
    shape = request.getfixturevalue(shape_fixture)
    moved = translate_shape(shape, (2.0, -1.0, 0.5))
    r0 = zero_sphere_residual(surface_quadrature(shape, 32, 64), 3.0, dirs)
    r1 = zero_sphere_residual(surface_quadrature(moved, 32, 64), 3.0, dirs)
    assert_allclose(r1, r0, atol=1e-12)


def test_residual_rotation_invariant(ellipsoid):
    """Rotation only permutes directions, so the L2 residual on a fine grid is unchanged."""
    dense = direction_grid(48, 96)
    rotated = rotate_shape(ellipsoid, np.array([[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0]]))
    r0 = zero_sphere_residual(surface_quadrature(ellipsoid, 32, 64), 2.5, dense)[1]
    r1 = zero_sphere_residual(surface_quadrature(rotated, 32, 64), 2.5, dense)[1]
    assert r1 == pytest.approx(r0, rel=1e-8)


@pytest.mark.parametrize("lam", [0.5, 2.0])
def test_scaling(lam, dirs):
    quad1 = surface_quadrature(sphere(1.0), 24, 48)
    quad_l = surface_quadrature(sphere(lam), 24, 48)
    for beta in BETAS[:2]:
        value = surface_transform(quad_l, 2.0 / lam, beta)
        assert value == pytest.approx(lam**2 * surface_transform(quad1, 2.0, beta), rel=1e-12)

    v1 = volume_quadrature(sphere(1.0), 12, 24, 48)
    v_l = volume_quadrature(sphere(lam), 12, 24, 48)
    assert volume_transform(v_l, 2.0 / lam, BETAS[0]) == pytest.approx(
        lam**3 * volume_transform(v1, 2.0, BETAS[0]), rel=1e-12
    )


def test_build_quadrature_modes(unit_sphere):
    orders = QuadratureOrders(8, 16, 8)
    assert len(build_quadrature(unit_sphere, "surface", orders)) == 8 * 16
    assert len(build_quadrature(unit_sphere, "volume", orders)) == 8 * 8 * 16
    with pytest.raises(InvalidArgumentError):
        build_quadrature(unit_sphere, "edge", orders)


# =============================================================================
# Scans
# =============================================================================

def test_sphere_scan_finds_zeros(unit_sphere, dirs):
    curve = scan_wavenumbers(unit_sphere, 2.0, 7.0, 251, dirs)
    assert len(curve.samples) == 251
    assert [round(m.k, 6) for m in curve.candidates] == [round(math.pi, 6), round(2 * math.pi, 6)]
    for candidate in curve.candidates:
        assert candidate.residual < 1e-6
    assert curve.min_residual < 1e-6
    assert curve.metadata["orders"] == {"n_theta": 38, "n_phi": 76}


@pytest.mark.parametrize("shape_fixture", ["ellipsoid", "star_y20"])
def test_non_sphere_scan_has_no_candidates(shape_fixture, request, dirs):
    shape = request.getfixturevalue(shape_fixture)
    curve = scan_wavenumbers(shape, 2.0, 7.0, 251, dirs, QuadratureOrders(48, 96))
    assert curve.candidates == []
    assert curve.min_residual > 1e-4
    assert len(curve.minima) >= 1


@pytest.mark.parametrize("k_min, k_max", [(math.pi, 5.0), (2.0, math.pi)])
def test_zero_on_scan_endpoint(unit_sphere, k_min, k_max):
    curve = scan_wavenumbers(unit_sphere, k_min, k_max, 51, direction_grid(8, 16))
    assert len(curve.candidates) == 1
    assert curve.candidates[0].k == pytest.approx(math.pi, abs=1e-9)
    assert k_min <= curve.candidates[0].k <= k_max


def test_endpoint_minimum_stays_in_interval(unit_sphere, dirs):
    # |j0| falls all the way across [1, 2]
    curve = scan_wavenumbers(unit_sphere, 1.0, 2.0, 5, dirs)
    assert [m.k for m in curve.minima] == [2.0]
    assert curve.minima[0].residual == pytest.approx(abs(sph_bessel_j0(2.0)), abs=1e-12)


def test_volume_scan_finds_ball_zero(unit_sphere):
    coarse = direction_grid(8, 16)
    curve = scan_wavenumbers(unit_sphere, 4.3, 4.7, 21, coarse, QuadratureOrders(32, 64, 24), mode="volume")
    assert len(curve.candidates) == 1
    assert curve.candidates[0].k == pytest.approx(4.493409457909064, abs=1e-7)


def test_scan_on_prebuilt_quadrature(sphere_quad, dirs):
    curve = scan_wavenumbers(sphere_quad, 3.0, 3.3, 16, dirs)
    assert curve.metadata["shape"]["type"] == "sphere"
    assert len(curve.candidates) == 1
    with pytest.raises(InvalidArgumentError):
        scan_wavenumbers(sphere_quad, 3.0, 3.3, 16, dirs, mode="volume")


@pytest.mark.parametrize("k_min, k_max, n_k", [(3.0, 3.0, 10), (4.0, 3.0, 10), (1.0, 2.0, 1), (0.0, 2.0, 10)])
def test_scan_rejects_bad_grid(unit_sphere, dirs, k_min, k_max, n_k):
    with pytest.raises(InvalidArgumentError):
        scan_wavenumbers(unit_sphere, k_min, k_max, n_k, dirs)


def test_curve_rows_and_dict(unit_sphere, dirs):
    curve = scan_wavenumbers(unit_sphere, 1.0, 2.0, 5, dirs)
    rows = curve.csv_rows()
    assert [row[0] for row in rows] == pytest.approx([1.0, 1.25, 1.5, 1.75, 2.0])
    data = curve.to_dict()
    assert data["n_samples"] == 5
    assert data["candidates"] == []
