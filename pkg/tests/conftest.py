"""Shared fixtures: analytic shapes, quadratures and generated OFF meshes."""

import math

import numpy as np
import pytest

from zerosphere.geometry import Ellipsoid, StarShape, direction_grid, sphere, surface_quadrature


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running acceptance runs")


# =============================================================================
# Mesh generators
# =============================================================================

_ICOSAHEDRON_FACES = [
    [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
    [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
    [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
    [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
]

CUBE_VERTICES = [[x, y, z] for z in (-1.0, 1.0) for y in (-1.0, 1.0) for x in (-1.0, 1.0)]
CUBE_FACES = [
    [0, 2, 3], [0, 3, 1], [4, 5, 7], [4, 7, 6],
    [0, 1, 5], [0, 5, 4], [2, 6, 7], [2, 7, 3],
    [0, 4, 6], [0, 6, 2], [1, 3, 7], [1, 7, 5],
]


def icosphere(level: int) -> tuple[np.ndarray, list[list[int]]]:
    """Unit icosphere: icosahedron with `level` rounds of midpoint subdivision."""
    t = (1.0 + math.sqrt(5.0)) / 2.0
    vertices = [
        [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
        [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
        [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
    ]
    vertices = [list(np.asarray(v, dtype=float) / np.linalg.norm(v)) for v in vertices]
    faces = [list(f) for f in _ICOSAHEDRON_FACES]

    for _ in range(level):
        cache: dict[tuple[int, int], int] = {}

        def midpoint(i: int, j: int) -> int:
            key = (min(i, j), max(i, j))
            if key not in cache:
                p = np.add(vertices[i], vertices[j])
                vertices.append(list(p / np.linalg.norm(p)))
                cache[key] = len(vertices) - 1
            return cache[key]

        refined = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            refined += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        faces = refined

    return np.asarray(vertices), faces


def off_text(vertices, faces) -> str:
    lines = ["OFF", "# generated for tests", f"{len(vertices)} {len(faces)} 0"]
    lines += [" ".join(repr(float(x)) for x in v) for v in vertices]
    lines += ["3 " + " ".join(str(i) for i in f) for f in faces]
    return "\n".join(lines) + "\n"


# =============================================================================
# Fixtures
# =============================================================================

@pytest.fixture(scope="session")
def unit_sphere():
    return sphere(1.0)


@pytest.fixture(scope="session")
def sphere_quad(unit_sphere):
    return surface_quadrature(unit_sphere, 32, 64)


@pytest.fixture(scope="session")
def ellipsoid():
    return Ellipsoid(axes=(1.0, 1.0, 1.2))


@pytest.fixture(scope="session")
def star_y20():
    return StarShape(base_radius=1.0, coeffs=((2, 0, 0.05),))


@pytest.fixture(scope="session")
def dirs():
    return direction_grid(16, 32)


@pytest.fixture
def icosphere_off(tmp_path):
    vertices, faces = icosphere(3)
    path = tmp_path / "icosphere.off"
    path.write_text(off_text(vertices, faces))
    return path


@pytest.fixture
def cube_off(tmp_path):
    path = tmp_path / "cube.off"
    path.write_text(off_text(CUBE_VERTICES, CUBE_FACES))
    return path
