"""Custom exceptions for zerosphere."""


class ZeroSphereError(Exception):
    """Base exception for zerosphere."""

    pass


class InvalidArgumentError(ZeroSphereError):
    """Argument outside the domain of an operation."""

    pass


class SingularEvaluationError(ZeroSphereError):
    """Kernel or closed form evaluated at a singular point."""

    pass


class CollarViolationError(SingularEvaluationError):
    """Potential evaluated too close to the surface for direct quadrature."""

    pass


class InvalidShapeError(ZeroSphereError):
    """Shape parameters do not describe a valid star-shaped surface."""

    pass


class MeshError(ZeroSphereError):
    """Triangle mesh cannot be used as a closed surface."""

    pass


class MeshParseError(MeshError):
    """Failed to parse OFF file."""

    pass


class NonManifoldMeshError(MeshError):
    """Mesh is not a closed 2-manifold."""

    pass


class MeshOrientationError(MeshError):
    """Mesh faces cannot be oriented consistently outward."""

    pass


class ExtrapolationError(ZeroSphereError):
    """Boundary-limit ladder is invalid or its extrapolation diverges."""

    pass


class StencilError(ZeroSphereError):
    """Finite-difference stencil crosses the surface or its collar."""

    pass


class ResolutionError(ZeroSphereError):
    """Quadrature orders too low for the requested wavenumber."""

    pass


class ReportError(ZeroSphereError):
    """Failed to write a report file."""

    pass
