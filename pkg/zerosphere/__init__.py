"""zerosphere - Fourier zero spheres and Helmholtz potentials of smooth 3-D shapes."""

__version__ = "0.1.0"
