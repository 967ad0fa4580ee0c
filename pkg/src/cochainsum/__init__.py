"""Riemann sums of differential forms through pair-groupoid cochains."""
from . import cochain, exprlang, mesh, moyal, quadrature, vanest

__version__ = "0.1.0"

__all__ = ["cochain", "exprlang", "mesh", "moyal", "quadrature", "vanest", "__version__"]
