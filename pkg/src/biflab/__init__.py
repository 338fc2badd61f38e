"""Lyapunov exponents, multiplier polynomials and bifurcation currents for quadratic rational maps."""

from .errors import BiflabError
from .moduli2 import AffineLine, ModuliPoint
from .ratmap import RationalMap

__version__ = "0.1.0"

__all__ = ["AffineLine", "BiflabError", "ModuliPoint", "RationalMap", "__version__"]
