"""Layered space-time index codes over algebraic number fields.

The package builds codebooks for layered space-time codes from cyclic
division algebras, computes their exact determinant spectra and side
information gains, and simulates maximum-likelihood decoding over Rayleigh
fading channels.
"""

from .errors import LsticError
from .numfield import AlgebraicInt, BaseRing, TowerSpec, load_tower

__version__ = "0.1.0"

__all__ = [
    "LsticError",
    "AlgebraicInt",
    "BaseRing",
    "TowerSpec",
    "load_tower",
    "__version__",
]
