"""Finite element exterior calculus on simplicial complexes.

Exact layers (``simplicial``, ``polyform``, ``whitney``, ``cohomology``)
work over the rationals; the metric layer (``hodge``) is floating point.
"""

from .errors import FeecError, InvariantError, ParseError
from .simplicial import (
    AffineRealization,
    SimplicialComplex,
    barycentric_subdivision,
    boundary_complex,
    build_closure,
    coboundary_matrix,
    generate,
    incidence_number,
    star,
)

__all__ = [
    "AffineRealization",
    "FeecError",
    "InvariantError",
    "ParseError",
    "SimplicialComplex",
    "barycentric_subdivision",
    "boundary_complex",
    "build_closure",
    "coboundary_matrix",
    "generate",
    "incidence_number",
    "star",
]
__version__ = "0.1.0"
