"""Finite-element certification of mean Hadamard inequalities.

Decides, on rectangle-union domains with piecewise-constant weights f,
whether int |grad phi|^2 + f det grad phi >= 0 over clamped vector fields by
assembling the P1 quadratic form and inspecting its smallest eigenvalue.
"""

__version__ = "0.1.0"

from .domain import BCRule, DomainSpec, RectRegion, build_preset
from .fem import OperatorSet, assemble, cof, element_gradients, functional_value
from .mesh import TriMesh, classify_boundary, refine, triangulate
from .spectral import EigenResult, is_positive_definite, min_eig

__all__ = [
    "BCRule", "DomainSpec", "RectRegion", "build_preset",
    "OperatorSet", "assemble", "cof", "element_gradients", "functional_value",
    "TriMesh", "classify_boundary", "refine", "triangulate",
    "EigenResult", "is_positive_definite", "min_eig",
]
