"""Certified projective dynamics over local fields.

Contraction and proximality certificates, ping-pong freeness for matrix
tuples, free semigroups on the affine line, local growth of subgroups of Lie
groups and Polya-type sublevel-set bounds for monic polynomials.
"""
from .config import DEFAULT, Config, DynamicsConstants
from .errors import TitsDynError
from .field import FieldDescriptor, Padic
from .linalg import Matrix, cartan, singular_ratio

__version__ = "0.1.0"

__all__ = ["Config", "DEFAULT", "DynamicsConstants", "FieldDescriptor", "Matrix", "Padic",
           "TitsDynError", "cartan", "singular_ratio", "__version__"]
