"""Operator calculus on circle-boundary cochains, with a verification CLI."""

from .boundary_functions import (BoundaryFunction, ConfigPoint, combine, cup,
                                 in_configuration, k_extend, k_reduce, memoized,
                                 orientation_cocycle)
from .cochain_ops import (FdSpec, QuadratureSpec, cauchy_L, coboundary,
                          contraction_I, derivative_under_I, flow_derivative,
                          frobenius_Q)
from .group_core import (CartanCoords, GroupElement, IwasawaCoords, act_angle,
                         cartan, compose, inverse, iwasawa, make_element,
                         map_triple, one_param)
from .pde_solvers import (BasepointScheme, LineIntegralSpec, TailSpec,
                          canonical_basepoint, solve_cauchy_R, solve_frobenius_S)
from .primitive import (StaircaseConfig, VerificationReport, estimate_sup,
                        named_cocycle, primitive_P, staircase_chain,
                        verify_primitive)
from .rng import Xorshift64Star

__version__ = "0.1.0"

__all__ = [
    "BoundaryFunction", "ConfigPoint", "combine", "cup", "in_configuration",
    "k_extend", "k_reduce", "memoized", "orientation_cocycle",
    "FdSpec", "QuadratureSpec", "cauchy_L", "coboundary", "contraction_I",
    "derivative_under_I", "flow_derivative", "frobenius_Q",
    "CartanCoords", "GroupElement", "IwasawaCoords", "act_angle", "cartan",
    "compose", "inverse", "iwasawa", "make_element", "map_triple", "one_param",
    "BasepointScheme", "LineIntegralSpec", "TailSpec", "canonical_basepoint",
    "solve_cauchy_R", "solve_frobenius_S",
    "StaircaseConfig", "VerificationReport", "estimate_sup", "named_cocycle",
    "primitive_P", "staircase_chain", "verify_primitive",
    "Xorshift64Star",
]
