"""Exact structural identifiability analysis for linear compartment models."""

from .coeffs import (
    CoefficientMap,
    coefficient_map,
    coefficients_via_charpoly,
    coefficients_via_forests,
    enumerate_forests,
    jacobian,
)
from .errors import *  # noqa: F401,F403
from .identifiability import (
    DegreeReport,
    IdentifiabilityReport,
    SingularLocusResult,
    catenary_divisibility_check,
    check_submodel,
    factor_multiplicity,
    identifiability_degree,
    is_generically_locally_identifiable,
    singular_locus_equation,
    tree_multiplicity_procedure,
    vandermonde_check,
    verify_family_singular_locus,
    verify_tree_conjecture,
)
from .linalg import PolyMatrix, charpoly_coeffs, determinant, generic_rank
from .model import CompartmentModel, bidirectional_tree, family, parse_model
from .poly import ParamId, SparsePoly, parse_poly

__version__ = "0.1.0"
