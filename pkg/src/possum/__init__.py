"""Explicit Schmüdgen-type positivity certificates on the ball and simplex.

The package constructs, for a polynomial nonnegative on the unit ball or the
standard simplex, an explicit member of the truncated preordering of
prescribed degree 2r witnessing nonnegativity up to an epsilon that decays
like 1/r**2, together with the matching kernel-based upper bounds.
"""

from possum.backend import BACKEND
from possum.errors import (
    CertificateInfeasible,
    ConditioningFailure,
    DimensionMismatch,
    DomainError,
    LambdaTooSmall,
    SingularEigenvalue,
)
from possum.poly import MultiPoly, UniPoly, even_odd_split, sup_norm_estimate
from possum.domains import (
    CubatureRule,
    DomainMeasure,
    ball,
    cubature,
    inner_product,
    monomial_moment,
    orthonormal_basis,
    project_components,
    simplex,
    sphere,
)
from possum.gegenbauer import (
    GegenbauerFamily,
    QuadratureRule,
    expand,
    gauss_quadrature,
    gegenbauer_at_one,
    recurrence_coeffs,
    roots,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CertificateInfeasible",
    "ConditioningFailure",
    "CubatureRule",
    "DimensionMismatch",
    "DomainError",
    "DomainMeasure",
    "GegenbauerFamily",
    "LambdaTooSmall",
    "MultiPoly",
    "QuadratureRule",
    "SingularEigenvalue",
    "UniPoly",
    "ball",
    "cubature",
    "even_odd_split",
    "expand",
    "gauss_quadrature",
    "gegenbauer_at_one",
    "inner_product",
    "monomial_moment",
    "orthonormal_basis",
    "project_components",
    "recurrence_coeffs",
    "roots",
    "simplex",
    "sphere",
    "sup_norm_estimate",
]
