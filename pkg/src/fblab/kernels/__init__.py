"""Heat kernel, weighted quadrature, caloric polynomials, exact solutions and
the half-line Ornstein-Uhlenbeck eigensolver."""
from .caloric import Polynomial, caloric_basis, caloric_fit, heat_polynomial
from .exact import ExactSolution, caloric, exact_sample, halfspace, time_flat, zero
from .identities import (BumpField, InequalityCheck, caloric_pointwise_bound, quadratic_weiss_part,
                         random_bump_field, weighted_poincare, weiss_quadratic_invariance)
from .quadrature import (Integral, QuadratureRule, ball_gauss_nodes, composite_nodes, gauss_slab, heat_kernel,
                         slab_integral, spatial_gauss_integral)
from .spectrum import ou_halfline_spectrum

__all__ = [
    "BumpField", "ExactSolution", "InequalityCheck", "Integral", "Polynomial", "QuadratureRule",
    "ball_gauss_nodes", "caloric", "caloric_basis", "caloric_fit", "caloric_pointwise_bound", "composite_nodes",
    "exact_sample", "gauss_slab", "halfspace", "heat_kernel", "heat_polynomial", "ou_halfline_spectrum",
    "quadratic_weiss_part", "random_bump_field", "slab_integral", "spatial_gauss_integral", "time_flat",
    "weighted_poincare", "weiss_quadratic_invariance", "zero",
]
