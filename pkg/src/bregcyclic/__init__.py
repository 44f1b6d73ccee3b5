"""Bregman divergences, cyclic self-mappings over convex sets, and
numerical checks of their fixed-point and averaging behaviour in R^d."""

__version__ = "0.1.0"

from .certificate import FAIL, PASS, Certificate
from .convex_core import (POS_INF, ConvexFunction, Domain, ModulusEstimate, as_point, bregman,
                          bregman_difference_identity, bregman_sum_identity, convexity_probe,
                          directional_derivative_check, gradient_monotonicity_probe, inner_product,
                          sequential_consistency_probe, strict_positivity_probe,
                          total_convexity_modulus, uniform_convexity_modulus)
from .cyclic import (CyclicSystem, HybridParams, composite_hybrid_certificate, composite_map,
                     cyclic_contraction_certificate, hybrid_certificate, khat,
                     meir_keeler_evidence, set_bregman_distance, set_distance, validate_cyclicity)
from .errors import AssumptionError, DimensionError, DomainError, OrbitError
from .functions import FunctionSpec, build, oracle_bregman
from .iteration import (ConvergenceReport, OrbitTrace, CesaroTrace, averaging_identity_check,
                        bregman_trajectory, cesaro, find_fixed_point, find_proximity_cycle,
                        fixed_point_set_convexity_probe, geometric_bound_check, orbit,
                        quasi_nonexpansive_certificate)
from .sets import Ball, Box, Interval, Polytope, make_set
