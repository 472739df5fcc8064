"""Exact p-adic computations for SL2(Q_p) x SL2(Q_p): arithmetic, Lie algebra tools,
fractal statistics, restricted projections, contraction of random walks,
Sobolev norms on congruence quotients and S-adic heights."""
from .errors import DomainError, InequalityViolation, PrecisionError, SizeConditionError
from .padic import PAdicScalar, Qp, ZpGrid, arith, haar_integrate, padic_norm
from .sl2 import (GElem, RVec, SL2Elem, ad_diag, ad_u, bch_product, conjugation_containment, exp_r,
                  gauss_decompose, level_membership, log_r, qh_membership)
from .fractal import (NonConcProfile, PBallTree, PointSet, ball_count, bourgain_regularize, build_tree,
                      energy_sum, non_concentration_profile)
from .projection import (ProjectionReport, change_base_point, projection_theorem_scan, quad_sublevel_measure,
                         shear_select, xi)
from .margulis import (TransverseConfig, WalkMeasure, compute_m_alpha, contraction_integral,
                       energy_vs_margulis, margulis_recursion_check, measure_c2, walk_convolve)
from .sobolev import FiniteQuotient, QuotientFunction, avg_project, pr_project, sobolev_norm, verify_properties
from .heights import (HeightRecord, SAdicScalar, integer_kernel_basis, inverse_norm_check, nearest_kernel_point,
                      place_norms)

__version__ = "0.1.0"
