"""Orlicz-space N-function calculus and a direct-method solver for periodic
Euler-Lagrange problems with non-power growth."""
from .errors import *  # noqa: F401,F403
from .nfunction import (NFunction, builtin, parse_nfunction, conjugate, inverse, mo_indices,
                        check_delta2, check_ordering, power_bounds, IndexEstimate,
                        Delta2Report, OrderingReport, Relation)
from .probes import ProbeConfig, IndexProbeConfig, HypothesisProbeConfig
from .construct import (find_violation_sequence, build_psi_star, integrate_psi_star,
                        phi_star_from_indices, PiecewiseDerivative)
from .orlicz import (GridFunction, NormReport, modular, log_modular, luxemburg_norm,
                     orlicz_norm, decompose, derivative, holder_check, sobolev_check,
                     modular_coercivity_sweep)
from .lagrangians import Lagrangian, Potential, make_lagrangian, power_potential
from .hypotheses import (GrowthEnvelope, HypothesisReport, CoercivityReport, HypothesisSetup,
                         check_structure, check_lower_bound, check_A5, check_A6,
                         j_functional, h_functional, lower_bound_audit, gate)
from .solver import (ProblemSpec, SolverOptions, MeanSearch, SolveResult, action,
                     action_gradient, el_residual, boundary_check, minimize)
from .kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"
