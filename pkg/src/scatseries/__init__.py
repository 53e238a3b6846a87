"""Numerical lab for scattering operators of semilinear dispersive equations."""
from .errors import *  # noqa: F401,F403
from .grid import ComplexField, GridKind, SpatialGrid, Trajectory, time_nodes
from .norms import NormReport, StrichartzExponents, d_norm, f_norms, h1_norm, hs_norm, l2_norm
from .propagator import PropagatorKind, PropagatorSpec, apply_J, apply_U
from .nonlinearity import NonlinearityKind, NonlinearitySpec, n_j_integrand, phi
from .evolve import IntegratorConfig, Scheme, solve_nonlinear, solve_tangent
from .scattering import (ScatteringResult, ScatterThresholds, linearized_scatter, measure_c_emp,
                         partition_intervals, scatter)

__version__ = "0.1.0"
