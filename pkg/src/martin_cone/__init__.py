"""Homogeneity exponent of the Martin kernel of the fractional Laplacian in right circular cones."""

from .asymptotics import (PowerFit, SlitReport, SweepRecord, fit_power_law, predicted_beta,
                          slit_check, slit_reference)
from .constants import (ConstantSet, StableParams, ball_exit_constant, beta_fn, eval_constants,
                        frac_lap_normalizer, gamma, martin_constant, omega_rate, slit_constant,
                        sphere_area)
from .errors import (BracketFailure, DegenerateFit, DomainError, InvalidParameters, MartinConeError,
                     NoPositiveEigenvector, NoSignSeparation, NotSmoothHere, OriginSingular,
                     SingularArgument, ToleranceNotMet, UnsupportedAperture)
from .euclidean import (ConeGeometry, Estimate, FracLapSpec, ScalarField, constant_field,
                        cylinder_field, cylinder_profile, exit_field, exit_profile, frac_lap_at,
                        homogeneous_extension, invert, kelvin, profile_phi, riesz, riesz_field)
from .kernels import (BoundReport, KernelPoint, QuadratureSpec, kernel_bound_check, reduced_kernel,
                      u_diff, u_kernel)
from .solver import (ExponentResult, SolverOptions, barrier_bounds, principal_eigenvalue,
                     solve_beta)
from .spherical import (AxisymmetricFunction, CapGrid, OperatorMatrix, apply_radial, apply_sph_lap,
                        assemble_operator, boundary_weight, build_cap_grid, cap_profile,
                        constant_function)

__version__ = "0.1.0"
