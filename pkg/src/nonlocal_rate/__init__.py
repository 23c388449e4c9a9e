"""Nonlocal energies, their local limits, and convergence-rate verification."""

__version__ = "0.1.0"

from .fields import (FieldError, LineSlice, ScalarField, antiderivative,
                     builtin_field, bump_sum, coordinate_bump,
                     coordinate_field, grid_field, hat, load_grid_csv,
                     moving_average, radial_bump, random_bump_field, ridge,
                     save_grid_csv, sin_bump, slice_field, smooth_bump)
from .integrands import ConvexIntegrand, averaged_curvature, builtin_integrand
from .kernels import (EffectiveKernel, Kernel, builtin_kernel, effective_kernel,
                      effective_kernel_lower_bound, positivity_grid,
                      positivity_radius, rescale, shrink_factor,
                      triangle_kernel, triangle_kernel_scaled, validate_kernel)
from .energy1d import (ConvergenceTable, DualTestFunction, Energy1DResult,
                       bundled_test_functions, convergence_table,
                       curvature_upper_bound, dual_bound, limit_energy,
                       rate_energy, triangle_kernel_bound)
from .energynd import (EnergyNDResult, boundedness_probe,
                       gradient_quotient_bound, hessian_sq_norm,
                       limit_functional, local_energy, nonlocal_energy,
                       rate_functional, rate_functional_sliced)
from .oracles import (OracleReport, bruteforce_quadrature, fourier_rate_energy,
                      mc_limit_functional, mc_nonlocal_energy,
                      mc_rate_functional)
from .quadrature import QuadratureError, QuadratureReport, QuadratureScheme

__all__ = [name for name in dir() if not name.startswith("_")]
