"""Spectral enclosures for the bilayer graphene operator with complex matrix potentials."""

from .core import SpectralPoint, frobenius_norm, matrix_abs_polar, mu_branch
from .discrete import (DiscreteOperator, EigReport, assemble_dense, bs_norm, bs_residual,
                       complex_spectrum, im_resolvent_norm, symbol_at)
from .enclosure import (EnclosureRegion, TheoremConstants, Window, m0_radius_bound, region_scan,
                        thm11_value, thm12_value, thm31_value)
from .errors import (BilayerError, BranchPointError, ConvergenceError, DomainError,
                     InsufficientDataError, NearSpectrumError, NoOutliersError, SizeError, TailError)
from .harness import TrialConfig, calibrate, corollary32_suite, radius_fit, run_trial
from .kernels import biharm_kernel, kernel_bound_probe, rho_kernel
from .potentials import (GridSpec, PotentialField, build_potential, local_sup_integral,
                         log_conv_sup, lp_integral, trace_abs_integral)
from .specfun import g_derivs, hankel1, macdonald_k0

__version__ = "0.1.0"

__all__ = [
    "SpectralPoint", "frobenius_norm", "matrix_abs_polar", "mu_branch",
    "DiscreteOperator", "EigReport", "assemble_dense", "bs_norm", "bs_residual",
    "complex_spectrum", "im_resolvent_norm", "symbol_at",
    "EnclosureRegion", "TheoremConstants", "Window", "m0_radius_bound", "region_scan",
    "thm11_value", "thm12_value", "thm31_value",
    "BilayerError", "BranchPointError", "ConvergenceError", "DomainError",
    "InsufficientDataError", "NearSpectrumError", "NoOutliersError", "SizeError", "TailError",
    "TrialConfig", "calibrate", "corollary32_suite", "radius_fit", "run_trial",
    "biharm_kernel", "kernel_bound_probe", "rho_kernel",
    "GridSpec", "PotentialField", "build_potential", "local_sup_integral", "log_conv_sup",
    "lp_integral", "trace_abs_integral",
    "g_derivs", "hankel1", "macdonald_k0",
]
