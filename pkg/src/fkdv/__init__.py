"""Small periodic traveling waves of fractional KdV equations

    u_t + (-Lambda^alpha u + u^(p+1))_x = 0

and their spectral stability against localized perturbations.
"""
from .bloch import assemble_bloch, block_oracle, slice_spectrum, stability_sweep, symmetry_check
from .critical import (
    alpha_window,
    critical_power,
    critical_power_max,
    cubic_from_eigenvalues,
    delta_constant_state,
    discriminant_scaling_check,
    gamma_coefficient,
)
from .errors import DomainError, FKdVError
from .waves import ModelParams, family_derivatives, solve_wave

__version__ = "0.1.0"
