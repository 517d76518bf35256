"""Nearest-neighbor mixture process models for geostatistical data."""

from ._core import (
    Fit,
    chi_coefficient,
    conditional_cdf,
    copula_cdf,
    copula_density,
    crps,
    empirical_tail,
    inverse_conditional,
    sample_copula,
    simulate_field,
    simulate_nnmp,
    student_t_cdf,
    tail_coefficients,
)

__all__ = [
    "Fit",
    "chi_coefficient",
    "conditional_cdf",
    "copula_cdf",
    "copula_density",
    "crps",
    "empirical_tail",
    "inverse_conditional",
    "sample_copula",
    "simulate_field",
    "simulate_nnmp",
    "student_t_cdf",
    "tail_coefficients",
]
