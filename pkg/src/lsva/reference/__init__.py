"""Exact and semi-exact oracle pricers, Monte Carlo and competitor expansions."""

from .cev import cev_exact_call, noncentral_chi2_sf
from .competitors import CompetitorDomainError, fjl_iv, hagan_woodward_iv, hklw_iv
from .fourier import FourierContour, QuadratureError, heston_call_fourier, three_halves_call_fourier, three_halves_cf
from .montecarlo import mc_price
from .sabr import sabr_conditional_call_rho0, sabr_exact_call_rho0
from .special import SeriesConvergenceError, SpecialFnConfig, kummer_m, ln_gamma, reg_upper_inc_gamma

__all__ = [
    "CompetitorDomainError", "FourierContour", "QuadratureError", "SeriesConvergenceError",
    "SpecialFnConfig", "cev_exact_call", "fjl_iv", "hagan_woodward_iv", "heston_call_fourier",
    "hklw_iv", "kummer_m", "ln_gamma", "mc_price", "noncentral_chi2_sf", "reg_upper_inc_gamma",
    "sabr_conditional_call_rho0", "sabr_exact_call_rho0", "three_halves_call_fourier",
    "three_halves_cf",
]
