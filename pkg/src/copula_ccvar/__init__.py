"""Copula-based conditional value at risk for Archimedean copulas."""

from ._accel import backend
from .ccvar import QuadConfig, RiskValue, ccvar_comonotone, ccvar_mc_oracle, ccvar_quadrature, mcvar_independence
from .fit import CopulaFit, fit_copula_mle, gof_tail_distance, pseudo_observations
from .generators import (
    CopulaSpec,
    Family,
    copula_cdf,
    copula_density,
    f_aux,
    kendall_tau,
    phi,
    phi_inv,
    phi_prime,
    tail_dependence,
    tau_inverse,
)
from .kendall import h_factor, kendall_cdf, kendall_pdf
from .margins import MarginModel, fit_ar_garch, pit_transform, quantile_forecast, simulate_garch
from .portfolio import DistributionMargin, EmpiricalMargin, PortfolioSpec, UniformMargin
from .sampling import UniformPanel, portfolio_var_cvar, sample_copula, sample_frailty

__version__ = "0.1.0"
