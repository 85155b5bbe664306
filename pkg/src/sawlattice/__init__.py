"""Self-avoiding walk counts on Z^d: exact enumeration, indicator-sum
recounts, Fourier kernels of the constraint domain, and small-n fits."""

from .errors import BracketingError, BudgetExceeded, DegenerateFit, InsufficientData
from .saw_enum import (
    EnumerationResult,
    LatticeWalk,
    enumerate_saws,
    is_self_avoiding,
    mean_sq_displacement,
    sample_uniform,
)
from .lattice_domain import (
    LITERAL,
    MIDPOINT,
    DomainSpec,
    PairConstraint,
    SigmaVector,
    StepVector,
    Thresholds,
    count_by_sigma_sum,
    count_by_x_sum,
    msd_numerator_by_sigma,
    psi_jk,
    sigma_from_x,
    sigma_indicator,
    x_from_sigma,
    x_indicator,
)
from .mc import EstimateWithError, McConfig
from .fourier import (
    KernelId,
    MollifierConfig,
    poisson_recount,
    psi_hat_analytic,
    psi_hat_quadrature,
    psi_n_hat,
    truncated_main_integral,
    volume_term,
)

__all__ = [
    "BracketingError",
    "BudgetExceeded",
    "DegenerateFit",
    "InsufficientData",
    "EnumerationResult",
    "LatticeWalk",
    "enumerate_saws",
    "is_self_avoiding",
    "mean_sq_displacement",
    "sample_uniform",
    "LITERAL",
    "MIDPOINT",
    "DomainSpec",
    "PairConstraint",
    "SigmaVector",
    "StepVector",
    "Thresholds",
    "count_by_sigma_sum",
    "count_by_x_sum",
    "msd_numerator_by_sigma",
    "psi_jk",
    "sigma_from_x",
    "sigma_indicator",
    "x_from_sigma",
    "x_indicator",
    "EstimateWithError",
    "McConfig",
    "KernelId",
    "MollifierConfig",
    "poisson_recount",
    "psi_hat_analytic",
    "psi_hat_quadrature",
    "psi_n_hat",
    "truncated_main_integral",
    "volume_term",
]

__version__ = "0.1.0"
