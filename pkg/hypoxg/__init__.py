"""
HypoXG toolkit
Closed-form distribution of sums of independent XGamma lifetimes, with
validation oracles and maximum-likelihood fitting.
"""

from .errors import HypoXGError, ConfigError, DataError, NumericError, SeparationError, BudgetError
from .distributions import ErlangParams, XGammaParams
from .convolution import ParamVector, ResidueTriple, MixtureRepresentation, compute_residues, build_mixture
from .model import HypoXG
from .estimation import ObservationSet, FitResult, OptimizerOptions, fit_mle, fit_hypoexp2, compare_models

__version__ = '1.0.0'

__all__ = [
    'HypoXGError', 'ConfigError', 'DataError', 'NumericError', 'SeparationError', 'BudgetError',
    'ErlangParams', 'XGammaParams', 'ParamVector', 'ResidueTriple', 'MixtureRepresentation',
    'compute_residues', 'build_mixture', 'HypoXG', 'ObservationSet', 'FitResult',
    'OptimizerOptions', 'fit_mle', 'fit_hypoexp2', 'compare_models',
]
