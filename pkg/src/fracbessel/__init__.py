"""Fractional Bessel-type diffusions with Hurst index below one half.

The process is built as the vanishing-regularization limit of Euler
solutions driven by exactly sampled fractional Brownian motion, then split
into a drift integral and a nondecreasing reflection function.
"""

from .asymptotics import (
    EnsembleConfig,
    a_to_zero_limit,
    ensemble_run,
    horizon_ladder,
    resolution_gap,
    path_statistics,
    sweep_in_a,
    sweep_in_epsilon,
)
from .config import RunConfig, parse_config
from .errors import (
    ConfigError,
    DomainError,
    EmbeddingError,
    FactorizationError,
    InputError,
    NumericError,
    SizeError,
)
from .fbm import (
    FbmEnsemble,
    FbmSample,
    TimeGrid,
    empirical_fbm_report,
    fbm_covariance,
    sample_ensemble,
    sample_fbm_circulant,
    sample_fbm_dense,
)
from .limit import (
    EpsilonSchedule,
    ReflectionDecomposition,
    drift_integral,
    epsilon_limit,
    reflection_function,
    skorokhod_map,
)
from .runner import reproduce_figures, run
from .sde import (
    SdeParams,
    deterministic_envelope,
    euler_classical_bessel,
    euler_regularized,
)

__version__ = "0.1.0"
