"""Hierarchical difference-in-differences with spike-and-slab selection.

A library and CLI for estimating a group-level causal treatment effect
from pre/post individual outcomes: four spike-and-slab Gibbs samplers
(separate, shared, sufficient, efficient) plus fixed-mask fits, a
closed-form omitted-variable-bias oracle, a synthetic-data generator, and
a replication harness for bias/MSE/coverage studies.
"""

from .datagen import CovariateRole, GenerativeConfig, generate, single_covariate_config
from .errors import ConfigError, DataError, HdidError, InvalidParameterError, NumericalError
from .gibbs import SamplerOutput, run_sampler
from .model import (
    ChainState,
    HdidDataset,
    ModelSpec,
    PosteriorSummary,
    PriorConfig,
    initial_state,
    validate,
)
from .rng import RngStream, log_normal_density, sample_gamma, sample_mvn, sample_normal

__all__ = [
    "ChainState",
    "ConfigError",
    "CovariateRole",
    "DataError",
    "GenerativeConfig",
    "HdidDataset",
    "HdidError",
    "InvalidParameterError",
    "ModelSpec",
    "NumericalError",
    "PosteriorSummary",
    "PriorConfig",
    "RngStream",
    "SamplerOutput",
    "generate",
    "initial_state",
    "log_normal_density",
    "run_sampler",
    "sample_gamma",
    "sample_mvn",
    "sample_normal",
    "single_covariate_config",
    "validate",
]

__version__ = "0.1.0"
