"""Spectral Galerkin exponential integrator for random periodic solutions
of semilinear stochastic evolution equations with additive noise."""

from .errors import ConfigurationError, IntegrationError
from .integrator import (
    PathSlice,
    SchemeConfig,
    contraction_factor,
    exact_affine_path,
    simulate,
    step,
)
from .model import (
    DriftSpec,
    InitialSpec,
    ModelSpec,
    NoiseSpec,
    ValidationReport,
    drift_eval,
    make_initial,
    noise_amplitude,
    validate,
)
from .noise import AggregatedNoiseGrid, NoiseGrid, sample_seed, shift_theta
from .spectral import (
    GalerkinState,
    SpectralOperator,
    fractional_apply,
    gamma_eval,
    hr_norm,
    project,
    semigroup_apply,
    smoothing_constants,
)

__version__ = "0.1.0"

__all__ = [
    "AggregatedNoiseGrid",
    "ConfigurationError",
    "DriftSpec",
    "GalerkinState",
    "InitialSpec",
    "IntegrationError",
    "ModelSpec",
    "NoiseGrid",
    "NoiseSpec",
    "PathSlice",
    "SchemeConfig",
    "SpectralOperator",
    "ValidationReport",
    "contraction_factor",
    "drift_eval",
    "exact_affine_path",
    "fractional_apply",
    "gamma_eval",
    "hr_norm",
    "make_initial",
    "noise_amplitude",
    "project",
    "sample_seed",
    "semigroup_apply",
    "shift_theta",
    "simulate",
    "smoothing_constants",
    "step",
    "validate",
    "__version__",
]
