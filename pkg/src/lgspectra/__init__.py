"""Local Gaussian spectral analysis of multivariate time series.

The package estimates local Gaussian cross-spectra (and the derived co-,
quadrature-, amplitude- and phase-spectra) on pseudo-normalised series,
builds pointwise confidence bands from model replicates or a circular
block bootstrap, and ships the simulation models used to validate the
estimator.  A small CLI and an HTTP service expose the same pipeline for
interactive parameter sweeps.
"""

from .timeseries import (
    MultivariateSeries,
    PseudoNormalizedSeries,
    LagPairSet,
    load_csv,
    log_returns,
    pseudo_normalize,
    lag_pairs,
)
from .local_gaussian import (
    Point,
    Bandwidth,
    GaussianParam,
    FitResult,
    LocalCorrelationSet,
    DegenerateWeightsError,
    kernel_weight,
    penalty,
    penalty_gradient,
    penalty_hessian,
    fit_local_gaussian,
    local_cross_correlations,
    reflect,
)
from .spectra import (
    FrequencyGrid,
    SpectrumEstimate,
    tukey_hanning,
    lag_window,
    local_cross_spectrum,
    local_auto_spectrum,
    global_cross_spectrum,
    conjugate_fold_check,
)
from .inference import (
    BandEnsemble,
    ConfidenceBands,
    replicate_ensemble,
    replicate_ensembles,
    block_bootstrap,
    pointwise_bands,
    complex_summary_at_frequency,
)
from .simulate import (
    CosineParams,
    LocalTrigParams,
    gaussian_wn,
    bivariate_cosine,
    local_trigonometric,
)
from .pipeline import EstimationConfig, estimate_pair_spectra

__version__ = "0.1.0"

__all__ = [
    "MultivariateSeries",
    "PseudoNormalizedSeries",
    "LagPairSet",
    "load_csv",
    "log_returns",
    "pseudo_normalize",
    "lag_pairs",
    "Point",
    "Bandwidth",
    "GaussianParam",
    "FitResult",
    "LocalCorrelationSet",
    "DegenerateWeightsError",
    "kernel_weight",
    "penalty",
    "penalty_gradient",
    "penalty_hessian",
    "fit_local_gaussian",
    "local_cross_correlations",
    "reflect",
    "FrequencyGrid",
    "SpectrumEstimate",
    "tukey_hanning",
    "lag_window",
    "local_cross_spectrum",
    "local_auto_spectrum",
    "global_cross_spectrum",
    "conjugate_fold_check",
    "BandEnsemble",
    "ConfidenceBands",
    "replicate_ensemble",
    "replicate_ensembles",
    "block_bootstrap",
    "pointwise_bands",
    "complex_summary_at_frequency",
    "CosineParams",
    "LocalTrigParams",
    "gaussian_wn",
    "bivariate_cosine",
    "local_trigonometric",
    "EstimationConfig",
    "estimate_pair_spectra",
]
