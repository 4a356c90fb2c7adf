"""Two-component model of random variation.

Modules
-------
specfun
    Complex gamma and upper incomplete gamma.
rmm
    The RMM density family: pdf, normalizer, moments, presets, sampling.
bivariate
    Product model ``W = U * V`` with its marginal, sampler and moments.
fit
    Moment-matching fit of the product model and the mode/mean fit.
approx
    Generalized approximation family and its classical special cases.
compound
    Geometric random sums of exponentials.
cli
    The ``tworv`` command.
"""

from tworv.bivariate import BivariateParams, marginal_pdf_w, model_mean, model_var, sample_w
from tworv.errors import (
    BranchError,
    ConsistencyError,
    DomainError,
    FitError,
    InfeasibleCandidateError,
    NumericalError,
    ParameterError,
    TworvError,
)
from tworv.fit import FitConfig, FitResult, MomentTarget, fit_mode_mean, fit_two_component
from tworv.rmm import RmmParams, normalizer, preset, raw_moment, rmm_pdf

__version__ = "0.1.0"

__all__ = [
    "BivariateParams", "BranchError", "ConsistencyError", "DomainError", "FitConfig",
    "FitError", "FitResult", "InfeasibleCandidateError", "MomentTarget", "NumericalError",
    "ParameterError", "RmmParams", "TworvError", "fit_mode_mean", "fit_two_component",
    "marginal_pdf_w", "model_mean", "model_var", "normalizer", "preset", "raw_moment",
    "rmm_pdf", "sample_w",
]
