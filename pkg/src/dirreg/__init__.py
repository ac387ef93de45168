"""Dirichlet regression in the mean/precision parametrization.

The mean simplex is a softmax of linear predictors with one reference
component pinned to zero; the precision is ``exp(z' gamma)``. Fits by maximum
likelihood (L-BFGS) or by NUTS with normal priors on all coefficients.
"""
__version__ = "0.1.0"

from ._backend import BACKEND
from .composition import (
    CompositionMatrix,
    DirichletParams,
    dirichlet_log_density,
    dirichlet_mean,
    dirichlet_sample,
    digamma,
    lgamma,
    log_multinomial_beta,
    transform_zeros,
    validate_and_normalize,
)
from .errors import DirRegError
from .likelihood import EvalContext, evaluate, grad_log_posterior, log_likelihood, log_posterior
from .ml import MLFit, fit_ml, wald_intervals
from .model import (
    Coefficients,
    DesignMatrix,
    FormulaSpec,
    ModelSpec,
    build_design_matrix,
    free_names,
    pack_free,
    parse_formula,
    softmax,
    unpack_free,
)
from .posterior import (
    credible_interval,
    expected_values_per_draw,
    renormalize_adjustment,
    summarize_fit,
)

__all__ = [
    "BACKEND", "CompositionMatrix", "DirichletParams", "dirichlet_log_density",
    "dirichlet_mean", "dirichlet_sample", "digamma", "lgamma", "log_multinomial_beta",
    "transform_zeros", "validate_and_normalize", "DirRegError", "EvalContext", "evaluate",
    "grad_log_posterior", "log_likelihood", "log_posterior", "MLFit", "fit_ml",
    "wald_intervals", "Coefficients", "DesignMatrix", "FormulaSpec", "ModelSpec",
    "build_design_matrix", "free_names", "pack_free", "parse_formula", "softmax",
    "unpack_free", "credible_interval", "expected_values_per_draw",
    "renormalize_adjustment", "summarize_fit",
]
