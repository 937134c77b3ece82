"""Conditional generative metamodeling via gridded quantile regression.

Fit a conditional quantile process from (covariate, response) data, draw
conditional observations by inverse transform sampling, and build
covariate-dependent bootstrap percentile confidence intervals for scalar
estimands (mean, quantiles, survival probabilities).
"""

from .basis import IdentityBasis, InventoryBasis, MatrixBasis, expand_inventory, with_intercept
from .bootstrap import (
    ConfidenceInterval,
    Estimand,
    FitParams,
    bootstrap_ci,
    empirical_quantile,
    estimate,
    parse_estimand,
    resample,
)
from .dataset import Dataset, load_dataset_csv, save_dataset_csv
from .evaluate import (
    CoverageReport,
    EvalReport,
    coverage_width,
    gradient_stability_study,
    ks_statistic,
    wasserstein_1d,
)
from .gradient import GradientCoefficients, estimate_lambda, gradient_table, gradient_vector
from .grid import GridDesign, UniformGrid, build_grid, uniform_grid
from .interp import eval_cubic, eval_linear, eval_process, hermite_basis
from .metamodel import (
    FittedProcess,
    fit_hermite,
    fit_linear,
    generate,
    load_model,
    save_model,
)
from .quantreg import QuantileCoefficients, fit_path, fit_quantile, pinball_loss
from .rng import subseed, substream
from .simulate import (
    InventoryConfig,
    SyntheticFamily,
    family,
    gen_synthetic,
    inventory_dataset,
    inventory_simulate,
    reference_inventory,
    reference_synthetic,
    true_quantile,
)

__version__ = "0.1.0"

__all__ = [
    "ConfidenceInterval",
    "CoverageReport",
    "Dataset",
    "Estimand",
    "EvalReport",
    "FitParams",
    "FittedProcess",
    "GradientCoefficients",
    "GridDesign",
    "IdentityBasis",
    "InventoryBasis",
    "InventoryConfig",
    "MatrixBasis",
    "QuantileCoefficients",
    "SyntheticFamily",
    "UniformGrid",
    "bootstrap_ci",
    "build_grid",
    "coverage_width",
    "empirical_quantile",
    "estimate",
    "estimate_lambda",
    "eval_cubic",
    "eval_linear",
    "eval_process",
    "expand_inventory",
    "family",
    "fit_hermite",
    "fit_linear",
    "fit_path",
    "fit_quantile",
    "gen_synthetic",
    "generate",
    "gradient_stability_study",
    "gradient_table",
    "gradient_vector",
    "hermite_basis",
    "inventory_dataset",
    "inventory_simulate",
    "ks_statistic",
    "load_dataset_csv",
    "load_model",
    "parse_estimand",
    "pinball_loss",
    "reference_inventory",
    "reference_synthetic",
    "resample",
    "save_dataset_csv",
    "save_model",
    "subseed",
    "substream",
    "true_quantile",
    "uniform_grid",
    "wasserstein_1d",
    "with_intercept",
]
