"""Regression trees and forests for inputs measured with Gaussian noise.

A sample belongs to every leaf region with the probability that its latent
true value falls there, so predictions are smooth mixtures of per-region
weights instead of hard lookups.  The package bundles the classical hard
baselines, conversion between the two rules, JSON model serialization and
a cross-validated RMSE benchmark harness.
"""

__version__ = "0.1.0"

from .bench import (
    CVReport,
    Dataset,
    NoiseSpec,
    SigmaPolicy,
    empirical_std,
    inject_noise,
    kfold_indices,
    load_csv,
    load_fixture,
    rmse,
    run_benchmark,
    sigma_from_policy,
)
from .forest import Forest, ForestConfig, fit_forest, predict_forest
from .model_io import load_model, save_model
from .partition import (
    Partition,
    Region,
    build_membership,
    check_theorem,
    invertibility_bound,
)
from .prob import interval_prob, region_membership, std_normal_cdf, std_normal_quantile
from .trees import (
    StandardTree,
    TreeConfig,
    UncertainTree,
    candidate_splits,
    evaluate_split,
    fit_standard_tree,
    fit_uncertain_tree,
    predict_standard,
    predict_uncertain,
    uncertainize,
)

__all__ = [
    "CVReport",
    "Dataset",
    "Forest",
    "ForestConfig",
    "NoiseSpec",
    "Partition",
    "Region",
    "SigmaPolicy",
    "StandardTree",
    "TreeConfig",
    "UncertainTree",
    "build_membership",
    "candidate_splits",
    "check_theorem",
    "empirical_std",
    "evaluate_split",
    "fit_forest",
    "fit_standard_tree",
    "fit_uncertain_tree",
    "inject_noise",
    "interval_prob",
    "invertibility_bound",
    "kfold_indices",
    "load_csv",
    "load_fixture",
    "load_model",
    "predict_forest",
    "predict_standard",
    "predict_uncertain",
    "region_membership",
    "rmse",
    "run_benchmark",
    "save_model",
    "sigma_from_policy",
    "std_normal_cdf",
    "std_normal_quantile",
    "uncertainize",
]
