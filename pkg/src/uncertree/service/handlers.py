"""Request handlers shared by the HTTP app and the command line.

Handlers take validated request models and return response models; domain
failures surface as ValueError, which the app maps to HTTP 400 and the CLI
maps to a nonzero exit.
"""

from __future__ import annotations

import math

import numpy as np

from .. import bench, model_io
from ..bench import Dataset, NoiseSpec, SigmaPolicy
from ..forest import Forest, ForestConfig, fit_forest
from ..linalg import numerical_rank
from ..partition import build_membership, invertibility_bound
from ..trees import (
    StandardTree,
    TreeConfig,
    UncertainTree,
    fit_standard_tree,
    fit_uncertain_tree,
    uncertainize,
)
from .schemas import (
    BenchRequest,
    BenchResponse,
    DataPayload,
    FitRequest,
    FitResponse,
    InvertibilityInfo,
    InvertibilityRequest,
    InvertibilityResponse,
    PredictRequest,
    PredictResponse,
    SigmaPolicySpec,
)


def _matrix_from_payload(payload: DataPayload) -> tuple[np.ndarray, tuple[str, ...]]:
    try:
        X = np.asarray(payload.X, dtype=float)
    except ValueError:
        raise ValueError("data.X must be a nonempty rectangular matrix") from None
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise ValueError("data.X must be a nonempty rectangular matrix")
    names = payload.feature_names
    if names is None:
        names = [f"x{j}" for j in range(X.shape[1])]
    if len(names) != X.shape[1]:
        raise ValueError(f"{len(names)} feature names for {X.shape[1]} columns")
    return X, tuple(names)


def _dataset_from_payload(payload: DataPayload) -> Dataset:
    X, names = _matrix_from_payload(payload)
    if payload.y is None:
        raise ValueError("data.y is required for this operation")
    return Dataset(payload.name, X, np.asarray(payload.y, dtype=float), names)


def _sigma_policy(spec: SigmaPolicySpec) -> SigmaPolicy:
    values = None if spec.values is None else tuple(spec.values)
    return SigmaPolicy(spec.kind, values)


def _tree_config(req) -> TreeConfig:
    return TreeConfig(
        min_leaf_fraction=req.min_leaf_fraction,
        max_leaves=getattr(req, "max_leaves", None),
        max_depth=getattr(req, "max_depth", None),
    )


def _invertibility_info(model: UncertainTree | StandardTree) -> InvertibilityInfo:
    bounds = invertibility_bound(model.partition)
    sigma = model.sigma if isinstance(model, UncertainTree) else np.zeros(model.p)
    feature_ok = [bool(s < b) for s, b in zip(sigma, bounds)]
    return InvertibilityInfo(
        bounds=[None if math.isinf(b) else float(b) for b in bounds],
        sigma=[float(s) for s in sigma],
        feature_ok=feature_ok,
        all_ok=all(feature_ok),
    )


def handle_fit(req: FitRequest) -> FitResponse:
    ds = _dataset_from_payload(req.data)
    config = _tree_config(req)
    needs_sigma = req.method in ("utree", "hybrid", "urf")
    sigma = bench.sigma_from_policy(_sigma_policy(req.sigma), ds.X) if needs_sigma else None

    if req.method == "tree":
        model = fit_standard_tree(ds.X, ds.y, config)
    elif req.method == "utree":
        model = fit_uncertain_tree(ds.X, ds.y, sigma, config)
    elif req.method == "hybrid":
        model = uncertainize(fit_standard_tree(ds.X, ds.y, config), ds.X, ds.y, sigma)
    else:
        forest_config = ForestConfig(
            tau=req.tau if req.tau is not None else bench.DEFAULT_TAU,
            mtry=req.mtry,
            bootstrap=req.bootstrap,
            seed=req.seed,
            variant="uncertain" if req.method == "urf" else "standard",
            tree_config=config,
        )
        model = fit_forest(ds.X, ds.y, sigma=sigma, config=forest_config, n_jobs=req.threads)

    doc = model_io.model_to_dict(model)
    training_sse = float(np.sum((model.predict(ds.X) - ds.y) ** 2))
    is_tree = isinstance(model, (UncertainTree, StandardTree))
    return FitResponse(
        model=doc,
        kind=doc["kind"],
        n_leaves=model.n_leaves if is_tree else None,
        tau=None if is_tree else model.tau,
        training_sse=training_sse,
        invertibility=_invertibility_info(model) if is_tree else None,
    )


def handle_predict(req: PredictRequest) -> PredictResponse:
    model = model_io.model_from_dict(req.model)
    X, _ = _matrix_from_payload(req.data)
    if X.shape[1] != model.p:
        raise ValueError(f"dimension mismatch: data has {X.shape[1]} features, model expects {model.p}")
    return PredictResponse(predictions=[float(v) for v in model.predict(X)])


def handle_bench(req: BenchRequest) -> BenchResponse:
    if (req.data is None) == (req.fixture is None):
        raise ValueError("provide exactly one of data or fixture")
    ds = bench.load_fixture(req.fixture) if req.fixture is not None else _dataset_from_payload(req.data)
    noise = None
    if req.noise is not None:
        noise = NoiseSpec(seed=req.noise.seed, lo_frac=req.noise.lo_frac, hi_frac=req.noise.hi_frac)
    report = bench.run_benchmark(
        ds,
        req.methods,
        sigma_policy=_sigma_policy(req.sigma),
        noise=noise,
        cv_seed=req.seed,
        k=req.folds,
        tree_config=TreeConfig(min_leaf_fraction=req.min_leaf_fraction),
        n_jobs=req.threads,
    )
    return BenchResponse(report=report.to_dict(), table=report.to_table())


def handle_invertibility(req: InvertibilityRequest) -> InvertibilityResponse:
    model = model_io.model_from_dict(req.model)
    if isinstance(model, Forest):
        raise ValueError("invertibility report applies to tree models, not forests")
    info = _invertibility_info(model)
    rank = None
    rank_equals = None
    if req.data is not None:
        X, _ = _matrix_from_payload(req.data)
        if X.shape[1] != model.p:
            raise ValueError(
                f"dimension mismatch: data has {X.shape[1]} features, model expects {model.p}"
            )
        sigma = model.sigma if isinstance(model, UncertainTree) else np.zeros(model.p)
        P = build_membership(X, sigma, model.partition)
        rank = numerical_rank(P)
        rank_equals = bool(rank == len(model.partition))
    return InvertibilityResponse(
        bounds=info.bounds,
        sigma=info.sigma,
        feature_ok=info.feature_ok,
        all_ok=info.all_ok,
        n_regions=len(model.partition),
        rank=rank,
        rank_equals_regions=rank_equals,
    )
