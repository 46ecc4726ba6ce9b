"""Random forests over the tree variants.

Each member tree sees a random feature subset (drawn first) and a bootstrap
resample of the rows (drawn second), both from a per-tree generator seeded
from a single ``SeedSequence``.  The member is fit in its subspace and then
re-expressed over the full feature space, leaving the unused features
unbounded in every region, so member trees predict directly from full-width
inputs.  Because every member owns its own seed, fitting the members
serially or across threads produces identical forests; the ensemble
prediction is the plain mean over members.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import prob
from .partition import Partition, Region
from .trees import (
    SplitRecord,
    StandardTree,
    TreeConfig,
    UncertainTree,
    _validate_training,
    fit_standard_tree,
    fit_uncertain_tree,
)

VARIANTS = ("standard", "uncertain")


@dataclass(frozen=True)
class ForestConfig:
    """Ensemble parameters.

    ``mtry`` is the number of features each tree may split on; the default
    (None) resolves to 3, or ceil(p / 3) when fewer than 9 features are
    available.  ``seed`` feeds one SeedSequence from which every member
    derives an independent generator.
    """

    tau: int = 100
    mtry: int | None = None
    bootstrap: bool = True
    seed: int = 0
    variant: str = "standard"
    tree_config: TreeConfig = field(default_factory=TreeConfig)

    def __post_init__(self):
        if self.tau < 1:
            raise ValueError(f"tau must be >= 1, got {self.tau}")
        if self.mtry is not None and self.mtry < 1:
            raise ValueError(f"mtry must be >= 1, got {self.mtry}")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}, expected one of {VARIANTS}")


def resolve_mtry(config: ForestConfig, p: int) -> int:
    if config.mtry is not None:
        if config.mtry > p:
            raise ValueError(f"mtry = {config.mtry} exceeds the {p} available features")
        return config.mtry
    return 3 if p >= 9 else math.ceil(p / 3)


@dataclass
class ForestMember:
    """One fitted tree plus the feature subset it was allowed to split on."""

    tree: UncertainTree | StandardTree
    features: np.ndarray
    seed: int


@dataclass
class Forest:
    members: tuple[ForestMember, ...]
    p: int
    config: ForestConfig

    @property
    def tau(self) -> int:
        return len(self.members)

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.p:
            raise ValueError(f"dimension mismatch: X has {X.shape[1]} features, forest expects {self.p}")
        total = np.zeros(X.shape[0])
        for member in self.members:
            total += member.tree.predict(X)
        return total / self.tau


def _embed_partition(partition: Partition, features: np.ndarray, p: int) -> Partition:
    """Map a subspace partition onto the full feature space; features the
    tree never saw stay unbounded in every region."""
    regions = []
    for region in partition:
        lower = np.full(p, -np.inf)
        upper = np.full(p, np.inf)
        lower[features] = region.lower
        upper[features] = region.upper
        regions.append(Region(lower, upper))
    return Partition(tuple(regions))


def _embed_tree(tree, features: np.ndarray, p: int, sigma: np.ndarray | None):
    part = _embed_partition(tree.partition, features, p)
    log = tuple(
        SplitRecord(rec.region, int(features[rec.feature]), rec.threshold, rec.risk)
        for rec in tree.split_log
    )
    if isinstance(tree, UncertainTree):
        return UncertainTree(part, tree.gamma, sigma, log, tree.n_train, tree.config)
    return StandardTree(part, tree.gamma, log, tree.n_train, tree.config)


def fit_forest(X, y, sigma=None, config: ForestConfig | None = None, n_jobs: int | None = None) -> Forest:
    """Fit a forest of ``config.tau`` trees.

    Per member, in order: derive its generator from the member seed, draw
    the sorted feature subset, draw bootstrap row indices (or keep all rows
    when bootstrap is off), fit the variant's tree on the subsample.  With
    the uncertain variant each tree is fit under the matching slice of
    ``sigma``.  ``n_jobs`` fans the fits out over threads; results are
    assembled in member order, so parallel and serial runs agree.
    """
    if config is None:
        config = ForestConfig()
    X, y = _validate_training(X, y)
    n, p = X.shape
    if config.variant == "uncertain":
        if sigma is None:
            raise ValueError("sigma is required for the uncertain variant")
        sigma = prob.validate_sigma(sigma, p)
    elif sigma is not None:
        raise ValueError("sigma only applies to the uncertain variant")
    m = resolve_mtry(config, p)
    seeds = np.random.SeedSequence(config.seed).generate_state(config.tau, dtype=np.uint64)

    def fit_member(t: int) -> ForestMember:
        rng = np.random.default_rng(seeds[t])
        features = np.sort(rng.choice(p, size=m, replace=False))
        rows = rng.integers(0, n, size=n) if config.bootstrap else np.arange(n)
        X_t = X[np.ix_(rows, features)]
        y_t = y[rows]
        if config.variant == "uncertain":
            sub = fit_uncertain_tree(X_t, y_t, sigma[features], config.tree_config)
        else:
            sub = fit_standard_tree(X_t, y_t, config.tree_config)
        return ForestMember(_embed_tree(sub, features, p, sigma), features, int(seeds[t]))

    if n_jobs is not None and n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            members = tuple(pool.map(fit_member, range(config.tau)))
    else:
        members = tuple(fit_member(t) for t in range(config.tau))
    return Forest(members, p, config)


def predict_forest(forest: Forest, X) -> np.ndarray:
    """Mean prediction over the forest's members."""
    return forest.predict(X)
