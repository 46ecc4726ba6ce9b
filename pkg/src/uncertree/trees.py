"""Fitting and prediction for the three tree variants.

* standard tree: classical greedy CART with quadratic loss, hard leaf
  assignment, leaf value = mean of member targets;
* uncertain tree: soft Gaussian leaf membership throughout, split chosen to
  minimize the global least-squares risk over all samples, leaf weights from
  the pseudo-inverse solve;
* hybrid: a CART-built partition whose membership matrix and weights are
  recomputed once with the soft rule (``uncertainize``).

Both builders share the same candidate thresholds (midpoints of consecutive
distinct member values), the same admissibility rule (every child keeps at
least ``ceil(min_leaf_fraction * n)`` hard members), the same depth-first
frontier, and the same deterministic tie-breaking (smallest feature index,
then smallest threshold), so the variants differ only in the risk they
optimize.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import linalg, prob
from .partition import (
    Partition,
    Region,
    build_membership,
    region_column,
    split_region,
    update_membership_for_split,
)

_EPS = float(np.finfo(np.float64).eps)

# Improvements below this multiple of n*Var(y) are noise from the
# pseudo-inverse solve, not signal; the region becomes a leaf.
RISK_IMPROVEMENT_FLOOR = 1e-12

# Candidates whose prefix-sum SSE lands within this fraction of the scale
# of the minimum are re-evaluated with order-independent arithmetic before
# the argmin is decided; prefix rounding is orders of magnitude smaller.
_TIE_TOL = 1e-10


@dataclass(frozen=True)
class TreeConfig:
    """Stopping rules shared by all tree variants.

    ``min_leaf_fraction`` is the classical "every leaf keeps at least this
    share of the training data" rule (0.1 reproduces the benchmark
    protocol).  ``max_leaves``/``max_depth`` are optional extra caps.
    """

    min_leaf_fraction: float = 0.1
    max_leaves: int | None = None
    max_depth: int | None = None

    def __post_init__(self):
        if not 0.0 < self.min_leaf_fraction <= 0.5:
            raise ValueError(f"min_leaf_fraction must be in (0, 0.5], got {self.min_leaf_fraction}")
        if self.max_leaves is not None and self.max_leaves < 1:
            raise ValueError("max_leaves must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")


@dataclass(frozen=True)
class SplitRecord:
    """One executed split: which column was cut, where, and the training
    risk (sum of squared residuals over all samples) achieved after it."""

    region: int
    feature: int
    threshold: float
    risk: float


@dataclass
class UncertainTree:
    """Fitted soft-membership tree: regions, weights, noise scales, history."""

    partition: Partition
    gamma: np.ndarray
    sigma: np.ndarray
    split_log: tuple[SplitRecord, ...]
    n_train: int
    config: TreeConfig

    @property
    def p(self) -> int:
        return self.partition.p

    @property
    def n_leaves(self) -> int:
        return len(self.partition)

    def membership(self, X) -> np.ndarray:
        return build_membership(X, self.sigma, self.partition)

    def predict(self, X) -> np.ndarray:
        """Soft prediction sum_k gamma_k * P(region k | x) per row."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self.membership(X) @ self.gamma

    def training_risk(self) -> float | None:
        return self.split_log[-1].risk if self.split_log else None


@dataclass
class StandardTree:
    """Fitted CART tree stored as a partition plus per-leaf means."""

    partition: Partition
    gamma: np.ndarray
    split_log: tuple[SplitRecord, ...]
    n_train: int
    config: TreeConfig

    @property
    def p(self) -> int:
        return self.partition.p

    @property
    def n_leaves(self) -> int:
        return len(self.partition)

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self.gamma[self.partition.assign(X)]


def predict_uncertain(tree: UncertainTree, x) -> float:
    """Soft prediction for a single feature vector."""
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != tree.p:
        raise ValueError(f"dimension mismatch: x has {x.shape[0]} features, tree expects {tree.p}")
    return float(tree.predict(x[None, :])[0])


def predict_standard(tree: StandardTree, x) -> float:
    """Hard piecewise-constant prediction for a single feature vector."""
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != tree.p:
        raise ValueError(f"dimension mismatch: x has {x.shape[0]} features, tree expects {tree.p}")
    return float(tree.predict(x[None, :])[0])


def candidate_splits(X, region: Region, j: int) -> np.ndarray:
    """Candidate thresholds for feature ``j`` inside ``region``.

    Midpoints of consecutive distinct values of the feature among the
    samples whose point estimate lies in the region.  Midpoints that
    collapse onto a neighbour value (adjacent floats) are dropped, so every
    returned threshold separates its two generating values strictly.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    mask = np.all((X > region.lower) & (X <= region.upper), axis=1)
    values = np.unique(X[mask, j])
    if values.size < 2:
        return np.empty(0)
    mids = 0.5 * (values[:-1] + values[1:])
    return mids[(mids > values[:-1]) & (mids < values[1:])]


def _admissible_candidates(values: np.ndarray, min_count: int) -> tuple[np.ndarray, np.ndarray]:
    """Midpoints between distinct member values whose children both keep
    at least ``min_count`` members.  Returns (thresholds, left counts)."""
    vs = np.sort(values)
    r = vs.size
    boundary = np.nonzero(vs[1:] > vs[:-1])[0]
    if boundary.size == 0:
        return np.empty(0), np.empty(0, dtype=np.intp)
    mids = 0.5 * (vs[boundary] + vs[boundary + 1])
    left = boundary + 1
    keep = (
        (mids > vs[boundary])
        & (mids < vs[boundary + 1])
        & (left >= min_count)
        & (r - left >= min_count)
    )
    return mids[keep], left[keep]


def _lstsq(P: np.ndarray, y: np.ndarray) -> np.ndarray:
    # Same SVD solve and truncation rule as linalg.solve_least_squares,
    # minus the input validation (hot path).
    return np.linalg.lstsq(P, y, rcond=_EPS * max(P.shape))[0]


def _two_group_sse(y_m: np.ndarray, left_mask: np.ndarray) -> tuple[float, float]:
    # Arithmetic depends only on the member-ordered group contents, so two
    # candidates inducing the same groups (possible via different features)
    # get bitwise-identical values and ties resolve by scan order.
    yl = y_m[left_mask]
    yr = y_m[~left_mask]
    sl = float(yl.sum())
    sr = float(yr.sum())
    sse_l = max(float((yl * yl).sum()) - sl * sl / yl.size, 0.0)
    sse_r = max(float((yr * yr).sum()) - sr * sr / yr.size, 0.0)
    return sse_l, sse_r


def _is_indicator(A: np.ndarray) -> bool:
    return bool(np.all((A == 0.0) | (A == 1.0)))


def _exclusive_products(F: np.ndarray) -> np.ndarray:
    """out[:, j] = product over j' != j of F[:, j'], without division."""
    n, p = F.shape
    out = np.empty_like(F)
    acc = np.ones(n)
    for j in range(p):
        out[:, j] = acc
        acc = acc * F[:, j]
    acc = np.ones(n)
    for j in range(p - 1, -1, -1):
        out[:, j] *= acc
        acc = acc * F[:, j]
    return out


def evaluate_split(X, y, P, part: Partition, k: int, j: int, s: float, sigma) -> tuple[float, np.ndarray]:
    """Risk and weights of the tentative split of region ``k`` at ``(j, s)``.

    Builds the (K+1)-column membership matrix for the split, solves the
    least-squares weights from scratch and returns the sum of squared
    residuals over all samples.  Caller state is untouched.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    left, right = split_region(part[k], j, s)
    q_left = region_column(X, sigma, left)
    q_right = region_column(X, sigma, right)
    tentative = update_membership_for_split(np.asarray(P, dtype=float), k, q_left, q_right)
    gamma = linalg.solve_least_squares(tentative, y)
    return linalg.sse(tentative, gamma, y), gamma


def _validate_training(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] == 0:
        raise ValueError("empty dataset")
    if X.shape[0] < 2:
        raise ValueError("need at least two samples")
    if y.shape[0] != X.shape[0]:
        raise ValueError(f"dimension mismatch: X has {X.shape[0]} rows, y has {y.shape[0]}")
    if not np.all(np.isfinite(X)):
        raise ValueError("X entries must be finite")
    if not np.all(np.isfinite(y)):
        raise ValueError("y entries must be finite")
    return X, y


def _min_count(config: TreeConfig, n: int) -> int:
    if n * config.min_leaf_fraction < 1.0:
        raise ValueError(
            "stopping rule vacuous: n * min_leaf_fraction = "
            f"{n * config.min_leaf_fraction:.3g} < 1"
        )
    return int(math.ceil(config.min_leaf_fraction * n))


class _BestSplit:
    """Running argmin over candidates; first strict minimum wins, and the
    scan order (feature ascending, threshold ascending) is the tie-break."""

    __slots__ = ("risk", "feature", "threshold", "payload")

    def __init__(self):
        self.risk = np.inf
        self.feature = -1
        self.threshold = 0.0
        self.payload = None

    def offer(self, risk: float, feature: int, threshold: float, payload) -> None:
        if risk < self.risk:
            self.risk = risk
            self.feature = feature
            self.threshold = threshold
            self.payload = payload

    @property
    def found(self) -> bool:
        return self.payload is not None


def fit_uncertain_tree(X, y, sigma, config: TreeConfig | None = None) -> UncertainTree:
    """Grow a soft-membership tree by greedy global-risk minimization.

    Depth-first construction: pop a region from a LIFO frontier, scan every
    admissible (feature, threshold) candidate, apply the risk-argmin split
    (left child replaces the popped column, right child appended), refit the
    weights, push both children.  A region with no admissible candidate, or
    whose best split improves the risk by less than the noise floor,
    becomes a leaf.  After construction the weights are refit once on the
    membership matrix rebuilt from the final partition.
    """
    if config is None:
        config = TreeConfig()
    X, y = _validate_training(X, y)
    n, p = X.shape
    sigma = prob.validate_sigma(sigma, p)
    min_count = _min_count(config, n)
    floor = RISK_IMPROVEMENT_FLOOR * float(np.var(y)) * n

    part = Partition.root(p)
    P = np.ones((n, 1))
    gamma = _lstsq(P, y)
    risk = linalg.sse(P, gamma, y)
    assign = np.zeros(n, dtype=np.intp)
    split_log: list[SplitRecord] = []
    frontier: list[tuple[int, int]] = [(0, 0)]

    while frontier:
        if config.max_leaves is not None and len(part) >= config.max_leaves:
            break
        k, depth = frontier.pop()
        if config.max_depth is not None and depth >= config.max_depth:
            continue
        members = np.nonzero(assign == k)[0]
        if members.size < 2 * min_count:
            continue
        best = _scan_region_soft(X, y, P, part, k, members, sigma, min_count, risk)
        if not best.found or risk - best.risk <= floor:
            continue

        q_left, q_right, gamma = best.payload
        part, _, _ = part.apply_split(k, best.feature, best.threshold)
        P = update_membership_for_split(P, k, q_left, q_right)
        risk = best.risk
        right_col = len(part) - 1
        moved = members[X[members, best.feature] > best.threshold]
        assign[moved] = right_col
        split_log.append(SplitRecord(k, best.feature, best.threshold, risk))
        frontier.append((k, depth + 1))
        frontier.append((right_col, depth + 1))

    final_P = build_membership(X, sigma, part)
    gamma = linalg.solve_least_squares(final_P, y)
    return UncertainTree(part, gamma, sigma, tuple(split_log), n, config)


def _scan_region_soft(X, y, P, part, k, members, sigma, min_count, risk_now) -> _BestSplit:
    """Evaluate every admissible candidate split of region ``k``.

    Vectorizes the membership work: per feature, the left/right child
    columns for all thresholds come from one batched interval-mass
    evaluation times the product of the remaining features' factors.  Each
    candidate normally gets its own from-scratch SVD least-squares solve,
    so the scan agrees with :func:`evaluate_split` to roundoff.  When every
    membership involved is an exact 0/1 indicator (vanishing widths), the
    global risk decomposes into per-region SSEs and the scan switches to
    the same member-order arithmetic as the hard scanner, which makes the
    degeneration to a classical tree exact, ties included.
    """
    n, K = P.shape
    region = part[k]
    p = part.p
    F = np.empty((n, p))
    for j in range(p):
        F[:, j] = _factor_for_region(X[:, j], sigma[j], region, j)
    others = _exclusive_products(F)

    best = _BestSplit()
    y_m = y[members]
    base = np.inf
    if _is_indicator(P):
        s1 = float(y_m.sum())
        s2 = float((y_m * y_m).sum())
        base = risk_now - max(s2 - s1 * s1 / members.size, 0.0)
    tentative = np.empty((n, K + 1))
    tentative[:, :K] = P
    for j in range(p):
        mids, _ = _admissible_candidates(X[members, j], min_count)
        if mids.size == 0:
            continue
        if sigma[j] == 0.0:
            x = X[:, j][:, None]
            mass_left = ((x > region.lower[j]) & (x <= mids[None, :])).astype(float)
            mass_right = ((x > mids[None, :]) & (x <= region.upper[j])).astype(float)
        else:
            z_lo = (region.lower[j] - X[:, j]) / sigma[j]
            z_hi = (region.upper[j] - X[:, j]) / sigma[j]
            z_s = (mids[None, :] - X[:, j][:, None]) / sigma[j]
            mass_left = prob.gauss_interval_mass(z_lo[:, None], z_s)
            mass_right = prob.gauss_interval_mass(z_s, z_hi[:, None])
        q_left_all = others[:, j][:, None] * mass_left
        q_right_all = others[:, j][:, None] * mass_right
        if np.isfinite(base) and _is_indicator(q_left_all) and _is_indicator(q_right_all):
            v = X[members, j]
            for t in range(mids.size):
                sl, sr = _two_group_sse(y_m, v <= mids[t])
                best.offer(
                    base + (sl + sr),
                    j,
                    float(mids[t]),
                    (q_left_all[:, t].copy(), q_right_all[:, t].copy(), None),
                )
            continue
        for t in range(mids.size):
            tentative[:, k] = q_left_all[:, t]
            tentative[:, K] = q_right_all[:, t]
            gamma = _lstsq(tentative, y)
            resid = y - tentative @ gamma
            risk = float(resid @ resid)
            if risk < best.risk:
                best.offer(risk, j, float(mids[t]), (q_left_all[:, t].copy(), q_right_all[:, t].copy(), gamma))
    return best


def _factor_for_region(x_col: np.ndarray, sigma_j: float, region: Region, j: int) -> np.ndarray:
    if sigma_j == 0.0:
        return ((x_col > region.lower[j]) & (x_col <= region.upper[j])).astype(float)
    z_lo = (region.lower[j] - x_col) / sigma_j
    z_hi = (region.upper[j] - x_col) / sigma_j
    return prob.gauss_interval_mass(z_lo, z_hi)


def fit_standard_tree(X, y, config: TreeConfig | None = None) -> StandardTree:
    """Grow a classical CART tree with the shared candidate/stopping rules.

    Greedy SSE-minimizing dyadic splits on hard memberships; leaf value is
    the mean of the member targets.  The recorded risk after each split is
    the total training SSE across all regions, so the log is directly
    comparable with the uncertain builder's.
    """
    if config is None:
        config = TreeConfig()
    X, y = _validate_training(X, y)
    n, p = X.shape
    min_count = _min_count(config, n)
    floor = RISK_IMPROVEMENT_FLOOR * float(np.var(y)) * n

    part = Partition.root(p)
    assign = np.zeros(n, dtype=np.intp)
    total_sum = float(y.sum())
    total_sq = float((y * y).sum())
    region_sse = [max(total_sq - total_sum * total_sum / n, 0.0)]
    total_risk = region_sse[0]
    split_log: list[SplitRecord] = []
    frontier: list[tuple[int, int]] = [(0, 0)]

    while frontier:
        if config.max_leaves is not None and len(part) >= config.max_leaves:
            break
        k, depth = frontier.pop()
        if config.max_depth is not None and depth >= config.max_depth:
            continue
        members = np.nonzero(assign == k)[0]
        if members.size < 2 * min_count:
            continue
        best = _scan_region_hard(X, y, members, min_count)
        if not best.found:
            continue
        improvement = region_sse[k] - best.risk
        if improvement <= floor:
            continue

        sse_left, sse_right = best.payload
        part, _, _ = part.apply_split(k, best.feature, best.threshold)
        right_col = len(part) - 1
        moved = members[X[members, best.feature] > best.threshold]
        assign[moved] = right_col
        region_sse[k] = sse_left
        region_sse.append(sse_right)
        total_risk = total_risk - improvement
        split_log.append(SplitRecord(k, best.feature, best.threshold, total_risk))
        frontier.append((k, depth + 1))
        frontier.append((right_col, depth + 1))

    means = np.empty(len(part))
    for k in range(len(part)):
        means[k] = float(y[assign == k].mean())
    return StandardTree(part, means, tuple(split_log), n, config)


def _scan_region_hard(X, y, members, min_count) -> _BestSplit:
    """Two-group SSE scan over all admissible candidates of one region.

    ``best.risk`` is the local (left + right) SSE; the caller converts it
    to a global risk.  Prefix sums over the sorted member targets rank the
    candidates cheaply; everything within rounding distance of the minimum
    is then re-evaluated in member order, so candidates that induce the
    same groups tie exactly instead of by summation noise.
    """
    y_m = y[members]
    r = members.size
    best = _BestSplit()
    for j in range(X.shape[1]):
        v = X[members, j]
        mids, lefts = _admissible_candidates(v, min_count)
        if mids.size == 0:
            continue
        ys = y_m[np.argsort(v, kind="stable")]
        c1 = np.cumsum(ys)
        c2 = np.cumsum(ys * ys)
        s1l = c1[lefts - 1]
        s2l = c2[lefts - 1]
        sse_l = np.maximum(s2l - s1l * s1l / lefts, 0.0)
        sse_r = np.maximum((c2[-1] - s2l) - (c1[-1] - s1l) ** 2 / (r - lefts), 0.0)
        local = sse_l + sse_r
        tol = _TIE_TOL * (float(c2[-1]) + 1.0)
        for t in np.nonzero(local <= local.min() + tol)[0]:
            sl, sr = _two_group_sse(y_m, v <= mids[t])
            best.offer(sl + sr, j, float(mids[t]), (sl, sr))
    return best


def uncertainize(tree: StandardTree, X, y, sigma) -> UncertainTree:
    """Re-express a fitted CART tree with the soft prediction rule.

    Keeps the CART partition, computes the soft membership matrix once on
    it and solves the least-squares weights, which can only lower the
    training risk relative to reusing the leaf means.
    """
    X, y = _validate_training(X, y)
    sigma = prob.validate_sigma(sigma, tree.p)
    if X.shape[1] != tree.p:
        raise ValueError(f"dimension mismatch: X has {X.shape[1]} features, tree expects {tree.p}")
    P = build_membership(X, sigma, tree.partition)
    gamma = linalg.solve_least_squares(P, y)
    return UncertainTree(tree.partition, gamma, sigma, tree.split_log, X.shape[0], tree.config)


def replay_split_log(p: int, split_log) -> Partition:
    """Rebuild the partition a split log describes, for validation."""
    part = Partition.root(p)
    for rec in split_log:
        part, _, _ = part.apply_split(rec.region, rec.feature, rec.threshold)
    return part
