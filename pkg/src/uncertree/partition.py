"""Axis-aligned regions, partitions and membership matrices.

A tree's leaves are hyper-rectangles ``prod_j [a_j, b_j]`` with infinite
bounds allowed; a :class:`Partition` is the ordered list of leaf regions,
ordered exactly like the columns of the membership matrix ``P``.  When a
region is split, the left child takes over the parent's column and the right
child is appended as the last column; that contract is frozen so incremental
and from-scratch builds produce comparable weight vectors.

Boundary conventions: regions are closed and children share the split
threshold.  Gaussian masses never see the measure-zero overlap.  In the
zero-noise (indicator) limit a point sitting exactly on a threshold would
belong to both children, so hard assignment and indicator membership use
half-open intervals ``(lo, hi]``, i.e. the tie goes to the left child.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import linalg, prob


@dataclass(frozen=True, eq=False)
class Region:
    """Hyper-rectangle ``prod_j [lower_j, upper_j]`` with +-inf sentinels."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ValueError("lower and upper must be 1-d arrays of equal length")
        if np.any(np.isnan(lower)) or np.any(np.isnan(upper)):
            raise ValueError("region bounds must not be NaN")
        if np.any(lower > upper):
            raise ValueError("region must satisfy lower <= upper on every feature")
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def full(cls, p: int) -> "Region":
        """The all-infinite root region of dimension ``p``."""
        return cls(np.full(p, -np.inf), np.full(p, np.inf))

    @property
    def p(self) -> int:
        return self.lower.shape[0]

    def width(self, j: int) -> float:
        return float(self.upper[j] - self.lower[j])

    def contains(self, x) -> bool:
        """Half-open containment ``lo < x <= hi`` per feature.

        This is the hard-assignment rule used for leaf-size accounting and
        indicator membership; a point on a shared boundary counts for the
        region on the left of the boundary.
        """
        x = np.asarray(x, dtype=float).ravel()
        if x.shape[0] != self.p:
            raise ValueError(f"dimension mismatch: point has {x.shape[0]} features, region {self.p}")
        return bool(np.all((x > self.lower) & (x <= self.upper)))

    def equals(self, other: "Region") -> bool:
        return bool(np.array_equal(self.lower, other.lower) and np.array_equal(self.upper, other.upper))


def split_region(region: Region, j: int, s: float) -> tuple[Region, Region]:
    """Cut ``region`` at threshold ``s`` on feature ``j``.

    Returns ``(left, right)`` where the left child keeps everything below
    ``s`` and both children share the boundary.

    Raises
    ------
    ValueError
        If ``s`` is not strictly inside the region's feature-``j`` interval.
    """
    s = float(s)
    if not 0 <= j < region.p:
        raise ValueError(f"feature index {j} out of range for p={region.p}")
    if not region.lower[j] < s < region.upper[j]:
        raise ValueError(
            f"split outside region: s={s} not in ({region.lower[j]}, {region.upper[j]}) on feature {j}"
        )
    left_upper = region.upper.copy()
    left_upper[j] = s
    right_lower = region.lower.copy()
    right_lower[j] = s
    return Region(region.lower, left_upper), Region(right_lower, region.upper)


class Partition:
    """Ordered list of interior-disjoint regions covering the root region.

    The region order mirrors the membership-matrix columns.  Instances are
    immutable; :meth:`apply_split` returns a new partition following the
    replace-left / append-right column contract.
    """

    def __init__(self, regions: Iterable[Region]):
        self.regions: tuple[Region, ...] = tuple(regions)
        if not self.regions:
            raise ValueError("partition needs at least one region")
        p = self.regions[0].p
        if any(r.p != p for r in self.regions):
            raise ValueError("all regions must share the same dimension")
        self._lowers = np.vstack([r.lower for r in self.regions])
        self._uppers = np.vstack([r.upper for r in self.regions])
        self._lowers.setflags(write=False)
        self._uppers.setflags(write=False)

    @classmethod
    def root(cls, p: int) -> "Partition":
        return cls([Region.full(p)])

    def __len__(self) -> int:
        return len(self.regions)

    def __getitem__(self, k: int) -> Region:
        return self.regions[k]

    @property
    def p(self) -> int:
        return self.regions[0].p

    @property
    def lowers(self) -> np.ndarray:
        """K x p array of lower bounds, row k = region k."""
        return self._lowers

    @property
    def uppers(self) -> np.ndarray:
        """K x p array of upper bounds, row k = region k."""
        return self._uppers

    def apply_split(self, k: int, j: int, s: float) -> tuple["Partition", Region, Region]:
        """Split region ``k``; left child replaces column ``k``, right child appended."""
        left, right = split_region(self.regions[k], j, s)
        regions = list(self.regions)
        regions[k] = left
        regions.append(right)
        return Partition(regions), left, right

    def assign(self, X) -> np.ndarray:
        """Hard region index per row of ``X`` under the half-open rule.

        Raises if some row is in no region, which cannot happen for
        split-generated partitions of the full space.
        """
        X = np.atleast_2d(np.asarray(X, dtype=float))
        inside = self.hard_membership(X)
        hits = inside.sum(axis=1)
        if np.any(hits != 1):
            bad = int(np.nonzero(hits != 1)[0][0])
            raise ValueError(f"row {bad} matched {int(hits[bad])} regions; partition does not cover it uniquely")
        return np.argmax(inside, axis=1)

    def hard_membership(self, X) -> np.ndarray:
        """Boolean n x K matrix of half-open containment."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.all(
            (X[:, None, :] > self._lowers[None, :, :]) & (X[:, None, :] <= self._uppers[None, :, :]),
            axis=2,
        )


def _factor_columns(x_col: np.ndarray, sigma_j: float, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Per-sample interval masses for one feature over several intervals.

    ``x_col`` has shape (n,); ``lo``/``hi`` have shape (m,).  Returns (n, m).
    A zero ``sigma_j`` yields half-open indicators (left-child tie rule).
    """
    if sigma_j == 0.0:
        return ((x_col[:, None] > lo[None, :]) & (x_col[:, None] <= hi[None, :])).astype(float)
    z_lo = (lo[None, :] - x_col[:, None]) / sigma_j
    z_hi = (hi[None, :] - x_col[:, None]) / sigma_j
    return prob.gauss_interval_mass(z_lo, z_hi)


def region_column(X, sigma, region: Region) -> np.ndarray:
    """Membership probabilities of every row of ``X`` for one region."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    sigma = prob.validate_sigma(sigma, X.shape[1])
    if region.p != X.shape[1]:
        raise ValueError(f"dimension mismatch: X has {X.shape[1]} features, region {region.p}")
    col = np.ones(X.shape[0])
    for j in range(region.p):
        col *= _factor_columns(X[:, j], sigma[j], region.lower[j : j + 1], region.upper[j : j + 1])[:, 0]
    return col


def build_membership(X, sigma, partition: Partition) -> np.ndarray:
    """The n x K membership matrix ``P`` for a dataset and partition.

    ``P[i, k]`` is the probability that the latent input behind row ``i``
    lies in region ``k``.  For a partition of the full space the rows sum
    to 1 (up to roundoff) since the Gaussian has total mass one.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n, p = X.shape
    sigma = prob.validate_sigma(sigma, p)
    if partition.p != p:
        raise ValueError(f"dimension mismatch: X has {p} features, partition {partition.p}")
    P = np.ones((n, len(partition)))
    for j in range(p):
        P *= _factor_columns(X[:, j], sigma[j], partition.lowers[:, j], partition.uppers[:, j])
    return P


def update_membership_for_split(
    P: np.ndarray,
    k: int,
    q_left: np.ndarray,
    q_right: np.ndarray,
    tol: float = 1e-12,
) -> np.ndarray:
    """Replace column ``k`` by the left-child column and append the right.

    The children partition the parent region, so their columns must sum to
    the parent column; that mass conservation is checked to ``tol``
    (absolute, per entry) and row sums are therefore preserved.

    Raises
    ------
    ValueError
        If ``q_left + q_right`` strays from the old column ``k``.
    """
    P = np.asarray(P, dtype=float)
    q_left = np.asarray(q_left, dtype=float).ravel()
    q_right = np.asarray(q_right, dtype=float).ravel()
    n, K = P.shape
    if not 0 <= k < K:
        raise ValueError(f"column {k} out of range for K={K}")
    if q_left.shape[0] != n or q_right.shape[0] != n:
        raise ValueError("child columns must have one entry per sample")
    drift = np.max(np.abs(q_left + q_right - P[:, k])) if n else 0.0
    if drift > tol:
        raise ValueError(f"split mass mismatch: children deviate from parent column by {drift:.3e}")
    out = np.empty((n, K + 1))
    out[:, :K] = P
    out[:, k] = q_left
    out[:, K] = q_right
    return out


def invertibility_bound(partition: Partition) -> np.ndarray:
    """Per-feature noise-scale bound under which ``P.T @ P`` is invertible.

    For feature ``j`` the bound is the smallest region width divided by
    ``2 * q`` with ``q`` the standard normal quantile at level
    ``(1 + 0.5**(1/p)) / 2``.  If any region is unbounded on ``j`` the
    bound is reported as ``+inf``: the guarantee does not apply there and
    the pseudo-inverse solve covers those cases.
    """
    p = partition.p
    level = (1.0 + 0.5 ** (1.0 / p)) / 2.0
    q = prob.std_normal_quantile(level)
    widths = partition.uppers - partition.lowers  # K x p
    bounds = np.empty(p)
    for j in range(p):
        if np.any(np.isinf(widths[:, j])):
            bounds[j] = np.inf
        else:
            bounds[j] = float(widths[:, j].min()) / (2.0 * q)
    return bounds


def check_theorem(sigma, partition: Partition) -> bool:
    """True when every noise scale is strictly below its per-feature bound."""
    sigma = prob.validate_sigma(sigma, partition.p)
    return bool(np.all(sigma < invertibility_bound(partition)))


def rank_equals_regions(P: np.ndarray, partition: Partition) -> bool:
    """Whether the membership matrix has full column rank K."""
    return linalg.numerical_rank(P) == len(partition)
