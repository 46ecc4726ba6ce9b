"""Shared builders for randomized test inputs.

Plain functions rather than fixtures so tests can call them with their
own seeds; every draw is routed through an explicit generator to keep
runs reproducible.
"""

import numpy as np

from uncertree.partition import Partition, Region


def make_regression(seed: int, n: int, p: int, noise: float = 0.3):
    """Continuous features with a piecewise signal plus Gaussian noise."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(-2.0, 2.0, size=(n, p))
    y = np.where(X[:, 0] > 0.0, 2.0, -1.0) + 0.5 * X[:, p - 1]
    return X, y + rng.normal(0.0, noise, size=n)


def random_bounded_partition(rng: np.random.Generator, p: int, n_splits: int) -> Partition:
    """Split a bounded box at random interior points, depth-first.

    Starts from a single finite region (so every width is finite) and
    applies ``n_splits`` random splits, each at a uniform point well
    inside the chosen region's extent on the chosen feature.
    """
    widths = rng.uniform(2.0, 6.0, size=p)
    lower = rng.uniform(-3.0, 0.0, size=p)
    part = Partition((Region(tuple(lower), tuple(lower + widths)),))
    for _ in range(n_splits):
        k = int(rng.integers(len(part)))
        j = int(rng.integers(p))
        region = part.regions[k]
        lo, hi = region.lower[j], region.upper[j]
        s = lo + (hi - lo) * rng.uniform(0.3, 0.7)
        part, _, _ = part.apply_split(k, j, s)
    return part


def region_centers(part: Partition) -> np.ndarray:
    """One strictly interior point per region: the box midpoints."""
    return (part.lowers + part.uppers) / 2.0
