"""Independent reference implementations used to pin expected test values.

Everything in this module is deliberately written against different
machinery than the package under test: arbitrary-precision arithmetic
(mpmath), exact rational arithmetic (fractions), or plain scalar loops.
Agreement between the package and these oracles is evidence, not
tautology.
"""

import math
from fractions import Fraction

import mpmath as mp
import numpy as np

mp.mp.dps = 40

_EPS = float(np.finfo(np.float64).eps)


# -----------------------------------------------------------------------
# Gaussian distribution oracles
# -----------------------------------------------------------------------


def normal_cdf(z: float) -> float:
    """Standard normal CDF at 40 significant digits."""
    return float(mp.ncdf(mp.mpf(z)))


def normal_cdf_by_quadrature(z: float) -> float:
    """Standard normal CDF by direct numerical integration of the density."""
    density = lambda t: mp.exp(-t * t / 2) / mp.sqrt(2 * mp.pi)
    return float(mp.quad(density, [mp.ninf, mp.mpf(z)]))


def normal_quantile(alpha: float) -> float:
    """Standard normal quantile by bisection on the high-precision CDF."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    target = mp.mpf(alpha)
    lo, hi = mp.mpf(-12), mp.mpf(12)
    for _ in range(200):
        mid = (lo + hi) / 2
        if mp.ncdf(mid) < target:
            lo = mid
        else:
            hi = mid
    return float((lo + hi) / 2)


def interval_mass(x: float, sigma: float, a: float, b: float) -> float:
    """P(N(x, sigma^2) in (a, b]) at high precision, Dirac limit included."""
    if sigma == 0.0:
        return 1.0 if a <= x <= b else 0.0
    s = mp.mpf(sigma)
    za = (mp.mpf(a) - mp.mpf(x)) / s if math.isfinite(a) else mp.ninf
    zb = (mp.mpf(b) - mp.mpf(x)) / s if math.isfinite(b) else mp.inf
    return float(mp.ncdf(zb) - mp.ncdf(za))


def box_mass(x, sigma, lower, upper) -> float:
    """Product of per-coordinate interval masses for an axis-aligned box."""
    out = mp.mpf(1)
    for xj, sj, aj, bj in zip(x, sigma, lower, upper):
        out *= mp.mpf(interval_mass(float(xj), float(sj), float(aj), float(bj)))
    return float(out)


# -----------------------------------------------------------------------
# Linear algebra oracles
# -----------------------------------------------------------------------


def min_norm_lstsq(P, y) -> np.ndarray:
    """Minimum-norm least-squares solution via high-precision SVD.

    Small singular values are truncated with the same relative cutoff the
    double-precision solver uses, so rank decisions agree; the arithmetic
    on the retained part runs at 40 digits.
    """
    P = np.asarray(P, dtype=float)
    y = np.asarray(y, dtype=float)
    A = mp.matrix(P.tolist())
    U, S, V = mp.svd_r(A)
    smax = max((S[i] for i in range(S.rows)), default=mp.mpf(0))
    cutoff = mp.mpf(_EPS) * max(P.shape) * smax
    Uty = U.T * mp.matrix([[v] for v in y])
    coeff = [Uty[i] / S[i] if S[i] > cutoff else mp.mpf(0) for i in range(S.rows)]
    gamma = V.T * mp.matrix([[c] for c in coeff])
    return np.array([float(gamma[i]) for i in range(gamma.rows)])


def solve_2x2_normal_equations(P, y) -> np.ndarray:
    """Closed-form (P^T P)^{-1} P^T y for a full-rank two-column design."""
    P = mp.matrix(np.asarray(P, dtype=float).tolist())
    y = mp.matrix([[v] for v in np.asarray(y, dtype=float)])
    G = P.T * P
    b = P.T * y
    det = G[0, 0] * G[1, 1] - G[0, 1] * G[1, 0]
    g0 = (G[1, 1] * b[0] - G[0, 1] * b[1]) / det
    g1 = (G[0, 0] * b[1] - G[1, 0] * b[0]) / det
    return np.array([float(g0), float(g1)])


def exact_rank(M) -> int:
    """Matrix rank by Gaussian elimination over exact rationals.

    Entries are converted with Fraction(float), which is exact for every
    double, so no tolerance enters the rank decision.
    """
    rows = [[Fraction(float(v)) for v in row] for row in np.asarray(M, dtype=float)]
    rank = 0
    ncols = len(rows[0]) if rows else 0
    for col in range(ncols):
        pivot = next((r for r in range(rank, len(rows)) if rows[r][col] != 0), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        lead = rows[rank][col]
        for r in range(len(rows)):
            if r != rank and rows[r][col] != 0:
                factor = rows[r][col] / lead
                rows[r] = [a - factor * b for a, b in zip(rows[r], rows[rank])]
        rank += 1
        if rank == len(rows):
            break
    return rank


# -----------------------------------------------------------------------
# Scalar-loop statistics oracles
# -----------------------------------------------------------------------


def sse_loop(P, gamma, y) -> float:
    """Sum of squared residuals by explicit python loops."""
    total = 0.0
    for i, row in enumerate(P):
        pred = 0.0
        for k, value in enumerate(row):
            pred += float(gamma[k]) * float(value)
        total += (float(y[i]) - pred) ** 2
    return total


def group_sse(values) -> float:
    """Sum of squared deviations from the group mean, two-pass."""
    values = [float(v) for v in values]
    if not values:
        return 0.0
    mean = sum(values) / len(values)
    return sum((v - mean) ** 2 for v in values)


def std_loop(values) -> float:
    """Sample standard deviation (ddof=1), two-pass scalar arithmetic."""
    values = [float(v) for v in values]
    mean = sum(values) / len(values)
    return math.sqrt(sum((v - mean) ** 2 for v in values) / (len(values) - 1))


def rmse_loop(yhat, y) -> float:
    total = 0.0
    n = 0
    for a, b in zip(yhat, y):
        total += (float(a) - float(b)) ** 2
        n += 1
    return math.sqrt(total / n)


# -----------------------------------------------------------------------
# Tree-fitting oracles
# -----------------------------------------------------------------------


def naive_cart(X, y, min_count: int, floor: float = 0.0):
    """Greedy variance-reducing binary splits by brute force.

    Independent of the package: regions are boolean masks, candidate
    thresholds are midpoints of consecutive distinct member values, the
    best (feature, threshold) is the first strict minimizer in scan
    order, and the frontier is depth-first with the right child explored
    before the left.  Returns the split sequence and the final masks.

    A split is rejected when either child would hold fewer than
    ``min_count`` points or the squared-error improvement does not exceed
    ``floor``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    masks = [np.ones(n, dtype=bool)]
    splits = []
    stack = [0]
    while stack:
        k = stack.pop()
        idx = np.flatnonzero(masks[k])
        if idx.size < 2 * min_count:
            continue
        best = None
        for j in range(p):
            levels = sorted(set(X[idx, j].tolist()))
            for lo, hi in zip(levels, levels[1:]):
                s = (lo + hi) / 2.0
                left = idx[X[idx, j] <= s]
                right = idx[X[idx, j] > s]
                if left.size < min_count or right.size < min_count:
                    continue
                sse = group_sse(y[left]) + group_sse(y[right])
                if best is None or sse < best[0]:
                    best = (sse, j, s)
        if best is None:
            continue
        if group_sse(y[idx]) - best[0] <= floor:
            continue
        sse, j, s = best
        left_mask = masks[k] & (X[:, j] <= s)
        right_mask = masks[k] & (X[:, j] > s)
        masks[k] = left_mask
        masks.append(right_mask)
        splits.append((k, j, s))
        stack.append(k)
        stack.append(len(masks) - 1)
    return splits, masks


def brute_force_root_risk(X, y, sigma, min_count: int):
    """Exhaustive scan of every admissible first split of the full space.

    For each candidate (feature, threshold), the two-region membership
    matrix is built from the high-precision Gaussian oracle and the risk
    is the residual of the closed-form two-column least squares.  Returns
    the list of ((feature, threshold), risk) pairs in scan order.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    out = []
    for j in range(p):
        levels = sorted(set(X[:, j].tolist()))
        for lo, hi in zip(levels, levels[1:]):
            s = (lo + hi) / 2.0
            n_left = int(np.sum(X[:, j] <= s))
            if n_left < min_count or n - n_left < min_count:
                continue
            P = np.empty((n, 2))
            for i in range(n):
                P[i, 0] = interval_mass(X[i, j], sigma[j], -math.inf, s)
                P[i, 1] = interval_mass(X[i, j], sigma[j], s, math.inf)
            gamma = min_norm_lstsq(P, y)
            out.append(((j, s), sse_loop(P, gamma, y)))
    return out
