"""Dense least-squares machinery for leaf-weight fitting.

The leaf weights of a soft-membership tree are the least-squares solution of
``y ~ P @ gamma`` where ``P`` is the n x K membership matrix.  ``P.T @ P``
can be singular (duplicated or vanishing columns), so the solve goes through
an SVD-based pseudo-inverse unconditionally and returns the minimum-norm
minimizer.  K stays small (one column per leaf), so robustness costs next to
nothing.
"""

from __future__ import annotations

import numpy as np

_EPS = float(np.finfo(np.float64).eps)


def _check_matrix(P) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    if P.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got ndim={P.ndim}")
    if P.shape[0] < 1 or P.shape[1] < 1:
        raise ValueError(f"matrix must be at least 1x1, got shape {P.shape}")
    if not np.all(np.isfinite(P)):
        raise ValueError("matrix entries must be finite")
    return P


def default_rank_tol(P: np.ndarray) -> float:
    """Singular-value truncation threshold eps * max(n, K) * sigma_max.

    The standard rank-revealing convention; stated explicitly so runs are
    reproducible bit for bit.
    """
    P = np.asarray(P, dtype=float)
    smax = float(np.linalg.norm(P, 2)) if P.size else 0.0
    return _EPS * max(P.shape) * smax


def solve_least_squares(P, y) -> np.ndarray:
    """Minimum-norm minimizer of ``||y - P @ gamma||^2``.

    Uses the SVD path (LAPACK gelsd) with singular values below
    ``eps * max(n, K) * sigma_max`` truncated, which is exactly the
    pseudo-inverse solution in the rank-deficient case.

    Raises
    ------
    ValueError
        On shape mismatch or non-finite entries.
    """
    P = _check_matrix(P)
    y = np.asarray(y, dtype=float).ravel()
    if y.shape[0] != P.shape[0]:
        raise ValueError(f"dimension mismatch: P has {P.shape[0]} rows, y has {y.shape[0]}")
    if not np.all(np.isfinite(y)):
        raise ValueError("y entries must be finite")
    gamma, _, _, _ = np.linalg.lstsq(P, y, rcond=_EPS * max(P.shape))
    return gamma


def numerical_rank(P, tol: float | None = None) -> int:
    """Number of singular values of ``P`` strictly above ``tol``.

    ``tol`` defaults to :func:`default_rank_tol`.
    """
    P = _check_matrix(P)
    sv = np.linalg.svd(P, compute_uv=False)
    if tol is None:
        tol = _EPS * max(P.shape) * (float(sv[0]) if sv.size else 0.0)
    elif tol < 0:
        raise ValueError("tol must be >= 0")
    return int(np.count_nonzero(sv > tol))


def sse(P, gamma, y) -> float:
    """Sum of squared residuals ``sum((y - P @ gamma)**2)``.

    This is n times the empirical quadratic risk of the weights ``gamma``
    under the soft memberships ``P``.
    """
    P = np.asarray(P, dtype=float)
    gamma = np.asarray(gamma, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if P.ndim != 2 or P.shape != (y.shape[0], gamma.shape[0]):
        raise ValueError(
            f"shape mismatch: P {P.shape}, gamma ({gamma.shape[0]},), y ({y.shape[0]},)"
        )
    resid = y - P @ gamma
    return float(resid @ resid)
