"""Least-squares solve, numerical rank, and residual bookkeeping."""

import numpy as np
import pytest

import oracles
from uncertree.linalg import default_rank_tol, numerical_rank, solve_least_squares, sse


def _random_instance(rng, rank_deficient=False):
    n = int(rng.integers(3, 31))
    K = int(rng.integers(1, 7))
    P = rng.uniform(0.0, 1.0, size=(n, K))
    if rank_deficient and K >= 2:
        kind = int(rng.integers(3))
        if kind == 0:
            P[:, -1] = P[:, 0]
        elif kind == 1:
            P[:, -1] = 0.0
        else:
            w = rng.uniform(0.0, 1.0, size=K - 1)
            P[:, -1] = P[:, :-1] @ w
    y = rng.normal(0.0, 2.0, size=n)
    return P, y


class TestSolveLeastSquares:
    def test_ones_column_returns_mean(self):
        gamma = solve_least_squares(np.ones((3, 1)), [1.0, 2.0, 3.0])
        np.testing.assert_allclose(gamma, [2.0], atol=1e-14)

    def test_identity_design(self):
        gamma = solve_least_squares(np.eye(2), [4.0, -1.0])
        np.testing.assert_allclose(gamma, [4.0, -1.0], atol=1e-14)

    def test_random_instances_vs_high_precision_svd(self):
        """Full-rank and rank-deficient draws match the 40-digit solve."""
        rng = np.random.default_rng(55)
        for trial in range(40):
            P, y = _random_instance(rng, rank_deficient=trial % 3 == 0)
            got = solve_least_squares(P, y)
            want = oracles.min_norm_lstsq(P, y)
            scale = max(float(np.linalg.norm(want)), 1e-12)
            assert float(np.linalg.norm(got - want)) / scale < 1e-6

    def test_residual_orthogonal_to_column_space(self):
        rng = np.random.default_rng(59)
        for _ in range(50):
            P, y = _random_instance(rng)
            gamma = solve_least_squares(P, y)
            residual = y - P @ gamma
            bound = 1e-8 * max(float(np.linalg.norm(y)), 1.0)
            assert float(np.max(np.abs(P.T @ residual))) < bound

    def test_optimality_under_random_perturbations(self):
        """No random step of size 1e-3 away from the solution lowers sse."""
        rng = np.random.default_rng(61)
        P, y = _random_instance(rng)
        gamma = solve_least_squares(P, y)
        base = sse(P, gamma, y)
        for _ in range(100):
            direction = rng.normal(size=gamma.shape)
            direction /= np.linalg.norm(direction)
            assert sse(P, gamma + 1e-3 * direction, y) >= base - 1e-12

    def test_extra_column_never_hurts(self):
        rng = np.random.default_rng(67)
        for _ in range(25):
            P, y = _random_instance(rng)
            before = sse(P, solve_least_squares(P, y), y)
            wider = np.column_stack([P, rng.uniform(0.0, 1.0, size=P.shape[0])])
            after = sse(wider, solve_least_squares(wider, y), y)
            assert after <= before + 1e-10

    def test_duplicated_columns_stay_finite(self):
        rng = np.random.default_rng(71)
        base = rng.uniform(0.0, 1.0, size=(8, 2))
        P = np.column_stack([base, base[:, 0]])
        gamma = solve_least_squares(P, rng.normal(size=8))
        assert np.all(np.isfinite(gamma))

    def test_shape_and_finiteness_errors(self):
        with pytest.raises(ValueError):
            solve_least_squares(np.ones((3, 1)), [1.0, 2.0])
        with pytest.raises(ValueError):
            solve_least_squares(np.array([[np.nan], [1.0]]), [1.0, 2.0])
        with pytest.raises(ValueError):
            solve_least_squares(np.ones((2, 1)), [np.inf, 0.0])


class TestNumericalRank:
    def test_identity(self):
        assert numerical_rank(np.eye(3)) == 3

    def test_duplicated_column_drops_rank(self):
        rng = np.random.default_rng(73)
        base = rng.uniform(0.0, 1.0, size=(10, 3))
        P = np.column_stack([base, base[:, 1]])
        assert numerical_rank(P) == 3

    def test_matches_exact_rational_rank(self):
        """Ranks agree with exact fraction arithmetic on generic draws.

        Dependencies are introduced by duplicating or zeroing columns,
        which are exact in binary floats; a rounded linear combination
        would be full rank to rational arithmetic while numerically
        deficient, so it cannot serve as an oracle case.
        """
        rng = np.random.default_rng(79)
        for trial in range(30):
            P, _ = _random_instance(rng)
            if trial % 3 == 0 and P.shape[1] >= 2:
                P[:, -1] = P[:, 0]
            elif trial % 3 == 1:
                P[:, -1] = 0.0
            assert numerical_rank(P) == oracles.exact_rank(P)

    def test_custom_tolerance(self):
        P = np.diag([1.0, 1e-7])
        assert numerical_rank(P, tol=1e-6) == 1
        assert numerical_rank(P, tol=1e-8) == 2

    def test_default_tolerance_rule(self):
        """Default cutoff is machine epsilon times max(n, K) times sigma_max."""
        rng = np.random.default_rng(83)
        P = rng.uniform(size=(12, 4))
        smax = float(np.linalg.svd(P, compute_uv=False)[0])
        expected = np.finfo(float).eps * 12 * smax
        assert default_rank_tol(P) == pytest.approx(expected, rel=1e-12)


class TestSse:
    def test_perfect_fit_is_zero(self):
        P = np.eye(3)
        gamma = np.array([1.0, -2.0, 0.5])
        assert sse(P, gamma, P @ gamma) == 0.0

    def test_ones_column_example(self):
        assert sse(np.ones((3, 1)), [2.0], [1.0, 2.0, 3.0]) == pytest.approx(2.0, abs=1e-14)

    def test_random_vs_scalar_loop(self):
        rng = np.random.default_rng(89)
        for _ in range(50):
            P, y = _random_instance(rng)
            gamma = rng.normal(size=P.shape[1])
            assert sse(P, gamma, y) == pytest.approx(
                oracles.sse_loop(P, gamma, y), abs=1e-10
            )

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            sse(np.ones((3, 2)), [1.0], [1.0, 2.0, 3.0])
        with pytest.raises(ValueError):
            sse(np.ones((3, 1)), [1.0], [1.0, 2.0])
