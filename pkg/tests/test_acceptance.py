"""Acceptance gate: end-to-end checks with pinned tolerances and budgets.

Each test prints a single machine-greppable verdict line of the form
``[acceptance] criterion N (<name>): PASS/FAIL (detail)`` before its
assertions, so the gate can be audited from captured output alone.
"""

import os
import time

import numpy as np

import oracles
from conftest import random_bounded_partition, region_centers
from uncertree.bench import (
    Dataset,
    NoiseSpec,
    SigmaPolicy,
    empirical_std,
    load_fixture,
    rmse,
    run_benchmark,
)
from uncertree.linalg import numerical_rank, solve_least_squares
from uncertree.partition import build_membership, invertibility_bound
from uncertree.trees import fit_standard_tree, fit_uncertain_tree


def _verdict(num: int, name: str, ok: bool, detail: str) -> None:
    print(f"[acceptance] criterion {num} ({name}): {'PASS' if ok else 'FAIL'} ({detail})")


class TestCriterion1SigmaZeroDegeneration:
    def test_vanishing_sigma_reproduces_standard_cart(self):
        """25 random small datasets: sigma_j = 1e-12 * range_j gives the
        standard tree's split log and predictions within 1e-6, in < 10 s."""
        start = time.perf_counter()
        rng = np.random.default_rng(20260823)
        matched = 0
        for _ in range(25):
            n = int(rng.integers(10, 51))
            p = int(rng.integers(1, 4))
            X = rng.uniform(-3.0, 3.0, size=(n, p))
            y = rng.normal(size=n) + 2.5 * (X[:, 0] > 0.0) + 0.4 * X[:, p - 1]
            standard = fit_standard_tree(X, y)
            sigma = 1e-12 * (X.max(axis=0) - X.min(axis=0))
            uncertain = fit_uncertain_tree(X, y, sigma)
            same_log = [
                (r.region, r.feature, r.threshold) for r in standard.split_log
            ] == [(r.region, r.feature, r.threshold) for r in uncertain.split_log]
            queries = rng.uniform(-3.0, 3.0, size=(40, p))
            close = np.max(np.abs(standard.predict(queries) - uncertain.predict(queries))) < 1e-6
            matched += bool(same_log and close)
        elapsed = time.perf_counter() - start
        ok = matched == 25 and elapsed < 10.0
        _verdict(1, "sigma->0 degeneration", ok, f"{matched}/25 datasets matched in {elapsed:.2f}s")
        assert matched == 25
        assert elapsed < 10.0


class TestCriterion2LeastSquaresOracle:
    def test_matches_high_precision_svd_oracle(self):
        """100 random systems (n <= 30, K <= 6), half rank-deficient, agree
        with a 40-digit SVD oracle within 1e-6 relative error."""
        rng = np.random.default_rng(515)
        worst = 0.0
        for trial in range(100):
            n = int(rng.integers(3, 31))
            K = int(rng.integers(1, 7))
            P = rng.uniform(0.0, 1.0, size=(n, K))
            if trial % 2 == 1 and K >= 2:
                mode = trial % 3
                if mode == 0:
                    P[:, -1] = P[:, 0]
                elif mode == 1:
                    P[:, -1] = 0.0
                else:
                    P[:, -1] = 0.5 * P[:, 0] + 0.5 * P[:, K // 2]
            y = rng.normal(size=n)
            got = solve_least_squares(P, y)
            want = oracles.min_norm_lstsq(P, y)
            err = np.linalg.norm(got - want) / max(np.linalg.norm(want), 1.0)
            worst = max(worst, float(err))
        ok = worst < 1e-6
        _verdict(2, "least-squares oracle", ok, f"worst relative error {worst:.3e} over 100 systems")
        assert worst < 1e-6


class TestCriterion3SeparationBoundSuite:
    def test_rank_and_dominant_rows_below_bound(self):
        """50 random bounded partitions with one interior sample per region:
        sigma below the per-feature bound gives full rank and each
        designated membership entry above 0.5.  Zero violations."""
        rng = np.random.default_rng(616)
        violations = 0
        for _ in range(50):
            p = int(rng.integers(1, 4))
            part = random_bounded_partition(rng, p, int(rng.integers(1, 6)))
            K = len(part)
            bounds = invertibility_bound(part)
            sigma = rng.uniform(0.3, 0.95, size=p) * bounds
            centers = region_centers(part)
            P = build_membership(centers, sigma, part)
            if numerical_rank(P) != K:
                violations += 1
                continue
            if not np.all(P[np.arange(K), np.arange(K)] > 0.5):
                violations += 1
        ok = violations == 0
        _verdict(3, "separation bound suite", ok, f"{violations} violations over 50 partitions")
        assert violations == 0


class TestCriterion4StochasticityAndMonotonicity:
    def test_row_sums_and_risk_sequences(self):
        """Across a varied collection of fitted uncertain trees: membership
        rows sum to 1 within 1e-9 and split-log risks never increase."""
        rng = np.random.default_rng(717)
        worst_row = 0.0
        worst_rise = 0.0
        fitted = 0
        for trial in range(30):
            n = int(rng.integers(20, 121))
            p = int(rng.integers(1, 7))
            X = rng.uniform(-2.0, 2.0, size=(n, p))
            y = rng.normal(size=n) + 1.5 * np.sin(X[:, 0] * 2.0)
            scale = empirical_std(X)
            choice = trial % 4
            if choice == 0:
                sigma = 0.3 * scale
            elif choice == 1:
                sigma = 0.5 * scale
            elif choice == 2:
                sigma = np.zeros(p)
            else:
                sigma = np.full(p, 0.1)
            tree = fit_uncertain_tree(X, y, sigma)
            fitted += 1
            P = build_membership(X, sigma, tree.partition)
            worst_row = max(worst_row, float(np.max(np.abs(P.sum(axis=1) - 1.0))))
            risks = [rec.risk for rec in tree.split_log]
            for a, b in zip(risks, risks[1:]):
                worst_rise = max(worst_rise, b - a)
        ok = worst_row <= 1e-9 and worst_rise <= 0.0
        _verdict(
            4,
            "row sums and risk monotonicity",
            ok,
            f"{fitted} trees, worst row-sum error {worst_row:.2e}, worst risk rise {worst_rise:.2e}",
        )
        assert worst_row <= 1e-9
        assert worst_rise <= 0.0


class TestCriterion5FixtureDirection:
    def test_tree_ordering_on_fixtures(self):
        """10 CV seeds per fixture: uncertain < standard with hybrid in
        between in >= 8 of 10 seeds per dataset, under 5 minutes."""
        start = time.perf_counter()
        methods = ["standard_tree", "hybrid_tree", "uncertain_tree"]
        tallies = {}
        means = {}
        for name in ("diabetes", "abalone"):
            ds = load_fixture(name)
            wins = 0
            collected = {m: [] for m in methods}
            for seed in range(1, 11):
                report = run_benchmark(
                    ds, methods, sigma_policy=SigmaPolicy.empirical(), cv_seed=seed
                )
                by = {r.method: r.mean for r in report.results}
                if (
                    by["uncertain_tree"] < by["standard_tree"]
                    and by["uncertain_tree"] <= by["hybrid_tree"] <= by["standard_tree"]
                ):
                    wins += 1
                for m in methods:
                    collected[m].append(by[m])
            tallies[name] = wins
            means[name] = {m: float(np.mean(collected[m])) for m in methods}
        elapsed = time.perf_counter() - start
        ok = all(w >= 8 for w in tallies.values()) and elapsed < 300.0
        detail = ", ".join(
            f"{name}: {tallies[name]}/10 seeds "
            f"(std {means[name]['standard_tree']:.2f}, hyb {means[name]['hybrid_tree']:.2f}, "
            f"unc {means[name]['uncertain_tree']:.2f})"
            for name in tallies
        )
        _verdict(5, "fixture tree ordering", ok, f"{detail}; {elapsed:.0f}s")
        for name, wins in tallies.items():
            assert wins >= 8, f"{name}: {wins}/10"
        assert elapsed < 300.0


class TestCriterion6NoisedForestDirection:
    def test_small_uncertain_forest_beats_large_standard_forest(self):
        """Noised fixtures, half-empirical scales: uncertain forest (tau=15)
        under standard forest (tau=100) in >= 8 of 10 seeds per dataset,
        under 15 minutes."""
        start = time.perf_counter()
        methods = ["standard_rf:100", "uncertain_rf:15"]
        tallies = {}
        means = {}
        for name in ("diabetes", "abalone"):
            ds = load_fixture(name)
            wins = 0
            collected = {m: [] for m in methods}
            for seed in range(1, 11):
                report = run_benchmark(
                    ds,
                    methods,
                    sigma_policy=SigmaPolicy.half_empirical(),
                    noise=NoiseSpec(seed=seed),
                    cv_seed=seed,
                    n_jobs=4,
                )
                by = {r.method: r.mean for r in report.results}
                wins += by["uncertain_rf:15"] < by["standard_rf:100"]
                for m in methods:
                    collected[m].append(by[m])
            tallies[name] = wins
            means[name] = {m: float(np.mean(collected[m])) for m in methods}
        elapsed = time.perf_counter() - start
        ok = all(w >= 8 for w in tallies.values()) and elapsed < 900.0
        detail = ", ".join(
            f"{name}: {tallies[name]}/10 seeds "
            f"(std rf {means[name]['standard_rf:100']:.2f}, unc rf {means[name]['uncertain_rf:15']:.2f})"
            for name in tallies
        )
        _verdict(6, "noised forest direction", ok, f"{detail}; {elapsed:.0f}s")
        for name, wins in tallies.items():
            assert wins >= 8, f"{name}: {wins}/10"
        assert elapsed < 900.0


def _synthetic_split(seed: int, kind: str):
    """Latent u is clean, x is u plus unit Gaussian measurement error."""
    train = np.random.default_rng(np.random.SeedSequence([seed, 7]))
    test = np.random.default_rng(np.random.SeedSequence([seed, 8]))

    def draw(rng, n):
        u = rng.uniform(0.0, 10.0, size=(n, 2))
        if kind == "steps":
            f = 3.0 * (u[:, 0] > 5.0) + 2.0 * (u[:, 1] > 3.0)
        else:
            f = 0.4 * u[:, 0] + 0.25 * u[:, 1]
        y = f + rng.normal(0.0, 0.3, size=n)
        x = u + rng.normal(0.0, 1.0, size=(n, 2))
        return x, y

    return draw(train, 300), draw(test, 1000)


class TestCriterion7KnownGeneratorBenchmark:
    def test_uncertain_tree_wins_under_known_measurement_error(self):
        """Latent-variable generator with known sigma_true = 1: the
        uncertain tree beats the standard tree on held-out RMSE in >= 70%
        of 20 seeds, for step and smooth monotone targets."""
        sigma_u = np.array([1.0, 1.0])
        tallies = {}
        for kind in ("steps", "smooth"):
            wins = 0
            for seed in range(1, 21):
                (X_tr, y_tr), (X_te, y_te) = _synthetic_split(seed, kind)
                standard = fit_standard_tree(X_tr, y_tr)
                uncertain = fit_uncertain_tree(X_tr, y_tr, sigma_u)
                wins += rmse(uncertain.predict(X_te), y_te) < rmse(standard.predict(X_te), y_te)
            tallies[kind] = wins
        ok = all(w >= 14 for w in tallies.values())
        _verdict(
            7,
            "known-generator benchmark",
            ok,
            f"steps {tallies['steps']}/20, smooth {tallies['smooth']}/20 seeds",
        )
        for kind, wins in tallies.items():
            assert wins >= 14, f"{kind}: {wins}/20"


class TestCriterion8Determinism:
    def test_reports_are_byte_identical_under_parallelism(self):
        """Identical seeds give byte-identical benchmark JSON, serial or at
        maximum parallelism, with noise and forests in the mix."""
        rng = np.random.default_rng(818)
        X = rng.uniform(-2.0, 2.0, size=(80, 4))
        y = rng.normal(size=80) + 2.0 * (X[:, 1] > 0.0)
        ds = Dataset("determinism", X, y, ("a", "b", "c", "d"))
        methods = ["standard_tree", "uncertain_tree", "standard_rf:5", "uncertain_rf:5"]
        kwargs = dict(
            sigma_policy=SigmaPolicy.half_empirical(),
            noise=NoiseSpec(seed=4),
            cv_seed=4,
        )
        workers = max(os.cpu_count() or 1, 8)
        serial_a = run_benchmark(ds, methods, **kwargs).to_json()
        serial_b = run_benchmark(ds, methods, **kwargs).to_json()
        parallel = run_benchmark(ds, methods, n_jobs=workers, **kwargs).to_json()
        ok = serial_a == serial_b == parallel
        _verdict(
            8,
            "benchmark determinism",
            ok,
            f"serial repeat equal: {serial_a == serial_b}, "
            f"parallel (n_jobs={workers}) equal: {serial_a == parallel}",
        )
        assert serial_a == serial_b
        assert serial_a == parallel
