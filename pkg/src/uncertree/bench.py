"""Cross-validated RMSE benchmarks over the tree and forest variants.

The harness loads delimited numeric datasets, optionally perturbs every
cell with sign-symmetric noise, and scores a list of methods with k-fold
cross-validation.  Noise scales derive from per-feature standard
deviations of the clean input; the per-feature noise streams are keyed by
column name, so reordering columns commutes with noising.  All randomness
(folds, noise, forest bootstraps) flows from explicit seeds and every
derived stream is fixed up front, which makes reports byte-reproducible
regardless of how many threads execute the fold-by-method cells.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .forest import ForestConfig, fit_forest
from .trees import TreeConfig, fit_standard_tree, fit_uncertain_tree, uncertainize

TREE_METHODS = ("standard_tree", "hybrid_tree", "uncertain_tree")
FOREST_METHODS = ("standard_rf", "uncertain_rf")
DEFAULT_TAU = 100
FOREST_MTRY = {"standard_rf": "default", "uncertain_rf": "all"}

_FIXTURES = {
    "diabetes": ("diabetes.csv", "target"),
    "abalone": ("abalone500.csv", "rings"),
}


@dataclass
class Dataset:
    """Numeric regression dataset: features, targets, column names."""

    name: str
    X: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...]
    dropped_rows: int = 0

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.y = np.asarray(self.y, dtype=float).ravel()
        self.feature_names = tuple(str(c) for c in self.feature_names)
        if self.X.shape[0] != self.y.shape[0]:
            raise ValueError(
                f"dimension mismatch: X has {self.X.shape[0]} rows, y has {self.y.shape[0]}"
            )
        if self.X.shape[1] < 1:
            raise ValueError("dataset needs at least one feature")
        if len(self.feature_names) != self.X.shape[1]:
            raise ValueError(
                f"{len(self.feature_names)} feature names for {self.X.shape[1]} columns"
            )
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.y))):
            raise ValueError("dataset values must be finite")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


def _parse_cell(cell: str) -> float | None:
    cell = cell.strip()
    if not cell:
        return None
    try:
        value = float(cell)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def _split_table(text: str, source: str) -> tuple[list[str], list[list[float | None] | None]]:
    """Header names plus per-row parsed cells; a ragged row becomes None."""
    lines = text.splitlines()
    if not lines:
        raise ValueError(f"{source}: no usable rows")
    delimiter = "\t" if lines[0].count("\t") > lines[0].count(",") else ","
    reader = csv.reader(io.StringIO(text), delimiter=delimiter)
    header = [h.strip() for h in next(reader)]
    parsed: list[list[float | None] | None] = []
    for row in reader:
        if not row:
            continue
        parsed.append([_parse_cell(cell) for cell in row] if len(row) == len(header) else None)
    return header, parsed


def _numeric_flags(header: list[str], parsed) -> list[bool]:
    shaped = [row for row in parsed if row is not None]
    if not shaped:
        raise ValueError("no usable rows")
    return [
        sum(1 for row in shaped if row[j] is not None) * 2 > len(shaped)
        for j in range(len(header))
    ]


def _resolve_column(header: list[str], column) -> int:
    if isinstance(column, int):
        if not -len(header) <= column < len(header):
            raise ValueError(
                f"missing target column: index {column} out of range for {len(header)} columns"
            )
        return column % len(header)
    try:
        return header.index(str(column))
    except ValueError:
        raise ValueError(f"missing target column: {column!r} not in header {header}") from None


def parse_dataset(text: str, target, drop_non_numeric: bool = True, name: str = "data") -> Dataset:
    """Parse delimited text (comma or tab, auto-detected) as a Dataset.

    A header row is required.  ``target`` picks the target column by name
    or positional index.  Columns where most cells fail to parse as finite
    numbers are treated as non-numeric and dropped when
    ``drop_non_numeric`` is set (rejected otherwise); rows with any
    unparseable cell in the surviving columns are dropped and counted in
    ``Dataset.dropped_rows``.
    """
    header, parsed = _split_table(text, name)
    try:
        numeric = _numeric_flags(header, parsed)
    except ValueError as exc:
        raise ValueError(f"{name}: {exc}") from None
    target_idx = _resolve_column(header, target)
    if not numeric[target_idx]:
        raise ValueError(f"target column {header[target_idx]!r} is not numeric")
    feature_idx = [j for j in range(len(header)) if j != target_idx and numeric[j]]
    if not drop_non_numeric:
        rejected = [header[j] for j in range(len(header)) if j != target_idx and not numeric[j]]
        if rejected:
            raise ValueError(
                f"non-numeric columns {rejected} (pass drop_non_numeric=True to drop them)"
            )
    if not feature_idx:
        raise ValueError(f"{name}: no numeric feature columns")

    keep_idx = feature_idx + [target_idx]
    rows = [
        [row[j] for j in keep_idx]
        for row in parsed
        if row is not None and all(row[j] is not None for j in keep_idx)
    ]
    if not rows:
        raise ValueError(f"{name}: no usable rows")
    data = np.asarray(rows, dtype=float)
    return Dataset(
        name=name,
        X=data[:, :-1],
        y=data[:, -1],
        feature_names=tuple(header[j] for j in feature_idx),
        dropped_rows=len(parsed) - len(rows),
    )


def parse_matrix(text: str, drop_column=None, source: str = "data") -> tuple[np.ndarray, tuple[str, ...], int]:
    """Parse delimited text as a target-less feature matrix.

    Returns (X, feature names, dropped row count).  ``drop_column``
    removes one column (by name or index) first, for reusing files that
    still carry the target.
    """
    header, parsed = _split_table(text, source)
    try:
        numeric = _numeric_flags(header, parsed)
    except ValueError as exc:
        raise ValueError(f"{source}: {exc}") from None
    skip = -1 if drop_column is None else _resolve_column(header, drop_column)
    feature_idx = [j for j in range(len(header)) if j != skip and numeric[j]]
    if not feature_idx:
        raise ValueError(f"{source}: no numeric feature columns")
    rows = [
        [row[j] for j in feature_idx]
        for row in parsed
        if row is not None and all(row[j] is not None for j in feature_idx)
    ]
    if not rows:
        raise ValueError(f"{source}: no usable rows")
    X = np.asarray(rows, dtype=float)
    return X, tuple(header[j] for j in feature_idx), len(parsed) - len(rows)


def load_csv(path, target, drop_non_numeric: bool = True, name: str | None = None) -> Dataset:
    """Load a delimited text file as a Dataset (see :func:`parse_dataset`)."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    return parse_dataset(text, target, drop_non_numeric, name if name is not None else path.stem)


def load_fixture(name: str) -> Dataset:
    """Load one of the datasets shipped with the package."""
    try:
        filename, target = _FIXTURES[name]
    except KeyError:
        raise ValueError(f"unknown fixture {name!r}, expected one of {sorted(_FIXTURES)}") from None
    ref = resources.files("uncertree").joinpath("data").joinpath(filename)
    with resources.as_file(ref) as path:
        return load_csv(path, target, name=name)


def empirical_std(X) -> np.ndarray:
    """Per-feature sample standard deviation (denominator n - 1)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] < 2:
        raise ValueError(f"need at least two rows, got {X.shape[0]}")
    # One column at a time on contiguous copies: the 2-D axis reduction's
    # summation order follows buffer alignment, which would make a column's
    # scale depend on where it sits in memory rather than on its values.
    return np.array([np.std(np.ascontiguousarray(X[:, j]), ddof=1) for j in range(X.shape[1])])


POLICY_KINDS = ("empirical_std", "half_empirical_std", "fixed")


@dataclass(frozen=True)
class SigmaPolicy:
    """Rule mapping a training matrix to per-feature uncertainty scales."""

    kind: str
    values: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"unknown sigma policy {self.kind!r}, expected one of {POLICY_KINDS}")
        if self.kind == "fixed":
            if self.values is None:
                raise ValueError("fixed sigma policy needs a vector of values")
            values = tuple(float(v) for v in self.values)
            if any(not math.isfinite(v) or v < 0 for v in values):
                raise ValueError("fixed sigma values must be finite and >= 0")
            object.__setattr__(self, "values", values)
        elif self.values is not None:
            raise ValueError(f"{self.kind} policy takes no values")

    @classmethod
    def empirical(cls) -> "SigmaPolicy":
        return cls("empirical_std")

    @classmethod
    def half_empirical(cls) -> "SigmaPolicy":
        return cls("half_empirical_std")

    @classmethod
    def fixed(cls, values) -> "SigmaPolicy":
        return cls("fixed", tuple(float(v) for v in values))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "values": None if self.values is None else list(self.values)}

    @classmethod
    def from_dict(cls, doc: dict) -> "SigmaPolicy":
        values = doc.get("values")
        return cls(str(doc["kind"]), None if values is None else tuple(values))


def sigma_from_policy(policy: SigmaPolicy, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if policy.kind == "empirical_std":
        return empirical_std(X)
    if policy.kind == "half_empirical_std":
        return 0.5 * empirical_std(X)
    values = np.asarray(policy.values, dtype=float)
    if values.shape[0] != X.shape[1]:
        raise ValueError(
            f"dimension mismatch: fixed sigma has {values.shape[0]} entries, X has {X.shape[1]} features"
        )
    return values


@dataclass(frozen=True)
class NoiseSpec:
    """Sign-symmetric per-cell perturbation: each cell moves by r * u with
    r uniform on {-1, +1} and u uniform on [lo_frac, hi_frac] times the
    feature's clean standard deviation."""

    seed: int
    lo_frac: float = 0.1
    hi_frac: float = 0.25

    def __post_init__(self):
        if not 0.0 <= self.lo_frac < self.hi_frac:
            raise ValueError(
                f"need 0 <= lo_frac < hi_frac, got ({self.lo_frac}, {self.hi_frac})"
            )

    def to_dict(self) -> dict:
        return {"seed": int(self.seed), "lo_frac": float(self.lo_frac), "hi_frac": float(self.hi_frac)}

    @classmethod
    def from_dict(cls, doc: dict) -> "NoiseSpec":
        return cls(int(doc["seed"]), float(doc["lo_frac"]), float(doc["hi_frac"]))


def _name_key(name: str) -> int:
    return int.from_bytes(hashlib.sha256(name.encode("utf-8")).digest()[:8], "big")


def inject_noise(X, spec: NoiseSpec, feature_names=None) -> np.ndarray:
    """Return a noised copy of ``X``; the input is untouched.

    Magnitude scales come from the input matrix itself, so a constant
    feature stays constant.  Each column gets its own generator derived
    from (seed, hash of column name), which makes the perturbation for a
    named column independent of where that column sits in the matrix.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n, p = X.shape
    if feature_names is None:
        feature_names = [str(j) for j in range(p)]
    if len(feature_names) != p:
        raise ValueError(f"{len(feature_names)} feature names for {p} columns")
    scale = empirical_std(X)
    out = X.copy()
    for j, name in enumerate(feature_names):
        rng = np.random.default_rng(np.random.SeedSequence([spec.seed, _name_key(str(name))]))
        signs = rng.integers(0, 2, size=n) * 2 - 1
        magnitudes = rng.uniform(spec.lo_frac * scale[j], spec.hi_frac * scale[j], size=n)
        out[:, j] = X[:, j] + signs * magnitudes
    return out


def kfold_indices(n: int, k: int = 5, seed: int = 0) -> list[np.ndarray]:
    """Disjoint test-index sets of a seeded k-fold split, sizes within 1."""
    if not 2 <= k <= n:
        raise ValueError(f"need 2 <= k <= n, got k={k}, n={n}")
    perm = np.random.default_rng(np.random.SeedSequence([int(seed), _name_key("kfold")])).permutation(n)
    return [np.sort(fold) for fold in np.array_split(perm, k)]


def rmse(yhat, y) -> float:
    """Root mean squared error."""
    yhat = np.asarray(yhat, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if yhat.shape[0] != y.shape[0]:
        raise ValueError(f"dimension mismatch: {yhat.shape[0]} predictions for {y.shape[0]} targets")
    if yhat.shape[0] == 0:
        raise ValueError("empty vectors")
    return float(np.sqrt(np.mean((yhat - y) ** 2)))


@dataclass(frozen=True)
class Method:
    """Parsed method specification, e.g. "uncertain_rf:15"."""

    label: str
    base: str
    tau: int | None

    @classmethod
    def parse(cls, text: str) -> "Method":
        base, _, param = text.partition(":")
        if base in TREE_METHODS:
            if param:
                raise ValueError(f"unknown method {text!r}: {base} takes no parameter")
            return cls(text, base, None)
        if base in FOREST_METHODS:
            if param:
                try:
                    tau = int(param)
                except ValueError:
                    raise ValueError(f"unknown method {text!r}: tau must be an integer") from None
                if tau < 1:
                    raise ValueError(f"unknown method {text!r}: tau must be >= 1")
            else:
                tau = DEFAULT_TAU
            return cls(text, base, tau)
        raise ValueError(
            f"unknown method {text!r}, expected one of {TREE_METHODS + FOREST_METHODS} "
            "with an optional :tau suffix for forests"
        )

    @property
    def needs_sigma(self) -> bool:
        return self.base in ("hybrid_tree", "uncertain_tree", "uncertain_rf")


@dataclass
class MethodResult:
    method: str
    fold_scores: list[float]
    mean: float
    std: float
    fold_seeds: list[int] | None = None


@dataclass
class CVReport:
    """Self-describing cross-validation outcome: re-running the harness
    with the echoed dataset, seeds and configuration reproduces it."""

    dataset: str
    n: int
    p: int
    k: int
    cv_seed: int
    sigma_policy: SigmaPolicy
    noise: NoiseSpec | None
    tree_config: TreeConfig
    folds: list[list[int]]
    results: list[MethodResult]

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "n": int(self.n),
            "p": int(self.p),
            "k": int(self.k),
            "cv_seed": int(self.cv_seed),
            "sigma_policy": self.sigma_policy.to_dict(),
            "noise": None if self.noise is None else self.noise.to_dict(),
            "tree_config": {
                "min_leaf_fraction": float(self.tree_config.min_leaf_fraction),
                "max_leaves": self.tree_config.max_leaves,
                "max_depth": self.tree_config.max_depth,
            },
            "forest_mtry": dict(FOREST_MTRY),
            "folds": [[int(i) for i in fold] for fold in self.folds],
            "results": [
                {
                    "method": r.method,
                    "fold_scores": [float(s) for s in r.fold_scores],
                    "mean_rmse": float(r.mean),
                    "std_rmse": float(r.std),
                    "fold_seeds": r.fold_seeds,
                }
                for r in self.results
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, allow_nan=False)

    def to_table(self) -> str:
        width = max([len("method")] + [len(r.method) for r in self.results]) + 2
        lines = [
            f"dataset: {self.dataset} (n={self.n}, p={self.p}, {self.k}-fold cv, seed {self.cv_seed})",
            f"{'method':<{width}}mean RMSE (std)",
        ]
        for r in self.results:
            lines.append(f"{r.method:<{width}}{r.mean:.4f} ({r.std:.4f})")
        return "\n".join(lines)


def _cell_seed(cv_seed: int, fold: int, method_label: str) -> int:
    ss = np.random.SeedSequence([int(cv_seed), int(fold), _name_key(method_label)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _fit_predict(method: Method, X_tr, y_tr, X_te, sigma, tree_config: TreeConfig, seed: int) -> np.ndarray:
    if method.base == "standard_tree":
        return fit_standard_tree(X_tr, y_tr, tree_config).predict(X_te)
    if method.base == "uncertain_tree":
        return fit_uncertain_tree(X_tr, y_tr, sigma, tree_config).predict(X_te)
    if method.base == "hybrid_tree":
        tree = fit_standard_tree(X_tr, y_tr, tree_config)
        return uncertainize(tree, X_tr, y_tr, sigma).predict(X_te)
    # Uncertain forests run at small tau, where random feature subsets no
    # longer buy variance reduction and only starve the soft trees; the
    # harness therefore grows them on all features, while standard forests
    # keep the classic one-third rule (FOREST_MTRY echoes this).
    uncertain = method.base == "uncertain_rf"
    config = ForestConfig(
        tau=method.tau,
        mtry=X_tr.shape[1] if uncertain else None,
        seed=seed,
        variant="uncertain" if uncertain else "standard",
        tree_config=tree_config,
    )
    forest = fit_forest(X_tr, y_tr, sigma=sigma if uncertain else None, config=config)
    return forest.predict(X_te)


def run_benchmark(
    dataset: Dataset,
    methods,
    sigma_policy: SigmaPolicy | None = None,
    noise: NoiseSpec | None = None,
    cv_seed: int = 0,
    k: int = 5,
    tree_config: TreeConfig | None = None,
    n_jobs: int | None = None,
) -> CVReport:
    """Score each method with seeded k-fold cross-validation.

    Noise, if requested, is applied once to the full matrix before the
    folds are drawn, so train and test rows are equally perturbed.  Per
    fold, the sigma policy is evaluated on the training rows only, each
    method fits on the training rows and is scored by RMSE on the held-out
    rows.  Standard forests draw the default feature subset per tree while
    uncertain forests use every feature (see ``FOREST_MTRY``).  Forest
    seeds are derived per (fold, method) up front; ``n_jobs`` parallelizes
    the fold-by-method cells without changing any number.
    """
    parsed = [Method.parse(str(m)) for m in methods]
    if not parsed:
        raise ValueError("no methods given")
    if sigma_policy is None:
        sigma_policy = SigmaPolicy.empirical()
    if tree_config is None:
        tree_config = TreeConfig()

    X = dataset.X if noise is None else inject_noise(dataset.X, noise, dataset.feature_names)
    y = dataset.y
    folds = kfold_indices(dataset.n, k, cv_seed)
    train_idx = [
        np.sort(np.concatenate([folds[g] for g in range(k) if g != f])) for f in range(k)
    ]
    needs_sigma = any(m.needs_sigma for m in parsed)
    sigmas = [
        sigma_from_policy(sigma_policy, X[idx]) if needs_sigma else None for idx in train_idx
    ]
    seeds = [[_cell_seed(cv_seed, f, m.label) for f in range(k)] for m in parsed]

    def run_cell(mi: int, f: int) -> float:
        tr, te = train_idx[f], folds[f]
        yhat = _fit_predict(
            parsed[mi], X[tr], y[tr], X[te], sigmas[f], tree_config, seeds[mi][f]
        )
        return rmse(yhat, y[te])

    cells = [(mi, f) for mi in range(len(parsed)) for f in range(k)]
    scores = np.empty((len(parsed), k))
    if n_jobs is not None and n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            for (mi, f), score in zip(cells, pool.map(lambda c: run_cell(*c), cells)):
                scores[mi, f] = score
    else:
        for mi, f in cells:
            scores[mi, f] = run_cell(mi, f)

    results = []
    for mi, method in enumerate(parsed):
        fold_scores = [float(s) for s in scores[mi]]
        results.append(
            MethodResult(
                method=method.label,
                fold_scores=fold_scores,
                mean=float(np.mean(scores[mi])),
                std=float(np.std(scores[mi], ddof=1)),
                fold_seeds=seeds[mi] if method.tau is not None else None,
            )
        )
    return CVReport(
        dataset=dataset.name,
        n=dataset.n,
        p=dataset.p,
        k=k,
        cv_seed=int(cv_seed),
        sigma_policy=sigma_policy,
        noise=noise,
        tree_config=tree_config,
        folds=[[int(i) for i in fold] for fold in folds],
        results=results,
    )
