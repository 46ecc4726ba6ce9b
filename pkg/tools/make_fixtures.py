"""Regenerate the CSV fixtures shipped under src/uncertree/data/.

Run from the repository root:

    python3 tools/make_fixtures.py

Two datasets are produced:

* diabetes.csv: the classic 442-patient diabetes-progression table
  (10 numeric baseline variables, unscaled), exported from scikit-learn's
  bundled copy.

* abalone500.csv: a synthetic stand-in for the 500-row abalone regression
  task (7 numeric shell measurements, ring-count target).  The sandbox this
  repository is built in has no network access, so the public 4177-row
  table cannot be downloaded; instead a seeded generator below produces a
  4177-row population with comparable structure and a seeded 500-row
  subsample is committed together with its index list
  (abalone_subsample_indices.json).  The generator follows an
  errors-in-variables design: ring counts derive from latent sizes, while
  the recorded measurements are noisy observations of those sizes.

Both outputs are deterministic; rerunning this script reproduces the
committed files byte for byte.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from sklearn.datasets import load_diabetes

DATA_DIR = Path(__file__).resolve().parent.parent / "src" / "uncertree" / "data"

POPULATION_SIZE = 4177
SAMPLE_SIZE = 500
POPULATION_SEED = 20240817
SAMPLE_SEED = 971

ABALONE_COLUMNS = (
    "length",
    "diameter",
    "height",
    "whole_weight",
    "shucked_weight",
    "viscera_weight",
    "shell_weight",
)


def write_csv(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(float(v)) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def make_diabetes() -> None:
    bunch = load_diabetes(scaled=False)
    header = list(bunch.feature_names) + ["target"]
    rows = np.column_stack([bunch.data, bunch.target])
    write_csv(DATA_DIR / "diabetes.csv", header, rows)
    print(f"diabetes.csv: {rows.shape[0]} rows, {rows.shape[1] - 1} features")


def make_abalone_population(rng: np.random.Generator) -> np.ndarray:
    """Latent sizes drive the ring count; recorded columns are noisy reads.

    Ring counts combine a dominant size effect, a shell-share effect that
    keeps growing with age, a competing meat-share effect and an
    interaction, so split selection matters.  Each recorded measurement is
    the latent value plus Gaussian noise at the latent spread, the
    errors-in-variables regime the uncertain predictors target; the
    amplitude and offset of the ring equation put the marginal ring
    distribution near mean 9.7, spread 3.5.
    """
    n = POPULATION_SIZE
    growth = rng.normal(0.0, 1.0, n)

    length = np.clip(0.523 + 0.118 * growth + rng.normal(0.0, 0.025, n), 0.075, 0.815)
    diameter = np.clip(0.805 * length + rng.normal(0.0, 0.012, n), 0.055, 0.65)
    height = np.clip(0.27 * length + rng.normal(0.0, 0.014, n), 0.01, 0.35)
    whole = 5.8 * length**3 * np.exp(rng.normal(0.0, 0.12, n))
    shucked = whole * 0.43 * np.exp(rng.normal(0.0, 0.09, n))
    viscera = whole * 0.22 * np.exp(rng.normal(0.0, 0.10, n))
    shell = whole * 0.29 * np.exp(rng.normal(0.0, 0.08, n))

    shell_share = shell / np.maximum(whole, 1e-9)
    meat_share = shucked / np.maximum(whole, 1e-9)
    signal = (
        14.0 * length
        + 5.0 * shell_share
        - 1.5 * (meat_share - 0.43)
        + 25.0 * (length - 0.523) * (shell_share - 0.29)
    )
    rings = -4.1 + 1.6 * signal + rng.normal(0.0, 1.6 * 1.2, n)
    rings = np.clip(np.round(rings), 1, 29)

    latent = np.column_stack([length, diameter, height, whole, shucked, viscera, shell])
    observed = np.empty_like(latent)
    for j in range(latent.shape[1]):
        scale = latent[:, j].std(ddof=1)
        observed[:, j] = latent[:, j] + rng.normal(0.0, scale, n)
    observed = np.maximum(observed, 0.001)
    return np.column_stack([np.round(observed, 6), rings])


def make_abalone() -> None:
    population = make_abalone_population(np.random.default_rng(POPULATION_SEED))
    indices = np.sort(
        np.random.default_rng(SAMPLE_SEED).choice(POPULATION_SIZE, SAMPLE_SIZE, replace=False)
    )
    sample = population[indices]
    header = list(ABALONE_COLUMNS) + ["rings"]
    write_csv(DATA_DIR / "abalone500.csv", header, sample)
    (DATA_DIR / "abalone_subsample_indices.json").write_text(
        json.dumps(
            {
                "population_seed": POPULATION_SEED,
                "sample_seed": SAMPLE_SEED,
                "population_size": POPULATION_SIZE,
                "indices": [int(i) for i in indices],
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    print(f"abalone500.csv: {sample.shape[0]} rows, {sample.shape[1] - 1} features")


def main() -> None:
    DATA_DIR.mkdir(parents=True, exist_ok=True)
    make_diabetes()
    make_abalone()


if __name__ == "__main__":
    main()
