"""Request and response models for the HTTP service.

The command-line front end builds the same models and calls the handlers
in-process, so these schemas are the single definition of the external
interface.
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field

FitMethod = Literal["tree", "utree", "hybrid", "rf", "urf"]


class DataPayload(BaseModel):
    """Inline dataset: feature rows, optional targets and column names."""

    X: list[list[float]]
    y: list[float] | None = None
    feature_names: list[str] | None = None
    name: str = "data"


class SigmaPolicySpec(BaseModel):
    kind: Literal["empirical_std", "half_empirical_std", "fixed"] = "empirical_std"
    values: list[float] | None = None


class NoisePayload(BaseModel):
    seed: int
    lo_frac: float = 0.1
    hi_frac: float = 0.25


class FitRequest(BaseModel):
    data: DataPayload
    method: FitMethod = "utree"
    sigma: SigmaPolicySpec = Field(default_factory=SigmaPolicySpec)
    min_leaf_fraction: float = 0.1
    max_leaves: int | None = None
    max_depth: int | None = None
    tau: int | None = None
    mtry: int | None = None
    bootstrap: bool = True
    seed: int = 0
    threads: int | None = None


class InvertibilityInfo(BaseModel):
    """Per-feature separation bounds (null marks an unbounded feature,
    i.e. an infinite bound) and whether the model's scales sit below them."""

    bounds: list[float | None]
    sigma: list[float]
    feature_ok: list[bool]
    all_ok: bool


class FitResponse(BaseModel):
    model: dict
    kind: str
    n_leaves: int | None = None
    tau: int | None = None
    training_sse: float
    invertibility: InvertibilityInfo | None = None


class PredictRequest(BaseModel):
    model: dict
    data: DataPayload


class PredictResponse(BaseModel):
    predictions: list[float]


class BenchRequest(BaseModel):
    data: DataPayload | None = None
    fixture: str | None = None
    methods: list[str]
    sigma: SigmaPolicySpec = Field(default_factory=SigmaPolicySpec)
    noise: NoisePayload | None = None
    folds: int = 5
    min_leaf_fraction: float = 0.1
    seed: int = 0
    threads: int | None = None


class BenchResponse(BaseModel):
    report: dict
    table: str


class InvertibilityRequest(BaseModel):
    model: dict
    data: DataPayload | None = None


class InvertibilityResponse(BaseModel):
    bounds: list[float | None]
    sigma: list[float]
    feature_ok: list[bool]
    all_ok: bool
    n_regions: int
    rank: int | None = None
    rank_equals_regions: bool | None = None


class HealthResponse(BaseModel):
    status: str
    version: str
