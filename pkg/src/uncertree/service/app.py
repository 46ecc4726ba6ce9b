"""HTTP front end over the fitting, prediction and benchmark handlers."""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from .handlers import handle_bench, handle_fit, handle_invertibility, handle_predict
from .schemas import (
    BenchRequest,
    BenchResponse,
    FitRequest,
    FitResponse,
    HealthResponse,
    InvertibilityRequest,
    InvertibilityResponse,
    PredictRequest,
    PredictResponse,
)


def create_app() -> FastAPI:
    app = FastAPI(title="uncertree", version=__version__)

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/fit", response_model=FitResponse)
    def fit(req: FitRequest) -> FitResponse:
        try:
            return handle_fit(req)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc

    @app.post("/predict", response_model=PredictResponse)
    def predict(req: PredictRequest) -> PredictResponse:
        try:
            return handle_predict(req)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc

    @app.post("/bench", response_model=BenchResponse)
    def bench(req: BenchRequest) -> BenchResponse:
        try:
            return handle_bench(req)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc

    @app.post("/diagnostics/invertibility", response_model=InvertibilityResponse)
    def invertibility(req: InvertibilityRequest) -> InvertibilityResponse:
        try:
            return handle_invertibility(req)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc

    return app


app = create_app()
