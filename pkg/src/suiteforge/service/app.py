"""FastAPI application exposing the pipeline stages.

Errors surface as structured records: every handled failure returns
``{"error": {"kind", "message", "context"}}`` with a status code mapped
from the error taxonomy, which thin clients translate into exit codes.
"""

from __future__ import annotations

import logging

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import (
    BackendUnavailable,
    GroundTruthDefect,
    ProviderError,
    SchemaError,
    SuiteforgeError,
)
from . import models, ops

log = logging.getLogger(__name__)

_STATUS_BY_KIND = {
    SchemaError: 422,
    GroundTruthDefect: 409,
    ProviderError: 502,
    BackendUnavailable: 502,
}


def _http_status(exc: SuiteforgeError) -> int:
    for klass, status in _STATUS_BY_KIND.items():
        if isinstance(exc, klass):
            return status
    return 400


def create_app() -> FastAPI:
    app = FastAPI(
        title="suiteforge",
        version=__version__,
        description="Benchmark test-suite hardening and differential "
                    "code evaluation service",
    )

    @app.exception_handler(SuiteforgeError)
    async def handle_suiteforge_error(request: Request, exc: SuiteforgeError):
        log.warning("%s: %s", exc.kind, exc.message)
        return JSONResponse(
            status_code=_http_status(exc),
            content={"error": exc.to_record()},
        )

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.post("/seed", response_model=models.SeedResponse)
    def seed(req: models.SeedRequest) -> models.SeedResponse:
        return ops.op_seed(req)

    @app.post("/generate", response_model=models.GenerateResponse)
    def generate(req: models.GenerateRequest) -> models.GenerateResponse:
        return ops.op_generate(req)

    @app.post("/evaluate", response_model=models.EvaluateResponse)
    def evaluate(req: models.EvaluateRequest) -> models.EvaluateResponse:
        return ops.op_evaluate(req)

    @app.post("/cross-check", response_model=models.CrossCheckResponse)
    def cross_check(req: models.CrossCheckRequest) -> models.CrossCheckResponse:
        return ops.op_cross_check(req)

    @app.post("/render-report", response_model=models.RenderResponse)
    def render(req: models.RenderRequest) -> models.RenderResponse:
        return ops.op_render(req)

    return app
