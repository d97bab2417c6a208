"""FastAPI application exposing the experiment service."""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from cttfed import __version__
from cttfed.errors import ConfigError, CttError, NumericalError, PrivacyAuditError
from cttfed.service import handlers, schemas

HTTP_STATUS = {
    ConfigError: 422,
    NumericalError: 500,
    PrivacyAuditError: 409,
}


def create_app() -> FastAPI:
    app = FastAPI(title="cttfed service", version=__version__)

    @app.exception_handler(CttError)
    async def ctt_error_handler(_: Request, exc: CttError) -> JSONResponse:
        status = HTTP_STATUS.get(type(exc), 500)
        body = schemas.ErrorBody(
            error=type(exc).__name__, detail=str(exc), exit_code=exc.exit_code
        )
        return JSONResponse(status_code=status, content=body.model_dump())

    @app.exception_handler(ValueError)
    async def value_error_handler(_: Request, exc: ValueError) -> JSONResponse:
        # bad shapes, malformed files and similar input problems map to config errors
        body = schemas.ErrorBody(error="ConfigError", detail=str(exc), exit_code=2)
        return JSONResponse(status_code=422, content=body.model_dump())

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.post("/gen", response_model=schemas.GenResponse)
    def gen(req: schemas.GenRequest) -> schemas.GenResponse:
        return handlers.handle_gen(req)

    @app.post("/run", response_model=schemas.RunResponse)
    def run(req: schemas.RunRequest) -> schemas.RunResponse:
        return handlers.handle_run(req)

    @app.post("/sweep", response_model=schemas.SweepResponse)
    def sweep(req: schemas.SweepRequest) -> schemas.SweepResponse:
        return handlers.handle_sweep(req)

    @app.post("/classify", response_model=schemas.ClassifyResponse)
    def classify(req: schemas.ClassifyRequest) -> schemas.ClassifyResponse:
        return handlers.handle_classify(req)

    @app.post("/topology", response_model=schemas.TopologyResponse)
    def topology(req: schemas.TopologyRequest) -> schemas.TopologyResponse:
        return handlers.handle_topology(req)

    return app


app = create_app()
