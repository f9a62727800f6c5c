"""HTTP service: POST /embed, POST /generate, GET /health.

Wire protocol:
  /embed     {"texts": [...]}            -> {"embeddings": [[...], ...], "dim": d}
  /generate  {"prompts": [...], "k": n}  -> {"results": [{"candidates":
                                              [{"text", "score", "rank"}, ...]}, ...]}
  /health                                 -> {"status", "embedder", "generator", "dim"}

Malformed requests get 400 with a reason; backend failures get 500.
"""

import logging

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .embedders import HashEmbedder
from .generators import TemplateGenerator

log = logging.getLogger(__name__)


class EmbedRequest(BaseModel):
    texts: list[str]


class GenerateRequest(BaseModel):
    prompts: list[str]
    k: int = Field(gt=0)


def create_app(embedder=None, generator=None) -> FastAPI:
    embedder = embedder if embedder is not None else HashEmbedder()
    generator = generator if generator is not None else TemplateGenerator()
    app = FastAPI(title="kbmap-sidecar")

    @app.exception_handler(RequestValidationError)
    async def handle_validation(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    @app.post("/embed")
    def embed(request: EmbedRequest):
        try:
            vectors = embedder.embed(request.texts)
        except Exception as exc:
            log.exception("embedder failed")
            return JSONResponse(status_code=500, content={"detail": str(exc)})
        return {"embeddings": vectors, "dim": embedder.dim}

    @app.post("/generate")
    def generate(request: GenerateRequest):
        try:
            results = generator.generate(request.prompts, request.k)
        except Exception as exc:
            log.exception("generator failed")
            return JSONResponse(status_code=500, content={"detail": str(exc)})
        return {"results": [{"candidates": candidates} for candidates in results]}

    @app.get("/health")
    def health():
        return {
            "status": "ok",
            "embedder": embedder.name,
            "generator": generator.name,
            "dim": embedder.dim,
        }

    return app
