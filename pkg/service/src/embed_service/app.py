"""The HTTP app.

POST /embed {"texts": [str]} -> {"dim": int, "embeddings": [[float]]}
GET  /health                 -> {"status": "ok", "model": str, "dim": int}

400 on empty or oversized batches and on empty strings; 503 until the
encoder has loaded. Responses preserve input order and vectors are always
L2-normalized. Inference is serialized behind a lock so concurrent requests
stay deterministic.
"""

import logging
import threading
from contextlib import asynccontextmanager

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .config import ServiceConfig
from .encoders import load_encoder

logger = logging.getLogger(__name__)


class EmbedRequest(BaseModel):
    texts: list[str]


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig.from_env()

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        logger.info("loading encoder %r", config.model)
        app.state.encoder = load_encoder(config.model)
        logger.info("encoder ready: %s (dim %d)", app.state.encoder.name,
                    app.state.encoder.dim)
        yield

    app = FastAPI(title="embed-service", lifespan=lifespan)
    app.state.encoder = None
    app.state.config = config
    app.state.infer_lock = threading.Lock()

    def encoder_or_503():
        encoder = app.state.encoder
        if encoder is None:
            raise HTTPException(status_code=503, detail="model not loaded")
        return encoder

    @app.get("/health")
    def health():
        encoder = encoder_or_503()
        return {"status": "ok", "model": encoder.name, "dim": encoder.dim}

    @app.post("/embed")
    def embed(request: EmbedRequest):
        encoder = encoder_or_503()
        texts = request.texts
        if not texts:
            raise HTTPException(status_code=400, detail="texts must be non-empty")
        if len(texts) > config.max_batch:
            raise HTTPException(
                status_code=400,
                detail=f"batch of {len(texts)} exceeds max {config.max_batch}")
        if any(not text for text in texts):
            raise HTTPException(status_code=400, detail="texts must not be empty")
        with app.state.infer_lock:
            vectors = encoder.encode(texts)
        return {"dim": encoder.dim, "embeddings": vectors.tolist()}

    return app
