"""FastAPI application exposing the scoring wire protocol.

POST /score   {"texts": ["...", ...]} ->
              {"scores": [...], "token_counts": [...], "scorer_id": "..."}
GET  /healthz {"status": "ok"}

Malformed requests and too-short texts return 400 with a JSON error body;
inference failures return 500. /healthz never touches the inference lock.
Configuration comes from BINO_OBSERVER, BINO_PERFORMER, BINO_MAX_TOKENS and
BINO_PORT.
"""
from __future__ import annotations

import os

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from starlette.concurrency import run_in_threadpool

from .backends import load_model
from .errors import BinocularsError, TextTooShort
from .scoring import ModelPairConfig, ScoringEngine


def create_app(engine: ScoringEngine) -> FastAPI:
    app = FastAPI(title="binoculars-service", docs_url=None, redoc_url=None)
    app.state.engine = engine

    @app.get("/healthz")
    async def healthz():
        return JSONResponse({"status": "ok"})

    @app.post("/score")
    async def score(request: Request):
        try:
            doc = await request.json()
        except ValueError:
            return JSONResponse({"error": "MalformedRequest"}, status_code=400)
        texts = doc.get("texts") if isinstance(doc, dict) else None
        if not isinstance(texts, list) or not all(isinstance(t, str) for t in texts):
            return JSONResponse({"error": "MalformedRequest"}, status_code=400)
        try:
            scores, counts = await run_in_threadpool(engine.score_batch, texts)
        except TextTooShort as e:
            return JSONResponse({"error": "TextTooShort", "index": e.index},
                                status_code=400)
        except BinocularsError as e:
            return JSONResponse({"error": type(e).__name__, "detail": str(e)},
                                status_code=500)
        return JSONResponse({
            "scores": scores,
            "token_counts": counts,
            "scorer_id": engine.scorer_id,
        })

    return app


def engine_from_env() -> ScoringEngine:
    config = ModelPairConfig(
        observer_id=os.environ.get("BINO_OBSERVER", "toy:uniform"),
        performer_id=os.environ.get("BINO_PERFORMER", "toy:uniform"),
        max_tokens=int(os.environ.get("BINO_MAX_TOKENS", "512")),
        device=os.environ.get("BINO_DEVICE", "cpu"),
    )
    observer = load_model(config.observer_id, device=config.device)
    if config.performer_id == config.observer_id:
        performer = observer
    else:
        performer = load_model(config.performer_id, device=config.device)
    return ScoringEngine(config, observer, performer)


def main() -> None:
    import uvicorn

    app = create_app(engine_from_env())
    uvicorn.run(app, host="127.0.0.1", port=int(os.environ.get("BINO_PORT", "8400")))


if __name__ == "__main__":
    main()
