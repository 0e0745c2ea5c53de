"""HTTP + JSON API over the store.

    POST /api/session {participant, game, set} -> {session_id, length}
    GET  /api/session/{id}/round              -> game-specific round payload
    POST /api/session/{id}/top1 {guess}       -> {true_token, correct, excluded}
    POST /api/session/{id}/compare {p}        -> {outcome, reward, score}
    GET  /api/export?game=&set=&participant=  -> JSON-lines stream
    GET  /api/stats                           -> per-participant accuracy and counts
    GET  /api/health                          -> liveness probe
    GET  /api/tokenize?text=                  -> how a guess tokenizes (client pre-validation)
"""

from __future__ import annotations

import json

from fastapi import FastAPI, HTTPException
from fastapi.responses import StreamingResponse
from pydantic import BaseModel

from lmgame.records import to_export_dicts
from lmgame.service.store import EndOfSetError, NotFoundError, Store, ValidationError


class CreateSessionBody(BaseModel):
    participant: str
    game: str
    set: str


class Top1GuessBody(BaseModel):
    guess: str


class CompareBody(BaseModel):
    p: float


def create_app(store: Store) -> FastAPI:
    app = FastAPI(title="lmgame service")
    app.state.store = store

    def _wrap(fn, *args):
        try:
            return fn(*args)
        except NotFoundError as err:
            raise HTTPException(status_code=404, detail=str(err)) from None
        except ValidationError as err:
            raise HTTPException(status_code=422, detail=str(err)) from None
        except EndOfSetError as err:
            raise HTTPException(status_code=409, detail=str(err)) from None

    @app.get("/api/health")
    def health():
        return {"status": "ok", "sets": sorted(store.sets)}

    @app.post("/api/session")
    def create_session(body: CreateSessionBody):
        if body.game not in ("top1", "compare"):
            raise HTTPException(status_code=422, detail=f"unknown game {body.game!r}")
        return _wrap(store.create_session, body.participant, body.game, body.set)

    @app.get("/api/session/{session_id}/round")
    def next_round(session_id: str):
        return _wrap(store.next_round, session_id)

    @app.post("/api/session/{session_id}/top1")
    def submit_top1(session_id: str, body: Top1GuessBody):
        return _wrap(store.submit_top1, session_id, body.guess)

    @app.post("/api/session/{session_id}/compare")
    def submit_compare(session_id: str, body: CompareBody):
        return _wrap(store.submit_compare, session_id, body.p)

    @app.get("/api/export")
    def export(game: str = "compare", set: str = "", participant: str = ""):
        set_id = set or None
        who = participant or None
        if game == "top1":
            lines = (json.dumps(g, sort_keys=True) for g in store.export_guesses(set_id, who))
        elif game == "compare":
            lines = (
                json.dumps(obj, sort_keys=True)
                for sample in store.export_ratio_samples(set_id, who)
                for obj in to_export_dicts(sample)
            )
        else:
            raise HTTPException(status_code=422, detail=f"unknown game {game!r}")
        body = (line + "\n" for line in lines)
        return StreamingResponse(body, media_type="application/x-ndjson")

    @app.get("/api/stats")
    def stats():
        return store.stats()

    @app.get("/api/tokenize")
    def tokenize(text: str = ""):
        try:
            tokens = store.tokenizer.encode(text)
        except KeyError:
            tokens = []
        return {
            "tokens": tokens,
            "single": len(tokens) == 1,
        }

    return app
