"""FastAPI app implementing the /v1/transform wire protocol.

Request:  POST /v1/transform {kind, params, items: [{id, text}]}
Response: {items: [{id, text? | vector? | logprob?}], dim?}
Heath:    GET /healthz -> 200 "ok"
"""

from __future__ import annotations

from typing import Literal

from fastapi import FastAPI
from fastapi.responses import PlainTextResponse
from pydantic import BaseModel, Field, field_validator

from .backends import Backends
from .config import ShimConfig


class TransformItem(BaseModel):
    id: str
    text: str


class TransformPayload(BaseModel):
    kind: Literal["translate", "simplify", "embed", "logprob"]
    params: dict = Field(default_factory=dict)
    items: list[TransformItem] = Field(min_length=1)

    @field_validator("items")
    @classmethod
    def unique_ids(cls, items):
        ids = [i.id for i in items]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate item ids")
        return items


def create_app(config: ShimConfig | None = None) -> FastAPI:
    """Build the service; raises ShimStartupError when a backend cannot load."""
    config = config or ShimConfig()
    backends = Backends(config)
    app = FastAPI(title="mtcorpus-shim", version="0.1.0")
    app.state.config = config

    @app.get("/healthz", response_class=PlainTextResponse)
    def healthz() -> str:
        return "ok"

    @app.post("/v1/transform")
    def transform(payload: TransformPayload) -> dict:
        items = []
        for item in payload.items:
            out: dict = {"id": item.id}
            if payload.kind == "translate":
                out["text"] = backends.translate(item.text)
            elif payload.kind == "simplify":
                out["text"] = backends.simplify(item.text)
            elif payload.kind == "embed":
                out["vector"] = backends.embed(item.text)
            else:
                out["logprob"] = backends.logprob(item.text)
            items.append(out)
        resp: dict = {"items": items}
        if payload.kind == "embed":
            resp["dim"] = config.embed_dim
        return resp

    return app
