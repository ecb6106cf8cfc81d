"""HTTP service exposing the retouching pipeline.

JSON in, JSON out; images travel as base64-encoded PNG. The model is
loaded once and never mutated, so concurrent requests are safe and any
two identical requests produce byte-identical responses. Client errors
come back as 400 with a ``field`` naming the offending input, oversized
uploads as 413, and unexpected failures as 500 with an opaque id that
is also printed to the server log.
"""

from __future__ import annotations

import base64
import binascii
import secrets
import sys
import traceback
from typing import Literal, Optional

import numpy as np
from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .attributes import ATTRIBUTE_NAMES, attribute_vector
from .curves import quantize_weight_maps
from .image import ImageIOError, decode_png, encode_gray_png, encode_png
from .model import RetouchModel
from .styletext import (
    TEMPLATE,
    TERMS,
    AtpModel,
    atp_predict,
    preference_delta,
    render_text,
)

DEFAULT_MAX_IMAGE_BYTES = 8_000_000


class RetouchRequest(BaseModel):
    image: str
    mode: Literal["manual", "auto"] = "manual"
    delta: Optional[list[float]] = None
    return_weights: bool = False


class ClientError(Exception):
    """Maps to a 400 (or 413) response naming the bad field."""

    def __init__(self, message: str, field: str, status: int = 400):
        super().__init__(message)
        self.field = field
        self.status = status


def _decode_image(data: str, max_bytes: int, field: str) -> bytes:
    # '+' arrives as a space when clients forget to percent-encode query
    # strings; undo that rather than reject the request.
    try:
        raw = base64.b64decode(data.replace(" ", "+"), validate=True)
    except (binascii.Error, ValueError):
        raise ClientError("not valid base64", field) from None
    if len(raw) > max_bytes:
        raise ClientError(
            f"image is {len(raw)} bytes; the limit is {max_bytes}", field, status=413
        )
    return raw


def _attribute_payload(vec) -> dict:
    return {
        name: {"raw": float(r), "level": int(l)}
        for name, r, l in zip(ATTRIBUTE_NAMES, vec.raw, vec.levels)
    }


def create_app(model: RetouchModel, predictor: AtpModel | None = None,
               max_image_bytes: int = DEFAULT_MAX_IMAGE_BYTES) -> FastAPI:
    """Build the service around an already-loaded model snapshot."""
    app = FastAPI(title="retouchkit", docs_url=None, redoc_url=None)
    # the companion UI is typically served from a separate static-file
    # origin during development; the API carries no credentials or
    # per-user state, so a blanket allowance is safe
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(ClientError)
    async def _client_error(request: Request, exc: ClientError):
        return JSONResponse(
            status_code=exc.status,
            content={"error": str(exc), "field": exc.field},
        )

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError):
        first = exc.errors()[0]
        parts = [str(p) for p in first.get("loc", ()) if p not in ("body", "query")]
        return JSONResponse(
            status_code=400,
            content={"error": first.get("msg", "invalid request"),
                     "field": ".".join(parts) or "body"},
        )

    @app.exception_handler(Exception)
    async def _internal_error(request: Request, exc: Exception):
        failure_id = secrets.token_hex(8)
        print(f"internal error {failure_id}:", file=sys.stderr)
        traceback.print_exception(exc, file=sys.stderr)
        return JSONResponse(
            status_code=500,
            content={"error": "internal error", "id": failure_id},
        )

    @app.post("/retouch")
    def retouch(req: RetouchRequest):
        raw = _decode_image(req.image, max_image_bytes, "image")
        try:
            img = decode_png(raw, "image")
        except ImageIOError as exc:
            raise ClientError(str(exc), "image") from None

        predicted = None
        if req.mode == "manual":
            if req.delta is None:
                raise ClientError("manual mode requires delta", "delta")
            if len(req.delta) != 6:
                raise ClientError(
                    f"delta needs 6 components, got {len(req.delta)}", "delta"
                )
            delta = np.asarray(req.delta, dtype=float)
            if not np.isfinite(delta).all() or np.any(np.abs(delta) > 4.0):
                raise ClientError("delta components must lie in [-4, 4]", "delta")
            text = render_text(delta)
            levels = attribute_vector(img).levels
        else:
            if predictor is None:
                raise ClientError(
                    "auto mode needs a predictor checkpoint; start the server with --atp",
                    "mode",
                )
            levels = attribute_vector(img).levels
            predicted = atp_predict(predictor, levels)
            text = preference_delta(predicted, levels).text

        try:
            result = model.forward(img, text)
        except ValueError as exc:
            raise ClientError(str(exc), "image") from None

        weight_maps = None
        if req.return_weights:
            planes = quantize_weight_maps(result.weights)
            weight_maps = [
                base64.b64encode(encode_gray_png(plane)).decode("ascii")
                for plane in planes
            ]
        return {
            "image": base64.b64encode(encode_png(result.to_image())).decode("ascii"),
            "text": result.text,
            "attributes_in": [int(v) for v in levels],
            "predicted_target": (
                None if predicted is None else [float(v) for v in predicted]
            ),
            "weight_maps": weight_maps,
        }

    @app.get("/attributes")
    def attributes(image: str = Query(...)):
        raw = _decode_image(image, max_image_bytes, "image")
        try:
            vec = attribute_vector(decode_png(raw, "image"))
        except ImageIOError as exc:
            raise ClientError(str(exc), "image") from None
        return {
            "attributes": _attribute_payload(vec),
            "levels": [int(v) for v in vec.levels],
        }

    @app.get("/health")
    def health():
        return {"status": "ok", "model_config": model.config.to_dict()}

    @app.get("/config")
    def config():
        return {
            "model": model.config.to_dict(),
            "attributes": list(ATTRIBUTE_NAMES),
            "terms": [list(row) for row in TERMS],
            "template": TEMPLATE,
            "delta_range": [-4.0, 4.0],
            "delta_step": 0.5,
            "max_image_bytes": max_image_bytes,
            "has_predictor": predictor is not None,
        }

    return app
