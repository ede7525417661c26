"""HTTP gateway: query upload, ROI matching against a prior query, image
serving and index stats.

The index is shared read-only across handlers. Completed queries live in a
bounded LRU session store so ROI matching can reference a prior query by
id without re-uploading the image. Errors are always JSON of the shape
{"error": message}.
"""

from __future__ import annotations

import io
import json
import logging
import threading
import time
from collections import OrderedDict
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from fastapi import FastAPI, File, Form, HTTPException, Request, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.responses import HTMLResponse, JSONResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .barcode import ActivationVector
from .imagecore import GrayImage, ImageFormatError, Roi, decode_grayscale, load_grayscale
from .retrieval import (
    RetrievalIndex,
    RetrievalResult,
    query_codes,
    query_fingerprint,
    retrieve,
)
from .roimatch import matches_to_json, roi_match

log = logging.getLogger("radbar.server")

DEFAULT_MAX_UPLOAD = 16 * 1024 * 1024
DEFAULT_SESSION_CAPACITY = 256

_MEDIA_TYPES = {
    ".pgm": "image/x-portable-graymap",
    ".png": "image/png",
}


@dataclass(frozen=True)
class QuerySession:
    """One completed query: the uploaded image and its retrieval result."""

    query_id: str
    image: GrayImage
    result: RetrievalResult
    created_at: float


class SessionStore:
    """Thread-safe bounded mapping with least-recently-used eviction."""

    def __init__(self, capacity: int = DEFAULT_SESSION_CAPACITY) -> None:
        if capacity < 1:
            raise ValueError("session capacity must be >= 1")
        self._capacity = capacity
        self._lock = threading.Lock()
        self._items: OrderedDict[str, QuerySession] = OrderedDict()

    def put(self, session: QuerySession) -> None:
        with self._lock:
            # Re-inserting the same deterministic id is an idempotent refresh.
            self._items.pop(session.query_id, None)
            self._items[session.query_id] = session
            while len(self._items) > self._capacity:
                self._items.popitem(last=False)

    def get(self, query_id: str) -> QuerySession | None:
        with self._lock:
            session = self._items.get(query_id)
            if session is not None:
                self._items.move_to_end(query_id)
            return session

    def __len__(self) -> int:
        with self._lock:
            return len(self._items)


class RoiBody(BaseModel):
    x: int
    y: int
    w: int
    h: int


class RoiMatchBody(BaseModel):
    query_id: str
    roi: RoiBody
    target_ids: list[str] = Field(default_factory=list)


_FALLBACK_PAGE = """<!doctype html>
<html><head><title>radbar</title></head>
<body><h1>radbar retrieval service</h1>
<p>No UI assets were configured (start with --static). The JSON API lives
under <code>/api/</code>: try <a href="/api/index/stats">/api/index/stats</a>.</p>
</body></html>
"""


def create_app(
    index: RetrievalIndex,
    static_dir: str | Path | None = None,
    max_upload_bytes: int = DEFAULT_MAX_UPLOAD,
    session_capacity: int = DEFAULT_SESSION_CAPACITY,
) -> FastAPI:
    app = FastAPI(title="radbar", docs_url=None, redoc_url=None)
    sessions = SessionStore(session_capacity)
    app.state.index = index
    app.state.sessions = sessions
    app.state.max_upload_bytes = max_upload_bytes

    @app.exception_handler(HTTPException)
    async def http_error(request: Request, exc: HTTPException) -> JSONResponse:
        return JSONResponse(status_code=exc.status_code, content={"error": str(exc.detail)})

    @app.exception_handler(RequestValidationError)
    async def validation_error(request: Request, exc: RequestValidationError) -> JSONResponse:
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.post("/api/query")
    async def api_query(
        image: UploadFile = File(...),
        k1: int | None = Form(None),
        k2: int | None = Form(None),
        activations: str | None = Form(None),
    ) -> JSONResponse:
        data = await image.read()
        if len(data) > app.state.max_upload_bytes:
            raise HTTPException(
                status_code=413,
                detail=(
                    f"upload of {len(data)} bytes exceeds the "
                    f"{app.state.max_upload_bytes} byte limit"
                ),
            )
        try:
            query_image = decode_grayscale(data, name=image.filename or "<upload>")
        except ImageFormatError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        vector = None
        if activations is not None:
            try:
                values = json.loads(activations)
                vector = ActivationVector.from_values(np.asarray(values, dtype=np.float64))
            except (json.JSONDecodeError, TypeError, ValueError) as exc:
                raise HTTPException(
                    status_code=400, detail=f"bad activations part: {exc}"
                ) from exc
        eff_k1 = index.config.k1 if k1 is None else k1
        eff_k2 = index.config.k2 if k2 is None else k2
        if eff_k1 < 1 or eff_k2 < 1:
            raise HTTPException(status_code=400, detail="k1 and k2 must be >= 1")
        try:
            cnnc, rbc = query_codes(index, query_image, vector)
            query_id = query_fingerprint(data, cnnc, eff_k1, eff_k2)
            result = retrieve(
                index,
                query_image,
                vector,
                k1=eff_k1,
                k2=eff_k2,
                query_id=query_id,
            )
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        sessions.put(
            QuerySession(
                query_id=query_id,
                image=query_image,
                result=result,
                created_at=time.time(),
            )
        )
        log.info("query %s: %d hits", query_id, len(result.hits))
        return JSONResponse(result.to_json_dict())

    @app.post("/api/roi-match")
    async def api_roi_match(body: RoiMatchBody) -> JSONResponse:
        session = sessions.get(body.query_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown query_id {body.query_id!r}")
        try:
            roi = Roi(x=body.roi.x, y=body.roi.y, w=body.roi.w, h=body.roi.h)
            roi.check_within(session.image.width, session.image.height)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        targets = []
        for target_id in body.target_ids:
            entry = index.get(target_id)
            if entry is None:
                raise HTTPException(status_code=404, detail=f"unknown target id {target_id!r}")
            targets.append((target_id, entry.path))
        loaded: list[tuple[str, GrayImage]] = []
        failures: dict[str, str] = {}
        for target_id, path in targets:
            try:
                loaded.append((target_id, load_grayscale(path)))
            except ImageFormatError as exc:
                failures[target_id] = str(exc)
        matches = matches_to_json(roi_match(session.image, roi, loaded))
        by_id = {m["target_image_id"]: m for m in matches}
        ordered = []
        for target_id, _ in targets:
            if target_id in failures:
                ordered.append({"target_image_id": target_id, "error": failures[target_id]})
            else:
                ordered.append(by_id[target_id])
        return JSONResponse({"matches": ordered})

    @app.get("/api/images/{image_id}")
    def api_image(image_id: str, format: str | None = None) -> Response:
        entry = index.get(image_id)
        if entry is None:
            raise HTTPException(status_code=404, detail=f"unknown image id {image_id!r}")
        path = Path(entry.path)
        if not path.is_file():
            raise HTTPException(status_code=404, detail=f"image file missing for {image_id!r}")
        if format == "png":
            # Browsers cannot render PGM; re-encode on request for the UI.
            from PIL import Image

            img = load_grayscale(path)
            buf = io.BytesIO()
            arr = np.rint(img.pixels * 255.0).astype(np.uint8)
            Image.fromarray(arr, mode="L").save(buf, format="PNG")
            return Response(content=buf.getvalue(), media_type="image/png")
        media = _MEDIA_TYPES.get(path.suffix.lower(), "application/octet-stream")
        return Response(content=path.read_bytes(), media_type=media)

    @app.get("/api/index/stats")
    def api_stats() -> JSONResponse:
        return JSONResponse(
            {
                "entry_count": len(index),
                "cnnc_bits": index.config.cnnc_dim,
                "rbc_bits": index.config.rbc_bits,
                "config": index.config.to_json_dict(),
            }
        )

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")
    else:
        @app.get("/", response_class=HTMLResponse)
        def root() -> str:
            return _FALLBACK_PAGE

    return app
