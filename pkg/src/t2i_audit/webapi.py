"""HTTP backend for human expert validation.

Serves the prioritized queue, image bytes and the coding scheme; ingests
expert codes. Coders are blinded by construction: no response ever
contains ensemble codes, entropy values (beyond the priority label), or
another coder's submissions. Auth is a shared study token in the
X-Study-Token header plus a per-coder id; this is a two-coder lab tool,
not a public service.
"""
from __future__ import annotations

import threading
import time
from collections import defaultdict
from pathlib import Path

from fastapi import Depends, FastAPI, Header, HTTPException
from fastapi.responses import HTMLResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .coding import CodingScheme, default_scheme, validate_human_codes
from .design import StudyConfig
from .pipeline import load_expert_records, load_images
from .store import EXPERT_LOG, StudyStore

PLACEHOLDER_PAGE = """<!doctype html>
<html><head><title>validation service</title></head>
<body><h1>Validation API is running</h1>
<p>The browser UI has not been built. Build it under frontend/ and serve
with --ui-dist, or drive the JSON API directly (see /docs).</p></body></html>
"""


class SessionRequest(BaseModel):
    coder_id: str = Field(min_length=1, max_length=64)
    display_name: str = ""


class CodeSubmission(BaseModel):
    cell_id: str
    coder_id: str
    political_symbols: int
    cultural_symbols: int
    flag_appearance: int
    sovereignty: int
    modernity: int
    note: str = ""


def create_app(store: StudyStore, config: StudyConfig, token: str,
               preregister: list[str] | None = None,
               scheme: CodingScheme | None = None,
               ui_dist: Path | None = None) -> FastAPI:
    scheme = scheme or default_scheme()
    app = FastAPI(title="validation service", docs_url="/docs")
    cell_locks: dict[str, threading.Lock] = defaultdict(threading.Lock)
    locks_guard = threading.Lock()

    sessions = {s["coder_id"]: s for s in store.read_sessions()}
    for coder_id in preregister or []:
        if coder_id not in sessions:
            sessions[coder_id] = {"coder_id": coder_id, "display_name": coder_id,
                                  "started_at": _now()}
    store.write_sessions(sorted(sessions.values(), key=lambda s: s["coder_id"]))

    def require_token(x_study_token: str = Header(default="")) -> None:
        if x_study_token != token:
            raise HTTPException(status_code=401, detail="missing or wrong study token")

    def queue_entries() -> list[dict]:
        doc = store.read_queue()
        if not doc or not doc.get("entries"):
            raise HTTPException(status_code=409,
                                detail="validation queue not built; run the sample stage")
        return doc["entries"]

    def latest_expert_codes() -> dict[tuple[str, str], object]:
        return load_expert_records(store)

    @app.post("/api/session", dependencies=[Depends(require_token)])
    def register_session(req: SessionRequest) -> dict:
        if req.coder_id in sessions:
            return {"coder_id": req.coder_id, "existing": True,
                    "started_at": sessions[req.coder_id]["started_at"]}
        sessions[req.coder_id] = {"coder_id": req.coder_id,
                                  "display_name": req.display_name or req.coder_id,
                                  "started_at": _now()}
        store.write_sessions(sorted(sessions.values(), key=lambda s: s["coder_id"]))
        return {"coder_id": req.coder_id, "existing": False,
                "started_at": sessions[req.coder_id]["started_at"]}

    @app.get("/api/scheme", dependencies=[Depends(require_token)])
    def get_scheme() -> dict:
        return {
            "version": scheme.version,
            "dimensions": [
                {
                    "id": d.id,
                    "kind": d.kind,
                    "min": d.min,
                    "max": d.max,
                    "label": d.label,
                    "level_descriptions": dict(d.level_descriptions),
                }
                for d in scheme.dimensions
            ],
        }

    @app.get("/api/queue", dependencies=[Depends(require_token)])
    def get_queue(coder: str) -> list[dict]:
        if coder not in sessions:
            raise HTTPException(status_code=404, detail=f"unknown coder {coder!r}")
        done = {cell for (cell, who) in latest_expert_codes() if who == coder}
        out = []
        for position, entry in enumerate(queue_entries()):
            if entry["cell_id"] in done:
                continue
            out.append({
                "cell_id": entry["cell_id"],
                "priority": entry["priority"],
                "position": position,
                "image_url": f"/api/images/{entry['cell_id']}",
            })
        return out

    @app.get("/api/images/{cell_id}", dependencies=[Depends(require_token)])
    def get_image(cell_id: str) -> Response:
        images = load_images(store)
        if cell_id not in images:
            raise HTTPException(status_code=404, detail=f"no image for cell {cell_id!r}")
        record = images[cell_id]
        data = store.get_image_bytes(record.image_ref)
        suffix = store.image_path(record.image_ref).suffix.lstrip(".") or "png"
        return Response(content=data, media_type=f"image/{suffix}")

    @app.post("/api/codes", dependencies=[Depends(require_token)])
    def submit_code(sub: CodeSubmission) -> dict:
        if sub.coder_id not in sessions:
            raise HTTPException(status_code=404, detail=f"unknown coder {sub.coder_id!r}")
        queued = {e["cell_id"] for e in queue_entries()}
        if sub.cell_id not in queued:
            raise HTTPException(status_code=404,
                                detail=f"cell {sub.cell_id!r} is not in the validation queue")
        codes = {d.id: getattr(sub, d.id) for d in scheme.dimensions}
        bad = validate_human_codes(codes, scheme)
        if bad:
            raise HTTPException(status_code=422,
                                detail={"out_of_range_dimensions": bad})
        with locks_guard:
            lock = cell_locks[sub.cell_id]
        with lock:
            record = {
                "cell_id": sub.cell_id,
                "coder_id": sub.coder_id,
                "coder_kind": "human",
                **codes,
                "confidence": 1.0,
                "prompt_version": config.prompt_template_version,
                "valid": True,
                "note": sub.note,
                "submitted_at": _now(),
            }
            store.append(EXPERT_LOG, record)
        return {"stored": True, "cell_id": sub.cell_id, "coder_id": sub.coder_id}

    @app.get("/api/progress", dependencies=[Depends(require_token)])
    def get_progress() -> dict:
        entries = queue_entries()
        expert_codes = latest_expert_codes()
        registered = sorted(sessions)
        per_coder = {}
        for coder in registered:
            coded = {cell for (cell, who) in expert_codes if who == coder}
            per_coder[coder] = {
                "completed": sum(1 for e in entries if e["cell_id"] in coded),
                "remaining": sum(1 for e in entries if e["cell_id"] not in coded),
            }
        counts = {"pending": 0, "partially_coded": 0, "complete": 0}
        for e in entries:
            coders_done = sum(1 for coder in registered
                              if (e["cell_id"], coder) in expert_codes)
            if coders_done == 0:
                counts["pending"] += 1
            elif coders_done < len(registered) or not registered:
                counts["partially_coded"] += 1
            else:
                counts["complete"] += 1
        return {"per_coder": per_coder, "overall": {**counts, "total": len(entries)}}

    if ui_dist is not None and ui_dist.is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dist), html=True), name="ui")
    else:
        @app.get("/", response_class=HTMLResponse)
        def index() -> str:
            return PLACEHOLDER_PAGE

    return app


def _now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
