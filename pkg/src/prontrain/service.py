"""HTTP analysis service: the live practice backend.

Audio is uploaded as base64 WAV (optionally gzip-compressed; detected by
magic bytes) and analyzed server-side; results append to a per-session
history in an embedded sqlite store so trajectories survive restarts.
A session is bound to one sentence: the first analyze call fixes it.

Error bodies are {"code": ..., "message": ...}.
"""

from __future__ import annotations

import base64
import gzip
import io
import json
import threading
import time
import uuid
import sqlite3
from pathlib import Path

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import FileResponse, JSONResponse
from pydantic import BaseModel

from .audio import read_wav
from .container import ModelContainer
from .pipeline import AnalysisError, SCHEMA_VERSION, analyze_clip

DEFAULT_SENTENCES = [
    {"sentence_id": "s1", "text": "This was easy for us.", "model_audio_ref": None},
    {"sentence_id": "s2", "text": "She had your dark suit in greasy wash water all year.",
     "model_audio_ref": None},
    {"sentence_id": "s3", "text": "Don't ask me to carry an oily rag like that.",
     "model_audio_ref": None},
]


class AnalyzeRequest(BaseModel):
    session_id: str
    sentence_id: str
    audio_base64: str


class SessionStore:
    """Append-only result log in a single sqlite file; appends are
    serialized by a process-wide lock."""

    def __init__(self, path: str | Path):
        self.path = str(path)
        self._lock = threading.Lock()
        with self._connect() as conn:
            conn.execute(
                "CREATE TABLE IF NOT EXISTS results ("
                " session_id TEXT NOT NULL,"
                " seq INTEGER NOT NULL,"
                " sentence_id TEXT NOT NULL,"
                " result_id TEXT NOT NULL,"
                " timestamp_ns INTEGER NOT NULL,"
                " payload TEXT NOT NULL,"
                " PRIMARY KEY (session_id, seq))"
            )

    def _connect(self):
        return sqlite3.connect(self.path)

    def append(self, session_id: str, sentence_id: str, payload: dict) -> dict:
        with self._lock, self._connect() as conn:
            row = conn.execute(
                "SELECT MAX(seq), MAX(timestamp_ns) FROM results WHERE session_id = ?",
                (session_id,),
            ).fetchone()
            seq = (row[0] + 1) if row[0] is not None else 0
            ts = max(time.time_ns(), (row[1] or 0) + 1)
            result = {
                "result_id": uuid.uuid4().hex,
                "sentence_id": sentence_id,
                "timestamp_ns": ts,
                **payload,
            }
            conn.execute(
                "INSERT INTO results VALUES (?, ?, ?, ?, ?, ?)",
                (session_id, seq, sentence_id, result["result_id"], ts,
                 json.dumps(payload, sort_keys=True)),
            )
        return result

    def sentence_of(self, session_id: str) -> str | None:
        with self._connect() as conn:
            row = conn.execute(
                "SELECT sentence_id FROM results WHERE session_id = ? ORDER BY seq LIMIT 1",
                (session_id,),
            ).fetchone()
        return row[0] if row else None

    def history(self, session_id: str) -> list[dict]:
        with self._connect() as conn:
            rows = conn.execute(
                "SELECT seq, sentence_id, result_id, timestamp_ns, payload "
                "FROM results WHERE session_id = ? ORDER BY seq",
                (session_id,),
            ).fetchall()
        return [
            {"result_id": r[2], "sentence_id": r[1], "timestamp_ns": r[3],
             **json.loads(r[4])}
            for r in rows
        ]


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message})


def load_sentences(path: str | Path | None) -> list[dict]:
    if path is None:
        return DEFAULT_SENTENCES
    with open(path) as fh:
        return json.load(fh)


def create_app(
    container_path: str | Path | None,
    store_path: str | Path,
    sentences_path: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="prontrain")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"],
    )
    store = SessionStore(store_path)
    sentences = load_sentences(sentences_path)
    by_id = {s["sentence_id"]: s for s in sentences}
    container: ModelContainer | None = None
    if container_path is not None and Path(container_path).exists():
        container = ModelContainer.load(container_path)

    @app.post("/api/analyze")
    def analyze(req: AnalyzeRequest):
        if container is None or container.scorer is None:
            return _error(503, "model_not_loaded", "no model container is loaded")
        if req.sentence_id not in by_id:
            return _error(404, "unknown_sentence", f"no sentence {req.sentence_id!r}")
        bound = store.sentence_of(req.session_id)
        if bound is not None and bound != req.sentence_id:
            return _error(400, "sentence_mismatch",
                          f"session {req.session_id!r} is bound to sentence {bound!r}")
        try:
            raw = base64.b64decode(req.audio_base64, validate=True)
            if raw[:2] == b"\x1f\x8b":
                raw = gzip.decompress(raw)
            clip = read_wav(io.BytesIO(raw))
        except Exception:
            return _error(400, "undecodable_audio", "could not decode the audio payload")
        try:
            payload = analyze_clip(clip, container)
        except AnalysisError as exc:
            return _error(400, exc.code, exc.message)
        result = store.append(req.session_id, req.sentence_id, payload.to_dict())
        return result

    @app.get("/api/sentences")
    def list_sentences():
        return [
            {"sentence_id": s["sentence_id"], "text": s["text"],
             "has_model_audio": bool(s.get("model_audio_ref"))}
            for s in sentences
        ]

    @app.get("/api/model_audio/{sentence_id}")
    def model_audio(sentence_id: str):
        entry = by_id.get(sentence_id)
        if entry is None:
            return _error(404, "unknown_sentence", f"no sentence {sentence_id!r}")
        ref = entry.get("model_audio_ref")
        if not ref or not Path(ref).exists():
            return _error(404, "no_model_audio",
                          f"sentence {sentence_id!r} has no exemplar recording")
        return FileResponse(ref, media_type="audio/wav")

    @app.get("/api/session/{session_id}")
    def session(session_id: str):
        results = store.history(session_id)
        return {
            "schema_version": SCHEMA_VERSION,
            "session_id": session_id,
            "sentence_id": results[0]["sentence_id"] if results else None,
            "results": results,
        }

    return app
