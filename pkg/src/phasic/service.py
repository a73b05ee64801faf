"""HTTP service: prediction, spectrogram retrieval, and labeled intake.

The loaded model lives in an immutable (model, version) snapshot swapped
atomically on reload, so concurrent predictions always see a consistent
pair. Dataset writes go through one lock; reads of rendered spectrograms
hit a bounded LRU cache keyed by opaque ids.
"""

from __future__ import annotations

import secrets
import threading
from collections import OrderedDict
from pathlib import Path

from fastapi import FastAPI, File, Form, Request, UploadFile
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import dsp, nn, trainer
from .dataset import (MANIFEST_VERSION, DatasetManifest, DatasetStore,
                      PhasicityLabel, parse_label)
from .dsp import StftParams
from .errors import (FormatError, PhasicError, RangeError, TooShortError,
                     UnsupportedError)

MAX_BODY_BYTES = 10 * 1024 * 1024
SPECTRO_CACHE_ENTRIES = 1024
WAV_CONTENT_TYPES = {"audio/wav", "audio/x-wav", "audio/wave", "audio/vnd.wave"}


class _LruCache:
    """Thread-safe id -> bytes cache, evicting least-recently-used."""

    def __init__(self, capacity: int):
        self._capacity = capacity
        self._items: OrderedDict[str, bytes] = OrderedDict()
        self._lock = threading.Lock()

    def put(self, key: str, value: bytes) -> None:
        with self._lock:
            self._items[key] = value
            self._items.move_to_end(key)
            while len(self._items) > self._capacity:
                self._items.popitem(last=False)

    def get(self, key: str) -> bytes | None:
        with self._lock:
            if key not in self._items:
                return None
            self._items.move_to_end(key)
            return self._items[key]


class ServiceState:
    def __init__(self, data_root: Path | str | None, model_path: Path | str | None,
                 stft: StftParams | None = None):
        self.stft = stft or StftParams()
        self.snapshot: tuple[nn.Model, str] | None = None
        self.spectrograms = _LruCache(SPECTRO_CACHE_ENTRIES)
        self.dataset_lock = threading.Lock()
        self.store: DatasetStore | None = None
        self.manifest: DatasetManifest | None = None
        if data_root is not None:
            self.store = DatasetStore(data_root)
            if self.store.manifest_path.exists():
                self.manifest = self.store.load_manifest()
            else:
                self.manifest = DatasetManifest(entries=[], version=MANIFEST_VERSION)
        if model_path is not None:
            self.load_model_file(model_path)

    def load_model_file(self, path: Path | str) -> str:
        model = trainer.load_model(path)
        version = trainer.model_fingerprint(path)
        self.snapshot = (model, version)
        return version


class _ReloadRequest(BaseModel):
    path: str


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse({"detail": message}, status_code=status)


def _spectrogram_for(state: ServiceState, clip: dsp.AudioClip, side: int) -> dsp.Spectrogram:
    return dsp.clip_to_input(clip, state.stft, side)


def create_app(data_root: Path | str | None = None,
               model_path: Path | str | None = None,
               stft: StftParams | None = None,
               static_dir: Path | str | None = None) -> FastAPI:
    state = ServiceState(data_root, model_path, stft)
    app = FastAPI(title="phasic", docs_url=None, redoc_url=None)
    app.state.phasic = state

    @app.get("/api/v1/health")
    def health():
        return {"status": "ok"}

    @app.get("/api/v1/model")
    def model_info():
        snap = state.snapshot
        if snap is None:
            return _error(503, "no model loaded")
        model, version = snap
        return {"version": version, "input_side": model.input_side,
                "classes": [label.name for label in PhasicityLabel]}

    @app.post("/api/v1/predict")
    async def predict(request: Request):
        content_type = (request.headers.get("content-type") or "")
        content_type = content_type.split(";")[0].strip().lower()
        if content_type not in WAV_CONTENT_TYPES:
            return _error(415, f"expected audio/wav, got {content_type or 'nothing'}")
        body = await request.body()
        if len(body) > MAX_BODY_BYTES:
            return _error(413, f"body exceeds {MAX_BODY_BYTES} bytes")
        snap = state.snapshot
        if snap is None:
            return _error(503, "no model loaded")
        model, version = snap
        try:
            clip = dsp.decode_wav(body)
            spec = _spectrogram_for(state, clip, model.input_side)
        except (FormatError, UnsupportedError, TooShortError, RangeError) as exc:
            return _error(400, str(exc))
        probs, _ = nn.forward(model, spec)
        label = PhasicityLabel(int(probs.argmax())).name
        sid = secrets.token_hex(16)
        state.spectrograms.put(sid, dsp.spectrogram_to_png(spec))
        return {"label": label,
                "probabilities": [float(p) for p in probs],
                "model_version": version,
                "spectrogram_id": sid}

    @app.post("/api/v1/recordings")
    async def submit_recording(file: UploadFile = File(...), label: str = Form(...),
                               artery: str | None = Form(None)):
        try:
            parsed = parse_label(label)
        except RangeError as exc:
            return _error(422, str(exc))
        data = await file.read()
        if len(data) > MAX_BODY_BYTES:
            return _error(413, f"file exceeds {MAX_BODY_BYTES} bytes")
        try:
            clip = dsp.decode_wav(data)
        except (FormatError, UnsupportedError, RangeError) as exc:
            return _error(400, str(exc))
        if state.store is None or state.manifest is None:
            return _error(503, "service started without a dataset root")
        try:
            with state.dataset_lock:
                entry = state.store.add_entry(state.manifest, clip, parsed,
                                              artery=artery, source="ui_upload")
        except PhasicError as exc:
            return _error(500, str(exc))
        snap = state.snapshot
        side = snap[0].input_side if snap else dsp.DEFAULT_SIDE
        try:
            spec = _spectrogram_for(state, clip, side)
            state.spectrograms.put(entry.id, dsp.spectrogram_to_png(spec))
        except PhasicError:
            pass  # too-short uploads are stored but have no preview
        return JSONResponse({"id": entry.id}, status_code=201)

    @app.get("/api/v1/spectrogram/{sid}")
    def get_spectrogram(sid: str):
        png = state.spectrograms.get(sid)
        if png is None:
            return _error(404, f"unknown spectrogram id {sid!r}")
        return Response(content=png, media_type="image/png")

    @app.post("/api/v1/admin/reload-model")
    def reload_model(body: _ReloadRequest):
        try:
            version = state.load_model_file(body.path)
        except PhasicError as exc:
            return _error(400, str(exc))
        return {"version": version}

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True),
                  name="static")
    return app
