"""Embedded HTTP API for the human-in-the-loop review workflow.

Frames are uploaded as RF container zips and addressed by content hash.
Segmentation and feature endpoints recompute on demand through the same
pipeline functions as the CLI, memoized in a content-addressed cache keyed
by (frame hash, parameters), so repeated slider-driven requests are cheap
and prior results are never mutated.
"""

from __future__ import annotations

import hashlib
import io
import tempfile
import threading
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Request, Response, UploadFile
from fastapi.middleware.cors import CORSMiddleware

from .classify import built_in_profile
from .frame_io import CalibrationSet, FrameFormatError, RFFrame, detect_envelope, form_bmode, load_rf_frame
from .pipeline import PipelineConfig, analyze_roi, compute_residue, roi_payload, segment_residue
from .spectral import parameter_images

PROFILE_NAMES = ("spectral", "morphometric", "combined")


class SessionStore:
    """In-memory frames plus a cache of derived results."""

    def __init__(self):
        self.frames: dict[str, RFFrame] = {}
        self._cache: dict[tuple, object] = {}
        self._lock = threading.Lock()

    def add_frame(self, payload: bytes) -> str:
        frame_id = hashlib.sha256(payload).hexdigest()[:16]
        with self._lock:
            if frame_id not in self.frames:
                with tempfile.NamedTemporaryFile(suffix=".zip") as tmp:
                    tmp.write(payload)
                    tmp.flush()
                    self.frames[frame_id] = load_rf_frame(Path(tmp.name))
        return frame_id

    def get_frame(self, frame_id: str) -> RFFrame:
        frame = self.frames.get(frame_id)
        if frame is None:
            raise HTTPException(status_code=404, detail=f"unknown frame '{frame_id}'")
        return frame

    def memo(self, key: tuple, compute):
        with self._lock:
            if key in self._cache:
                return self._cache[key]
        value = compute()
        with self._lock:
            self._cache.setdefault(key, value)
            return self._cache[key]


def _png_bytes(pixels: np.ndarray) -> bytes:
    from PIL import Image

    buf = io.BytesIO()
    Image.fromarray(pixels.astype(np.uint8), mode="L").save(buf, format="PNG")
    return buf.getvalue()


def _threshold_key(threshold) -> str:
    return "otsu" if threshold is None else repr(float(threshold))


def create_app(calibration: CalibrationSet | None = None, config: PipelineConfig | None = None) -> FastAPI:
    if config is None:
        config = PipelineConfig()
    if calibration is None:
        calibration = CalibrationSet.flat(*config.spectral.band_hz)
    store = SessionStore()
    app = FastAPI(title="sonoseg review service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.store = store

    def residue_of(frame_id: str) -> np.ndarray:
        frame = store.get_frame(frame_id)
        return store.memo((frame_id, "residue"), lambda: compute_residue(frame, config))

    def segmentation_of(frame_id: str, threshold):
        frame = store.get_frame(frame_id)
        residue = residue_of(frame_id)

        def compute():
            from dataclasses import replace

            seg = replace(config.segmentation, threshold_override=threshold)
            local = replace(config, segmentation=seg)
            try:
                used, polarity, rois = segment_residue(residue, frame, local)
            except ValueError as exc:
                raise HTTPException(status_code=422, detail=str(exc)) from exc
            return {
                "threshold_used": used,
                "polarity": polarity,
                "rois": rois,
            }

        return store.memo((frame_id, "segment", _threshold_key(threshold)), compute)

    @app.post("/frames")
    async def upload_frame(request: Request, container: UploadFile | None = None):
        if container is not None:
            payload = await container.read()
        else:
            payload = await request.body()
        if not payload:
            raise HTTPException(status_code=422, detail="empty upload")
        try:
            frame_id = store.add_frame(payload)
        except (FrameFormatError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        frame = store.get_frame(frame_id)
        return {
            "frame_id": frame_id,
            "source_frame_id": frame.frame_id,
            "num_samples": frame.num_samples,
            "num_lines": frame.num_lines,
            "axial_spacing_mm": frame.axial_spacing,
            "lateral_spacing_mm": frame.lateral_spacing,
        }

    @app.get("/frames/{frame_id}/bmode.png")
    def bmode_png(frame_id: str):
        frame = store.get_frame(frame_id)

        def compute():
            bmode = form_bmode(detect_envelope(frame), config.dynamic_range_db)
            return _png_bytes(bmode.pixels)

        return Response(store.memo((frame_id, "bmode.png"), compute), media_type="image/png")

    @app.get("/frames/{frame_id}/residue.png")
    def residue_png(frame_id: str):
        residue = residue_of(frame_id)

        def compute():
            lo, hi = residue.min(), residue.max()
            scale = np.zeros_like(residue) if hi == lo else (residue - lo) / (hi - lo)
            return _png_bytes(np.rint(scale * 255.0))

        return Response(store.memo((frame_id, "residue.png"), compute), media_type="image/png")

    @app.post("/frames/{frame_id}/segment")
    async def segment(frame_id: str, body: dict | None = None):
        threshold = None if body is None else body.get("threshold")
        if threshold is not None:
            threshold = float(threshold)
        result = segmentation_of(frame_id, threshold)
        return {
            "threshold_used": result["threshold_used"],
            "polarity": result["polarity"],
            "rois": [roi_payload(roi, include_contour=True) for roi in result["rois"]],
        }

    @app.get("/frames/{frame_id}/rois")
    def rois(frame_id: str, threshold: float | None = None):
        result = segmentation_of(frame_id, threshold)
        return {
            "threshold_used": result["threshold_used"],
            "polarity": result["polarity"],
            "rois": [roi_payload(roi, include_contour=True) for roi in result["rois"]],
        }

    @app.post("/frames/{frame_id}/rois/{label}/features")
    async def roi_features(frame_id: str, label: int, body: dict | None = None):
        body = body or {}
        threshold = body.get("threshold")
        if threshold is not None:
            threshold = float(threshold)
        profile_name = body.get("profile", "combined")
        try:
            profile = built_in_profile(profile_name) if profile_name else None
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        result = segmentation_of(frame_id, threshold)
        matches = [roi for roi in result["rois"] if roi.label == label]
        if not matches:
            raise HTTPException(status_code=404, detail=f"no ROI with label {label}")
        roi = matches[0]
        frame = store.get_frame(frame_id)

        def compute():
            param = store.memo(
                (frame_id, "param"), lambda: parameter_images(frame, calibration, config.spectral)
            )
            payload = analyze_roi(frame, param, roi, profile, config)
            payload["roi"] = roi_payload(roi)
            payload["profile"] = profile_name
            return payload

        return store.memo(
            (frame_id, "features", _threshold_key(threshold), label, profile_name), compute
        )

    @app.get("/profiles")
    def profiles():
        return {"profiles": {name: built_in_profile(name).to_dict() for name in PROFILE_NAMES}}

    return app


def serve(port: int = 8000, calibration: CalibrationSet | None = None) -> None:
    import uvicorn

    uvicorn.run(create_app(calibration), host="127.0.0.1", port=port, log_level="warning")
