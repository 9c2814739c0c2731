"""Shared frame-processing core used by both the CLI and the HTTP service.

One frame flows through: envelope -> B-mode -> histogram equalization ->
diffusion -> per-line EMD residue -> threshold (Otsu or override) ->
polarity resolution -> ROI extraction -> parameter images -> features ->
weighted score.  The thresholded map marks bright pixels; lesions are
hypoechoic, so the lesion class is whichever side of the threshold has the
lower residue mean (recorded as ``polarity``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .classify import WeightProfile, decide, score
from .emd import EmdParams, residue_image
from .features import FeatureConfig, FeatureVector, extract_features
from .frame_io import CalibrationSet, RFFrame, detect_envelope, form_bmode
from .preprocess import DiffusionParams, diffuse, equalize_histogram
from .segmentation import LesionROI, SegmentationParams, extract_rois, otsu_threshold, select_roi
from .spectral import SpectralConfig, parameter_images


@dataclass
class PipelineConfig:
    dynamic_range_db: float = 50.0
    diffusion: DiffusionParams = field(default_factory=DiffusionParams)
    emd: EmdParams = field(default_factory=EmdParams)
    segmentation: SegmentationParams = field(default_factory=SegmentationParams)
    spectral: SpectralConfig = field(default_factory=SpectralConfig)
    features: FeatureConfig = field(default_factory=FeatureConfig)
    roi_selector: object = "largest"  # "largest" | int index | (x_mm, y_mm)


def compute_residue(frame: RFFrame, config: PipelineConfig | None = None) -> np.ndarray:
    """Preprocessed EMD residue image of a frame (real-valued grid)."""
    if config is None:
        config = PipelineConfig()
    bmode = form_bmode(detect_envelope(frame), config.dynamic_range_db)
    equalized = equalize_histogram(bmode.pixels.astype(np.float64))
    diffused = diffuse(equalized, config.diffusion)
    return residue_image(diffused, config.emd)


def segment_residue(
    residue: np.ndarray,
    frame: RFFrame,
    config: PipelineConfig | None = None,
) -> tuple[float, str, list[LesionROI]]:
    """Threshold the residue and extract candidate ROIs.

    Returns (threshold_used, polarity, rois) with polarity "foreground"
    when the bright class is the lesion class and "complement" otherwise.
    """
    if config is None:
        config = PipelineConfig()
    threshold = config.segmentation.threshold_override
    if threshold is None:
        threshold = otsu_threshold(residue)
    bright = residue > threshold
    polarity = "foreground"
    lesion_mask = bright
    if bright.any() and (~bright).any():
        if residue[bright].mean() > residue[~bright].mean():
            lesion_mask = ~bright
            polarity = "complement"
    rois = extract_rois(
        lesion_mask,
        config.segmentation,
        spacings=(frame.axial_spacing, frame.lateral_spacing),
    )
    return float(threshold), polarity, rois


def _json_float(value):
    if value is None:
        return None
    value = float(value)
    return value if math.isfinite(value) else None


def roi_payload(roi: LesionROI, include_contour: bool = False) -> dict:
    out = {
        "label": roi.label,
        "area_mm2": _json_float(roi.area),
        "perimeter_mm": _json_float(roi.perimeter),
        "width_mm": _json_float(roi.width),
        "depth_mm": _json_float(roi.depth),
        "max_diameter_mm": _json_float(roi.max_diameter),
        "centroid_mm": [_json_float(roi.centroid[0]), _json_float(roi.centroid[1])],
    }
    if include_contour:
        out["contour"] = [[int(r), int(c)] for r, c in roi.contour]
    return out


def features_payload(fv: FeatureVector) -> dict:
    raw = fv.to_dict()
    out = {}
    for key, value in raw.items():
        if key in ("missing", "n_param_cells", "n_mask_pixels", "autocorrelation"):
            out[key] = value
        else:
            out[key] = _json_float(value)
    return out


def analyze_roi(
    frame: RFFrame,
    param,
    roi: LesionROI,
    profile: WeightProfile | None,
    config: PipelineConfig | None = None,
) -> dict:
    """Feature + score payload for one selected ROI (CLI/service parity point)."""
    if config is None:
        config = PipelineConfig()
    fv = extract_features(frame, param, roi, config.features)
    payload = {"features": features_payload(fv), "score": None, "decision": None}
    if profile is not None:
        try:
            value = score(fv, profile)
            payload["score"] = _json_float(value)
            payload["decision"] = decide(value, profile)
        except ValueError as exc:
            payload["score_error"] = str(exc)
    return payload


@dataclass
class FrameArtifacts:
    """Everything the pipeline produced for one frame."""

    frame: RFFrame
    residue: np.ndarray
    threshold: float
    polarity: str
    rois: list
    selected: LesionROI | None
    param: object | None
    entry: dict


def process_frame(
    frame: RFFrame,
    calibration: CalibrationSet,
    config: PipelineConfig | None = None,
    profile: WeightProfile | None = None,
) -> FrameArtifacts:
    """Run the full pipeline on one frame, keeping intermediate artifacts."""
    if config is None:
        config = PipelineConfig()
    residue = compute_residue(frame, config)
    threshold, polarity, rois = segment_residue(residue, frame, config)
    entry = {
        "frame_id": frame.frame_id,
        "threshold_used": threshold,
        "polarity": polarity,
        "roi_count": len(rois),
        "selected_roi": None,
        "features": None,
        "score": None,
        "decision": None,
    }
    artifacts = FrameArtifacts(frame, residue, threshold, polarity, rois, None, None, entry)
    if not rois:
        entry["error"] = "no ROIs passed the area filter"
        return artifacts
    try:
        roi = select_roi(rois, config.roi_selector)
    except ValueError as exc:
        entry["error"] = str(exc)
        return artifacts
    artifacts.selected = roi
    entry["selected_roi"] = roi_payload(roi)
    param = parameter_images(frame, calibration, config.spectral)
    artifacts.param = param
    analysis = analyze_roi(frame, param, roi, profile, config)
    entry["features"] = analysis["features"]
    entry["score"] = analysis["score"]
    entry["decision"] = analysis["decision"]
    if "score_error" in analysis:
        entry["score_error"] = analysis["score_error"]
    return artifacts


def analyze_frame(
    frame: RFFrame,
    calibration: CalibrationSet,
    config: PipelineConfig | None = None,
    profile: WeightProfile | None = None,
) -> dict:
    """Run the full pipeline on one frame and return its report entry."""
    return process_frame(frame, calibration, config, profile).entry
