"""Residue thresholding, connected components, contours, ROI measurement.

Thresholding uses Otsu's intraclass-variance minimizer over a 256-bin
histogram.  Candidate regions are hole-filled connected components whose
physical area passes a floor; each is measured in millimetres using the
frame's axial/lateral pitches.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from ._polygon import (
    crack_polygon,
    max_pairwise_distance,
    moore_contour,
    polygon_perimeter,
    smooth_closed_polygon,
)

OTSU_BINS = 256


@dataclass
class SegmentationParams:
    threshold_override: float | None = None
    min_region_area: float = 4.0  # mm^2
    connectivity: int = 8
    closing_size: int = 3  # binary-closing structuring element (px); <2 disables

    def __post_init__(self):
        if self.min_region_area < 0:
            raise ValueError("min_region_area must be >= 0")
        if self.connectivity not in (4, 8):
            raise ValueError("connectivity must be 4 or 8")
        if self.closing_size < 0:
            raise ValueError("closing_size must be >= 0")


@dataclass
class LesionROI:
    """One candidate lesion: mask, boundary, and physical measurements.

    ``contour`` is the ordered Moore-neighbor boundary pixel polygon
    (closed implicitly).  ``boundary_polygon_mm`` is the smoothed pixel-edge
    outline in (axial mm, lateral mm) coordinates, used for perimeter and
    convex-geometry measurements.  ``centroid`` is (lateral mm, axial mm).
    """

    mask: np.ndarray
    contour: np.ndarray
    area: float
    perimeter: float
    width: float
    depth: float
    max_diameter: float
    centroid: tuple[float, float]
    label: int
    axial_spacing: float
    lateral_spacing: float
    boundary_polygon_mm: np.ndarray = field(repr=False, default=None)

    def contains_point(self, x_mm: float, y_mm: float) -> bool:
        row = int(y_mm / self.axial_spacing)
        col = int(x_mm / self.lateral_spacing)
        if 0 <= row < self.mask.shape[0] and 0 <= col < self.mask.shape[1]:
            return bool(self.mask[row, col])
        return False


def otsu_threshold(image) -> float:
    """Threshold minimizing the weighted intraclass variance.

    The histogram spans 256 uniform bins over [min, max]; ties break toward
    the lower bin.  Returns the upper edge of the optimal low class, so that
    the strict comparison ``value > threshold`` reproduces the class split.
    """
    x = np.asarray(image, dtype=np.float64).ravel()
    if x.size == 0 or not np.all(np.isfinite(x)):
        raise ValueError("image must be non-empty with finite values")
    lo, hi = x.min(), x.max()
    if hi == lo:
        raise ValueError("no threshold exists: constant image")
    width = (hi - lo) / OTSU_BINS
    idx = np.clip(((x - lo) / (hi - lo) * OTSU_BINS).astype(np.int64), 0, OTSU_BINS - 1)
    counts = np.bincount(idx, minlength=OTSU_BINS).astype(np.float64)
    # class statistics come from the actual pixel values, binned only to
    # enumerate the 256 candidate thresholds
    sums = np.bincount(idx, weights=x, minlength=OTSU_BINS)
    sums_sq = np.bincount(idx, weights=x * x, minlength=OTSU_BINS)

    w0 = np.cumsum(counts)
    s0 = np.cumsum(sums)
    q0 = np.cumsum(sums_sq)
    w1 = w0[-1] - w0
    s1 = s0[-1] - s0
    q1 = q0[-1] - q0
    with np.errstate(divide="ignore", invalid="ignore"):
        var0 = np.where(w0 > 0, q0 / np.maximum(w0, 1) - (s0 / np.maximum(w0, 1)) ** 2, 0.0)
        var1 = np.where(w1 > 0, q1 / np.maximum(w1, 1) - (s1 / np.maximum(w1, 1)) ** 2, 0.0)
    intraclass = (w0 * var0 + w1 * var1) / x.size
    t = int(np.argmin(intraclass))
    return lo + (t + 1) * width


def binarize(image, params: SegmentationParams | None = None) -> np.ndarray:
    """Strictly-greater-than threshold map (override or Otsu)."""
    if params is None:
        params = SegmentationParams()
    x = np.asarray(image, dtype=np.float64)
    th = params.threshold_override
    if th is None:
        th = otsu_threshold(x)
    return x > th


def _measure_component(
    filled: np.ndarray, label: int, axial_spacing: float, lateral_spacing: float
) -> LesionROI:
    rows, cols = np.nonzero(filled)
    width = (cols.max() - cols.min() + 1) * lateral_spacing
    depth = (rows.max() - rows.min() + 1) * axial_spacing
    area = float(rows.size) * axial_spacing * lateral_spacing

    crack = crack_polygon(filled)
    crack_mm = crack * np.array([axial_spacing, lateral_spacing])
    smoothed = smooth_closed_polygon(crack_mm)
    perimeter = polygon_perimeter(smoothed)
    feret = max_pairwise_distance(crack_mm)

    centroid = (
        float((cols.mean() + 0.5) * lateral_spacing),
        float((rows.mean() + 0.5) * axial_spacing),
    )
    return LesionROI(
        mask=filled,
        contour=moore_contour(filled),
        area=area,
        perimeter=perimeter,
        width=float(width),
        depth=float(depth),
        max_diameter=feret,
        centroid=centroid,
        label=label,
        axial_spacing=axial_spacing,
        lateral_spacing=lateral_spacing,
        boundary_polygon_mm=smoothed,
    )


def extract_rois(
    binary,
    params: SegmentationParams | None = None,
    spacings: tuple[float, float] = (1.0, 1.0),
) -> list[LesionROI]:
    """Hole-filled connected components passing the area floor.

    ``spacings`` is (axial mm/sample, lateral mm/line).  Components are
    returned in descending area order and labeled 1..n in that order.
    """
    if params is None:
        params = SegmentationParams()
    grid = np.asarray(binary).astype(bool)
    if grid.ndim != 2 or grid.size == 0:
        raise ValueError("binary grid must be non-empty 2-D")
    axial_spacing, lateral_spacing = spacings
    if params.closing_size >= 2 and min(grid.shape) > params.closing_size:
        # per-line residue seams can slice one lesion into fragments; a small
        # closing bridges them before labeling, like hole filling does for
        # interior speckle holes (padded so border components survive intact)
        pad = params.closing_size
        padded = np.pad(grid, pad, mode="constant", constant_values=False)
        closed = ndimage.binary_closing(
            padded, structure=np.ones((params.closing_size, params.closing_size), bool)
        )
        grid = closed[pad:-pad, pad:-pad]
    structure = ndimage.generate_binary_structure(2, 2 if params.connectivity == 8 else 1)
    labels, n = ndimage.label(grid, structure=structure)
    candidates = []
    for k in range(1, n + 1):
        filled = ndimage.binary_fill_holes(labels == k)
        area_px = int(filled.sum())
        if area_px * axial_spacing * lateral_spacing < params.min_region_area:
            continue
        candidates.append((area_px, k, filled))
    candidates.sort(key=lambda item: (-item[0], item[1]))
    return [
        _measure_component(filled, i + 1, axial_spacing, lateral_spacing)
        for i, (_, _, filled) in enumerate(candidates)
    ]


def select_roi(rois: list[LesionROI], selector) -> LesionROI:
    """Pick an ROI by list index, by ``"largest"``, or by an (x, y) mm point."""
    if not rois:
        raise ValueError("no ROIs to select from")
    if selector == "largest":
        return max(rois, key=lambda r: r.area)
    if isinstance(selector, int):
        if not 0 <= selector < len(rois):
            raise ValueError(f"index out of range: {selector} (have {len(rois)} ROIs)")
        return rois[selector]
    x_mm, y_mm = selector
    for roi in rois:
        if roi.contains_point(x_mm, y_mm):
            return roi
    raise ValueError(f"no ROI at point ({x_mm}, {y_mm})")


def dimension_error(roi: LesionROI, reference_dimension: float) -> tuple[float, float]:
    """Absolute (mm) and percent error of the ROI width against a reference."""
    if reference_dimension <= 0:
        raise ValueError("reference_dimension must be positive")
    absolute = abs(roi.width - reference_dimension)
    return absolute, 100.0 * absolute / reference_dimension
