"""Spectral and morphometric characterization features of a selected lesion.

Spectral features read the parameter images through the lesion mask:
echogenicity is the mean spectral intercept over in-mask cells and
heterogeneity the population standard deviation of the midband fit.
Texture measures (FNPA, co-occurrence contrast, autocorrelation, Hurst)
run on the B-mode region and, where meaningful, on the midband image.
Margin definition is the contour sum of the midband gradient magnitude
normalized by the contour sum of midband magnitude.  Morphometrics are
dimensionless shape ratios; compactness and roundness carry 4/pi
normalizations so a circle scores one, with the raw ratios also emitted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._polygon import convex_hull, pixel_corners, polygon_area, polygon_perimeter
from .frame_io import RFFrame, detect_envelope, form_bmode
from .segmentation import LesionROI
from .spectral import ParameterImage


class FeatureError(ValueError):
    """A single feature could not be computed for this lesion."""


@dataclass
class FeatureConfig:
    autocorrelation_max_lag: int = 8
    hurst_max_lag: int = 8
    dynamic_range_db: float = 50.0
    glcm_levels: int = 64


@dataclass
class RoiGeometry:
    """Convex-hull view of a lesion outline (physical mm coordinates)."""

    convex_hull_mm: np.ndarray
    convex_perimeter: float
    convex_area: float
    max_diameter: float


@dataclass
class FeatureVector:
    """Named feature values for one lesion; None marks a failed feature."""

    echogenicity: float | None = None  # dB
    heterogeneity: float | None = None  # dB
    fnpa: float | None = None  # B-mode region
    fnpa_midband: float | None = None  # midband image (dB domain)
    cooccurrence_contrast: float | None = None
    hurst: float | None = None  # B-mode region
    hurst_midband: float | None = None
    margin_definition: float | None = None
    aspect_ratio: float | None = None
    compactness: float | None = None
    compactness_raw: float | None = None
    roundness: float | None = None
    roundness_raw: float | None = None
    convexity: float | None = None
    solidity: float | None = None
    form_factor: float | None = None
    autocorrelation: np.ndarray | None = None  # diagnostic gamma grid
    n_param_cells: int = 0
    n_mask_pixels: int = 0
    missing: dict = field(default_factory=dict)

    SCALAR_FIELDS = (
        "echogenicity",
        "heterogeneity",
        "fnpa",
        "fnpa_midband",
        "cooccurrence_contrast",
        "hurst",
        "hurst_midband",
        "margin_definition",
        "aspect_ratio",
        "compactness",
        "compactness_raw",
        "roundness",
        "roundness_raw",
        "convexity",
        "solidity",
        "form_factor",
    )

    def get(self, name: str):
        return getattr(self, name)

    def to_dict(self) -> dict:
        out = {name: self.get(name) for name in self.SCALAR_FIELDS}
        out["autocorrelation"] = (
            None if self.autocorrelation is None else self.autocorrelation.tolist()
        )
        out["n_param_cells"] = self.n_param_cells
        out["n_mask_pixels"] = self.n_mask_pixels
        out["missing"] = dict(sorted(self.missing.items()))
        return out

    def csv_row(self) -> list:
        return [self.get(name) for name in self.SCALAR_FIELDS]


def _cell_mask(param: ParameterImage, roi: LesionROI) -> np.ndarray:
    """True where a cell's window center pixel lies inside the lesion mask."""
    rows = param.center_sample_indices
    n_rows, n_lines = param.shape
    n_cols = min(n_lines, roi.mask.shape[1])
    valid_rows = rows < roi.mask.shape[0]
    inside = np.zeros((n_rows, n_lines), dtype=bool)
    inside[valid_rows, :n_cols] = roi.mask[rows[valid_rows], :n_cols]
    return inside


def echogenicity(param: ParameterImage, roi: LesionROI) -> float:
    """Mean spectral intercept (dB) over in-mask parameter cells."""
    inside = _cell_mask(param, roi) & np.isfinite(param.intercept)
    if not inside.any():
        raise FeatureError("lesion smaller than analysis window")
    return float(param.intercept[inside].mean())


def heterogeneity(param: ParameterImage, roi: LesionROI) -> float:
    """Population standard deviation of the midband fit (dB) inside the lesion."""
    inside = _cell_mask(param, roi) & np.isfinite(param.midband)
    if inside.sum() < 2:
        raise FeatureError("need at least two in-mask cells")
    return float(param.midband[inside].std())


def fnpa(image, mask) -> float:
    """Four-neighborhood texture ratio FP2 = FP1 / mean intensity.

    The per-pixel term averages the four absolute neighbor differences;
    FP1 is its mean over interior mask pixels, making the measure
    region-size invariant.
    """
    x = np.asarray(image, dtype=np.float64)
    m = np.asarray(mask, dtype=bool)
    if x.shape != m.shape:
        raise FeatureError("image and mask shapes differ")
    if not m.any():
        raise FeatureError("empty mask")
    interior = m.copy()
    interior[0, :] = interior[-1, :] = False
    interior[:, 0] = interior[:, -1] = False
    interior[1:, :] &= m[:-1, :]
    interior[:-1, :] &= m[1:, :]
    interior[:, 1:] &= m[:, :-1]
    interior[:, :-1] &= m[:, 1:]
    if not interior.any():
        raise FeatureError("mask has no interior pixels")
    term = np.zeros_like(x)
    term[1:-1, 1:-1] = 0.25 * (
        np.abs(x[1:-1, 1:-1] - x[:-2, 1:-1])
        + np.abs(x[1:-1, 1:-1] - x[2:, 1:-1])
        + np.abs(x[1:-1, 1:-1] - x[1:-1, :-2])
        + np.abs(x[1:-1, 1:-1] - x[1:-1, 2:])
    )
    fp1 = float(term[interior].mean())
    mu = float(x[m].mean())
    if mu == 0:
        raise FeatureError("zero-mean region")
    return fp1 / mu


def autocorrelation(image, mask, max_lag: int = 8) -> np.ndarray:
    """Mean-removed normalized 2-D autocorrelation over the mask bounding box.

    gamma[dm, dn] = A(dm, dn) / A(0, 0) for lags 0..max_lag on each axis.
    """
    x = np.asarray(image, dtype=np.float64)
    m = np.asarray(mask, dtype=bool)
    rows, cols = np.nonzero(m)
    if rows.size == 0:
        raise FeatureError("empty mask")
    crop = x[rows.min() : rows.max() + 1, cols.min() : cols.max() + 1]
    if crop.shape[0] < max_lag + 2 or crop.shape[1] < max_lag + 2:
        raise FeatureError("bounding box smaller than (max_lag + 2) squared")
    g = crop - crop.mean()
    big_m, big_n = g.shape
    a = np.empty((max_lag + 1, max_lag + 1))
    for dm in range(max_lag + 1):
        for dn in range(max_lag + 1):
            a[dm, dn] = np.mean(g[: big_m - dm, : big_n - dn] * g[dm:, dn:])
    if a[0, 0] == 0:
        raise FeatureError("zero variance region")
    return a / a[0, 0]


def cooccurrence_contrast(image, mask, levels: int = 64) -> float:
    """Gray-level co-occurrence contrast, distance-1 symmetric offsets averaged."""
    x = np.asarray(image, dtype=np.float64)
    m = np.asarray(mask, dtype=bool)
    if not m.any():
        raise FeatureError("empty mask")
    vals = x[m]
    lo, hi = vals.min(), vals.max()
    if hi == lo:
        return 0.0
    q = np.clip(((x - lo) / (hi - lo) * levels).astype(np.int64), 0, levels - 1)
    diff_sq = (np.arange(levels)[:, None] - np.arange(levels)[None, :]) ** 2
    contrasts = []
    for dr, dc in ((0, 1), (1, 0)):
        a = q[: q.shape[0] - dr, : q.shape[1] - dc]
        b = q[dr:, dc:]
        valid = m[: m.shape[0] - dr, : m.shape[1] - dc] & m[dr:, dc:]
        if not valid.any():
            continue
        pairs = np.bincount(
            (a[valid] * levels + b[valid]).ravel(), minlength=levels * levels
        ).reshape(levels, levels)
        glcm = pairs + pairs.T  # symmetric
        contrasts.append(float((glcm * diff_sq).sum() / glcm.sum()))
    if not contrasts:
        raise FeatureError("no co-occurring pixel pairs inside the mask")
    return float(np.mean(contrasts))


def hurst(image, mask, max_lag: int = 8) -> float:
    """Variogram-slope roughness exponent, clamped to [0, 1].

    Fits log mean-absolute-increment against log lag over lags 1..max_lag,
    pooling horizontal and vertical in-mask increments.
    """
    x = np.asarray(image, dtype=np.float64)
    m = np.asarray(mask, dtype=bool)
    rows, cols = np.nonzero(m)
    if rows.size == 0:
        raise FeatureError("empty mask")
    bbox_h = rows.max() - rows.min() + 1
    bbox_w = cols.max() - cols.min() + 1
    if bbox_h < 16 or bbox_w < 16:
        raise FeatureError("mask bounding box smaller than 16x16")
    lags, increments = [], []
    for h in range(1, max_lag + 1):
        diffs = []
        valid = m[:, h:] & m[:, :-h]
        if valid.any():
            diffs.append(np.abs(x[:, h:] - x[:, :-h])[valid])
        valid = m[h:, :] & m[:-h, :]
        if valid.any():
            diffs.append(np.abs(x[h:, :] - x[:-h, :])[valid])
        if not diffs:
            continue
        md = float(np.concatenate(diffs).mean())
        if md > 0:
            lags.append(h)
            increments.append(md)
    if len(lags) < 2:
        raise FeatureError("zero variance region")
    log_lag = np.log(np.asarray(lags, dtype=np.float64))
    log_inc = np.log(np.asarray(increments))
    dl = log_lag - log_lag.mean()
    slope = float(np.dot(dl, log_inc - log_inc.mean()) / np.dot(dl, dl))
    return float(np.clip(slope, 0.0, 1.0))


def _nan_gradient_magnitude(grid: np.ndarray) -> np.ndarray:
    """Central-difference gradient magnitude tolerant of NaN cells."""

    def axis_gradient(g, axis):
        gm = np.moveaxis(g, axis, 0)
        out = np.full_like(gm, np.nan)
        n = gm.shape[0]
        for i in range(n):
            lo = gm[i - 1] if i > 0 else None
            hi = gm[i + 1] if i < n - 1 else None
            if lo is not None and hi is not None:
                central = (hi - lo) / 2.0
                fwd = hi - gm[i]
                bwd = gm[i] - lo
                out[i] = np.where(
                    np.isfinite(central), central, np.where(np.isfinite(fwd), fwd, bwd)
                )
            elif hi is not None:
                out[i] = hi - gm[i]
            elif lo is not None:
                out[i] = gm[i] - lo
        return np.moveaxis(out, 0, axis)

    gr = axis_gradient(grid, 0)
    gc = axis_gradient(grid, 1)
    return np.hypot(gr, gc)


def margin_definition(param: ParameterImage, roi: LesionROI) -> float:
    """Contour gradient magnitude of the midband normalized by contour midband.

    Gradients use central differences on the parameter grid (cell units).
    """
    n_rows, n_lines = param.shape
    contour = roi.contour
    cell_rows = np.searchsorted(param.center_sample_indices, contour[:, 0])
    cell_rows = np.clip(cell_rows, 0, n_rows - 1)
    prev_rows = np.clip(cell_rows - 1, 0, n_rows - 1)
    use_prev = np.abs(param.center_sample_indices[prev_rows] - contour[:, 0]) < np.abs(
        param.center_sample_indices[cell_rows] - contour[:, 0]
    )
    cell_rows = np.where(use_prev, prev_rows, cell_rows)
    cell_cols = np.clip(contour[:, 1], 0, n_lines - 1)
    cells = np.unique(np.stack([cell_rows, cell_cols], axis=1), axis=0)
    if len(cells) < 8:
        raise FeatureError("contour maps to fewer than 8 parameter cells")
    m_vals = param.midband[cells[:, 0], cells[:, 1]]
    grad = _nan_gradient_magnitude(param.midband)[cells[:, 0], cells[:, 1]]
    finite = np.isfinite(m_vals) & np.isfinite(grad)
    denom = float(np.abs(m_vals[finite]).sum())
    if denom == 0:
        raise FeatureError("zero midband magnitude on contour")
    return float(grad[finite].sum() / denom)


def roi_geometry(roi: LesionROI) -> RoiGeometry:
    """Convex hull of the lesion outline, over the boundary pixel corners."""
    corners = pixel_corners(roi.contour) * np.array([roi.axial_spacing, roi.lateral_spacing])
    hull = convex_hull(corners)
    return RoiGeometry(
        convex_hull_mm=hull,
        convex_perimeter=polygon_perimeter(hull),
        convex_area=polygon_area(hull),
        max_diameter=roi.max_diameter,
    )


def morphometrics(roi: LesionROI) -> dict:
    """The six shape ratios (plus the raw thesis-convention variants).

    Convexity and solidity are clamped to 1.0: raster jitter can push the
    measured ratio a fraction of a percent past unity on convex shapes.
    """
    if roi.width <= 0 or roi.max_diameter <= 0 or roi.perimeter <= 0:
        raise FeatureError("degenerate ROI")
    geo = roi_geometry(roi)
    if geo.convex_area <= 0 or geo.convex_perimeter <= 0:
        raise FeatureError("degenerate convex hull")
    area, feret = roi.area, roi.max_diameter
    return {
        "aspect_ratio": roi.depth / roi.width,
        "compactness": float(np.sqrt(4.0 * area / np.pi) / feret),
        "compactness_raw": float(np.sqrt(area) / feret),
        "roundness": 4.0 * area / (np.pi * feret**2),
        "roundness_raw": area / feret**2,
        "convexity": min(1.0, geo.convex_perimeter / roi.perimeter),
        "solidity": min(1.0, area / geo.convex_area),
        "form_factor": 4.0 * np.pi * area / roi.perimeter**2,
    }


def extract_features(
    frame: RFFrame,
    param: ParameterImage,
    roi: LesionROI,
    config: FeatureConfig | None = None,
) -> FeatureVector:
    """Compute every feature; individual failures are recorded, not raised."""
    if config is None:
        config = FeatureConfig()
    fv = FeatureVector()
    bmode = form_bmode(detect_envelope(frame), config.dynamic_range_db)
    bpix = bmode.pixels.astype(np.float64)
    cell_mask = _cell_mask(param, roi)
    fv.n_param_cells = int((cell_mask & np.isfinite(param.midband)).sum())
    fv.n_mask_pixels = int(roi.mask.sum())

    def attempt(name, fn):
        try:
            setattr(fv, name, fn())
        except FeatureError as exc:
            fv.missing[name] = str(exc)

    attempt("echogenicity", lambda: echogenicity(param, roi))
    attempt("heterogeneity", lambda: heterogeneity(param, roi))
    attempt("margin_definition", lambda: margin_definition(param, roi))
    attempt("fnpa", lambda: fnpa(bpix, roi.mask))
    attempt("fnpa_midband", lambda: fnpa(param.midband, cell_mask & np.isfinite(param.midband)))
    attempt("cooccurrence_contrast", lambda: cooccurrence_contrast(bpix, roi.mask, config.glcm_levels))
    attempt("hurst", lambda: hurst(bpix, roi.mask, config.hurst_max_lag))
    attempt(
        "hurst_midband",
        lambda: hurst(param.midband, cell_mask & np.isfinite(param.midband), config.hurst_max_lag),
    )
    attempt(
        "autocorrelation",
        lambda: autocorrelation(bpix, roi.mask, config.autocorrelation_max_lag),
    )

    try:
        shape = morphometrics(roi)
        for key, value in shape.items():
            setattr(fv, key, value)
    except FeatureError as exc:
        for key in (
            "aspect_ratio",
            "compactness",
            "compactness_raw",
            "roundness",
            "roundness_raw",
            "convexity",
            "solidity",
            "form_factor",
        ):
            fv.missing[key] = str(exc)
    return fv
