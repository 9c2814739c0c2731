"""Synthetic RF phantoms with known lesion geometry and planted parameters.

The scatterer model is fully developed speckle: white Gaussian reflectivity
whose local amplitude follows the planted per-region echogenicity (dB),
convolved per line with a Gaussian-enveloped pulse at the transducer center
frequency.  A matching calibration set is estimated empirically the way a
physical system is calibrated: the per-bin mean of dB spectra measured on a
uniform (0 dB) phantom becomes the transfer spectrum, so calibrated
intercepts of generated frames land on the planted dB values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.ndimage import gaussian_filter
from scipy.signal import fftconvolve

from .classify import COHORT_TABLE_STATS
from .features import FeatureVector
from .frame_io import CalibrationSet, RFFrame
from .spectral import SpectralConfig, window_geometry

INT16_SCALE = 500.0  # fixed reflectivity-to-int16 gain; shared by calibration
PULSE_SIGMA_HZ = 1.7e6  # two-way -6 dB band ~ fc +/- 2 MHz

LESION_MARGIN_MM = 2.0


@dataclass
class PhantomSpec:
    num_samples: int = 1024
    num_lines: int = 128
    sampling_rate: float = 40e6
    center_frequency: float = 10e6
    axial_spacing: float = 0.01925  # mm/sample
    lateral_spacing: float = 0.2  # mm/line
    lesion_center_axial_mm: float = 9.8
    lesion_center_lateral_mm: float = 12.8
    lesion_semi_axis_axial_mm: float = 4.0
    lesion_semi_axis_lateral_mm: float = 6.0
    lesion_rotation_deg: float = 0.0
    background_echogenicity_db: float = 0.0
    lesion_echogenicity_db: float = -8.0
    background_heterogeneity_db: float = 0.0
    lesion_heterogeneity_db: float = 0.0
    border_blur_mm: float = 0.0
    texture_scale_mm: float = 1.2
    speckle_seed: int = 0
    frame_id: str = "phantom"

    def __post_init__(self):
        if self.lesion_semi_axis_axial_mm <= 0 or self.lesion_semi_axis_lateral_mm <= 0:
            raise ValueError("semi-axes must be positive")
        if self.border_blur_mm < 0:
            raise ValueError("border_blur_mm must be >= 0")
        depth_mm = self.num_samples * self.axial_spacing
        width_mm = self.num_lines * self.lateral_spacing
        hw, hd = self.lesion_half_extents_mm()
        if (
            self.lesion_center_axial_mm - hd < LESION_MARGIN_MM
            or self.lesion_center_axial_mm + hd > depth_mm - LESION_MARGIN_MM
            or self.lesion_center_lateral_mm - hw < LESION_MARGIN_MM
            or self.lesion_center_lateral_mm + hw > width_mm - LESION_MARGIN_MM
        ):
            raise ValueError("lesion does not fit inside the frame with a 2 mm margin")

    def lesion_half_extents_mm(self) -> tuple[float, float]:
        """(half width, half depth) of the rotated ellipse."""
        theta = math.radians(self.lesion_rotation_deg)
        a = self.lesion_semi_axis_lateral_mm
        b = self.lesion_semi_axis_axial_mm
        half_w = math.hypot(a * math.cos(theta), b * math.sin(theta))
        half_d = math.hypot(a * math.sin(theta), b * math.cos(theta))
        return half_w, half_d


def _pulse(spec: PhantomSpec) -> np.ndarray:
    sigma_t = 1.0 / (2.0 * math.pi * PULSE_SIGMA_HZ)
    half = int(round(4.0 * sigma_t * spec.sampling_rate))
    t = np.arange(-half, half + 1) / spec.sampling_rate
    return np.exp(-(t**2) / (2.0 * sigma_t**2)) * np.cos(2.0 * math.pi * spec.center_frequency * t)


def _ellipse_indicator(spec: PhantomSpec) -> np.ndarray:
    y = (np.arange(spec.num_samples) + 0.5) * spec.axial_spacing
    x = (np.arange(spec.num_lines) + 0.5) * spec.lateral_spacing
    xx, yy = np.meshgrid(x - spec.lesion_center_lateral_mm, y - spec.lesion_center_axial_mm)
    theta = math.radians(spec.lesion_rotation_deg)
    u = xx * math.cos(theta) + yy * math.sin(theta)
    v = -xx * math.sin(theta) + yy * math.cos(theta)
    return (u / spec.lesion_semi_axis_lateral_mm) ** 2 + (
        v / spec.lesion_semi_axis_axial_mm
    ) ** 2 <= 1.0


def _db_field(spec: PhantomSpec, mask: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    blend = mask.astype(np.float64)
    if spec.border_blur_mm > 0:
        sigma = (spec.border_blur_mm / spec.axial_spacing, spec.border_blur_mm / spec.lateral_spacing)
        blend = gaussian_filter(blend, sigma=sigma, mode="nearest")
    level = spec.background_echogenicity_db + (
        spec.lesion_echogenicity_db - spec.background_echogenicity_db
    ) * blend
    sd = spec.background_heterogeneity_db + (
        spec.lesion_heterogeneity_db - spec.background_heterogeneity_db
    ) * blend
    if np.any(sd != 0):
        sigma = (
            spec.texture_scale_mm / spec.axial_spacing,
            spec.texture_scale_mm / spec.lateral_spacing,
        )
        noise = gaussian_filter(rng.standard_normal(mask.shape), sigma=sigma, mode="wrap")
        noise /= noise.std()
        level = level + sd * noise
    return level


def _analytic_targets(spec: PhantomSpec) -> FeatureVector:
    a = spec.lesion_semi_axis_lateral_mm
    b = spec.lesion_semi_axis_axial_mm
    half_w, half_d = spec.lesion_half_extents_mm()
    area = math.pi * a * b
    feret = 2.0 * max(a, b)
    # Ramanujan's ellipse perimeter approximation
    perimeter = math.pi * (3.0 * (a + b) - math.sqrt((3.0 * a + b) * (a + 3.0 * b)))
    return FeatureVector(
        echogenicity=spec.lesion_echogenicity_db,
        heterogeneity=spec.lesion_heterogeneity_db,
        aspect_ratio=half_d / half_w,
        compactness=math.sqrt(4.0 * area / math.pi) / feret,
        compactness_raw=math.sqrt(area) / feret,
        roundness=4.0 * area / (math.pi * feret**2),
        roundness_raw=area / feret**2,
        convexity=1.0,
        solidity=1.0,
        form_factor=4.0 * math.pi * area / perimeter**2,
    )


def generate(spec: PhantomSpec) -> tuple[RFFrame, np.ndarray, FeatureVector]:
    """Synthesize one RF frame plus its ground-truth mask and planted targets.

    Deterministic in ``spec.speckle_seed``.  The truth mask is the sharp
    (unblurred) ellipse even when the echogenicity border is blurred.
    """
    rng = np.random.default_rng(spec.speckle_seed)
    mask = _ellipse_indicator(spec)
    amplitude = 10.0 ** (_db_field(spec, mask, rng) / 20.0)
    reflectivity = amplitude * rng.standard_normal(mask.shape)
    rf = fftconvolve(reflectivity, _pulse(spec)[:, None], mode="same", axes=0)
    samples = np.clip(np.rint(rf * INT16_SCALE), -32768, 32767).astype(np.int16)
    frame = RFFrame(
        samples=samples,
        sampling_rate=spec.sampling_rate,
        center_frequency=spec.center_frequency,
        axial_spacing=spec.axial_spacing,
        lateral_spacing=spec.lateral_spacing,
        frame_id=spec.frame_id,
    )
    return frame, mask, _analytic_targets(spec)


def make_calibration(
    spec: PhantomSpec | None = None,
    config: SpectralConfig | None = None,
    seed: int = 987,
    num_lines: int = 256,
) -> CalibrationSet:
    """Estimate the transfer spectrum from a uniform 0 dB phantom.

    The transfer value at each FFT bin is the mean of the dB spectra over
    all analysis windows, mirroring how a physical system is calibrated by
    scanning a uniform phantom.  Diffraction is zero (the simulation is
    depth-invariant) and the attenuation coefficient is zero.
    """
    if spec is None:
        spec = PhantomSpec()
    if config is None:
        config = SpectralConfig()
    uniform = replace(
        spec,
        num_lines=num_lines,
        background_echogenicity_db=0.0,
        lesion_echogenicity_db=0.0,
        background_heterogeneity_db=0.0,
        lesion_heterogeneity_db=0.0,
        border_blur_mm=0.0,
        speckle_seed=seed,
        frame_id="calibration",
    )
    frame, _, _ = generate(uniform)
    win, _, starts = window_geometry(frame, config)
    window = np.hamming(win)
    nfft = 1 << int(win - 1).bit_length()
    freqs = np.fft.rfftfreq(nfft, d=1.0 / frame.sampling_rate)
    samples = frame.samples.astype(np.float64)
    total = np.zeros(len(freqs))
    count = 0
    for start in starts:
        block = samples[start : start + win, :]
        power = np.abs(np.fft.rfft(block * window[:, None], nfft, axis=0)) ** 2
        with np.errstate(divide="ignore"):
            total += 10.0 * np.log10(power).sum(axis=1)
        count += block.shape[1]
    transfer = total / count
    depth_mm = frame.num_samples * frame.axial_spacing
    return CalibrationSet(
        frequencies_hz=freqs,
        transfer_db=transfer,
        depths_mm=np.array([0.0, depth_mm]),
        diffraction_db=np.zeros((2, len(freqs))),
        attenuation_db_per_mhz_cm=0.0,
    )


# Validity ranges used to clip cohort feature draws.
_VALIDITY = {
    "echogenicity": (-np.inf, np.inf),
    "heterogeneity": (0.0, np.inf),
    "fnpa_midband": (0.0, np.inf),
    "fnpa": (0.0, np.inf),
    "cooccurrence_contrast": (0.0, np.inf),
    "hurst_midband": (0.0, np.inf),
    "hurst": (0.0, np.inf),
    "margin_definition": (0.0, np.inf),
    "aspect_ratio": (0.05, np.inf),
    "compactness_raw": (0.01, math.sqrt(math.pi) / 2.0),
    "roundness_raw": (0.01, math.pi / 4.0),
    "convexity": (0.01, 1.0),
    "solidity": (0.01, 1.0),
}


@dataclass
class CohortMember:
    label: str  # "benign" or "malignant"
    truth: bool  # True when malignant
    features: FeatureVector
    phantom: PhantomSpec
    frame: RFFrame | None = None
    mask: np.ndarray | None = field(repr=False, default=None)


def _member_spec(draws: dict, index: int, seed: int, label: str) -> PhantomSpec:
    rng = np.random.default_rng((seed, index, 1))
    a_lat = float(rng.uniform(4.0, 6.0))
    b_ax = float(np.clip(draws["aspect_ratio"] * a_lat, 1.5, 7.0))
    # Sharper margins (larger margin-definition draws) map to thinner blur.
    blur = float(np.clip(0.08 / max(draws["margin_definition"], 1e-3), 0.0, 2.0))
    base = PhantomSpec()
    return replace(
        base,
        lesion_center_axial_mm=base.num_samples * base.axial_spacing / 2.0,
        lesion_center_lateral_mm=base.num_lines * base.lateral_spacing / 2.0,
        lesion_semi_axis_axial_mm=b_ax,
        lesion_semi_axis_lateral_mm=a_lat,
        lesion_echogenicity_db=draws["echogenicity"],
        background_echogenicity_db=draws["echogenicity"] + 8.0,
        lesion_heterogeneity_db=draws["heterogeneity"],
        border_blur_mm=blur,
        speckle_seed=int(rng.integers(0, 2**31)),
        frame_id=f"{label}_{index:03d}",
    )


def _draw_features(stats: dict, malignant: bool, rng: np.random.Generator) -> dict:
    draws = {}
    for name, (mb, sb, mm, sm) in stats.items():
        mean, sd = (mm, sm) if malignant else (mb, sb)
        lo, hi = _VALIDITY.get(name, (-np.inf, np.inf))
        draws[name] = float(np.clip(rng.normal(mean, sd), lo, hi))
    return draws


def _to_feature_vector(draws: dict) -> FeatureVector:
    fv = FeatureVector(**{k: v for k, v in draws.items() if k in FeatureVector.SCALAR_FIELDS})
    if fv.compactness_raw is not None:
        fv.compactness = fv.compactness_raw * 2.0 / math.sqrt(math.pi)
    if fv.roundness_raw is not None:
        fv.roundness = fv.roundness_raw * 4.0 / math.pi
    return fv


def generate_cohort(
    n_benign: int,
    n_malignant: int,
    table_stats: dict | None = None,
    seed: int = 0,
    with_frames: bool = False,
) -> list[CohortMember]:
    """Draw a labeled cohort of planted feature vectors (plus phantom specs).

    Each feature is drawn independently from the per-class Gaussian given
    by ``table_stats`` (default: the published cohort tables) and clipped
    to its validity range.  ``with_frames=True`` also synthesizes the RF
    frame described by each member's phantom spec.
    """
    if n_benign < 1 or n_malignant < 1:
        raise ValueError("cohort needs at least one member per class")
    stats = COHORT_TABLE_STATS if table_stats is None else table_stats
    members = []
    for index in range(n_benign + n_malignant):
        malignant = index >= n_benign
        label = "malignant" if malignant else "benign"
        rng = np.random.default_rng((seed, index))
        draws = _draw_features(stats, malignant, rng)
        spec = _member_spec(draws, index, seed, label)
        member = CohortMember(
            label=label,
            truth=malignant,
            features=_to_feature_vector(draws),
            phantom=spec,
        )
        if with_frames:
            member.frame, member.mask, _ = generate(spec)
        members.append(member)
    return members
