"""Calibrated spectrum analysis: slope, intercept, and midband-fit images.

Each analysis cell is one Hamming-windowed axial segment of one A-line.
Its periodogram in dB is corrected for the system transfer function, the
depth-dependent diffraction pattern, and linear frequency-dependent
attenuation (compensation +2*alpha*d*f, d in cm, f in MHz), then fitted by
ordinary least squares over the analysis band:

    P(f) ~ I + s*f,      M = I + s*f0

where f0 is the band center.  The midband image is formed from I and s, so
the identity M = I + s*f0 holds exactly by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .frame_io import CalibrationSet, RFFrame

MIN_SEGMENT_SAMPLES = 16
MIN_BAND_BINS = 3


@dataclass
class SpectralConfig:
    window_length_mm: float = 2.4
    band_hz: tuple[float, float] = (8e6, 12e6)
    center_frequency_hz: float | None = None  # None: band midpoint
    hop_samples: int | None = None  # None: half the window
    attenuation_db_per_mhz_cm: float = 1.0
    band_mode: str = "fixed"  # "fixed" or "auto6db"

    def __post_init__(self):
        if self.window_length_mm <= 0:
            raise ValueError("window_length_mm must be positive")
        f_lo, f_hi = self.band_hz
        if not f_lo < f_hi:
            raise ValueError("band must satisfy f_lo < f_hi")
        if self.hop_samples is not None and self.hop_samples < 1:
            raise ValueError("hop must be >= 1")
        if self.band_mode not in ("fixed", "auto6db"):
            raise ValueError("band_mode must be 'fixed' or 'auto6db'")

    @property
    def f0_hz(self) -> float:
        if self.center_frequency_hz is not None:
            return self.center_frequency_hz
        return 0.5 * (self.band_hz[0] + self.band_hz[1])


@dataclass
class ParameterImage:
    """Spectral parameter maps; one row per window position, one column per line.

    Missing cells (silent windows) are NaN in all three grids.
    """

    slope: np.ndarray  # dB/MHz
    intercept: np.ndarray  # dB
    midband: np.ndarray  # dB
    center_sample_indices: np.ndarray
    axial_centers_mm: np.ndarray
    lateral_centers_mm: np.ndarray
    center_frequency_mhz: float

    @property
    def shape(self) -> tuple[int, int]:
        return self.slope.shape


def _next_pow2(n: int) -> int:
    return 1 << (int(n - 1).bit_length())


def windowed_spectrum(segment, sampling_rate: float) -> tuple[np.ndarray, np.ndarray]:
    """Hamming-windowed periodogram of an RF segment, in dB.

    Returns (frequencies_hz, power_db).  The FFT length is the next power
    of two at or above the segment length.
    """
    x = np.asarray(segment, dtype=np.float64)
    if x.ndim != 1 or x.size < MIN_SEGMENT_SAMPLES:
        raise ValueError(f"segment must be 1-D with >= {MIN_SEGMENT_SAMPLES} samples")
    if not np.any(x):
        raise ValueError("silent window: all-zero segment")
    nfft = _next_pow2(x.size)
    spectrum = np.fft.rfft(x * np.hamming(x.size), nfft)
    freqs = np.fft.rfftfreq(nfft, d=1.0 / sampling_rate)
    power = np.abs(spectrum) ** 2
    with np.errstate(divide="ignore"):
        return freqs, 10.0 * np.log10(power)


def calibrate(
    freqs_hz,
    power_db,
    depth_mm: float,
    calibration: CalibrationSet,
    config: SpectralConfig | None = None,
) -> np.ndarray:
    """Remove system/diffraction effects and compensate attenuation.

    output = raw - transfer - diffraction(depth) + 2*alpha*d*f  with d the
    window-center depth in cm and f in MHz.
    """
    if config is None:
        config = SpectralConfig()
    freqs = np.asarray(freqs_hz, dtype=np.float64)
    p = np.asarray(power_db, dtype=np.float64)
    f_lo, f_hi = config.band_hz
    if not calibration.covers(f_lo, f_hi):
        raise ValueError(
            "calibration does not cover the analysis band "
            f"[{f_lo:.3g}, {f_hi:.3g}] Hz"
        )
    alpha = config.attenuation_db_per_mhz_cm
    f_mhz = freqs / 1e6
    d_cm = depth_mm / 10.0
    return (
        p
        - calibration.transfer_at(freqs)
        - calibration.diffraction_at(depth_mm, freqs)
        + 2.0 * alpha * d_cm * f_mhz
    )


def _ols_line(f_mhz: np.ndarray, p_db: np.ndarray) -> tuple[float, float]:
    """Least-squares slope (dB/MHz) and intercept (dB) of p against f."""
    fbar = f_mhz.mean()
    pbar = p_db.mean()
    df = f_mhz - fbar
    slope = float(np.dot(df, p_db - pbar) / np.dot(df, df))
    return slope, float(pbar - slope * fbar)


def _band_mask(freqs_hz: np.ndarray, power_db: np.ndarray, config: SpectralConfig) -> np.ndarray:
    f_lo, f_hi = config.band_hz
    if config.band_mode == "fixed":
        return (freqs_hz >= f_lo) & (freqs_hz <= f_hi)
    finite = np.isfinite(power_db)
    if not finite.any():
        return finite
    peak_idx = int(np.nanargmax(np.where(finite, power_db, -np.inf)))
    level = power_db[peak_idx] - 6.0
    mask = np.zeros_like(finite)
    i = peak_idx
    while i >= 0 and finite[i] and power_db[i] >= level:
        mask[i] = True
        i -= 1
    i = peak_idx + 1
    while i < len(power_db) and finite[i] and power_db[i] >= level:
        mask[i] = True
        i += 1
    return mask


def regress_band(
    freqs_hz, power_db, config: SpectralConfig | None = None
) -> tuple[float, float, float]:
    """Fit the calibrated spectrum over the analysis band.

    Returns (slope dB/MHz, intercept dB, midband dB), with the midband
    evaluated at the configured center frequency.
    """
    if config is None:
        config = SpectralConfig()
    freqs = np.asarray(freqs_hz, dtype=np.float64)
    p = np.asarray(power_db, dtype=np.float64)
    mask = _band_mask(freqs, p, config)
    if mask.sum() < MIN_BAND_BINS:
        raise ValueError(f"fewer than {MIN_BAND_BINS} spectral bins in the analysis band")
    if not np.all(np.isfinite(p[mask])):
        raise ValueError("non-finite power inside the analysis band")
    slope, intercept = _ols_line(freqs[mask] / 1e6, p[mask])
    f0_mhz = config.f0_hz / 1e6
    return slope, intercept, intercept + slope * f0_mhz


def window_geometry(frame: RFFrame, config: SpectralConfig) -> tuple[int, int, np.ndarray]:
    """Window length (samples), hop, and window start indices for a frame."""
    win = int(round(config.window_length_mm / frame.axial_spacing))
    win = max(win, MIN_SEGMENT_SAMPLES)
    if frame.num_samples < win:
        raise ValueError(
            f"frame depth {frame.num_samples} samples is shallower than one "
            f"analysis window ({win} samples)"
        )
    hop = config.hop_samples if config.hop_samples is not None else max(1, win // 2)
    starts = np.arange(0, frame.num_samples - win + 1, hop, dtype=np.int64)
    return win, hop, starts


def parameter_images(
    frame: RFFrame,
    calibration: CalibrationSet,
    config: SpectralConfig | None = None,
) -> ParameterImage:
    """Slide the analysis window over all RF data and fit every cell.

    Silent windows become NaN cells rather than failures.
    """
    if config is None:
        config = SpectralConfig()
    f_lo, f_hi = config.band_hz
    if not calibration.covers(f_lo, f_hi):
        raise ValueError("calibration does not cover the analysis band")
    win, hop, starts = window_geometry(frame, config)
    samples = frame.samples.astype(np.float64)
    n_rows = len(starts)
    n_lines = frame.num_lines

    window = np.hamming(win)
    nfft = _next_pow2(win)
    freqs = np.fft.rfftfreq(nfft, d=1.0 / frame.sampling_rate)
    f_mhz = freqs / 1e6
    fixed_mask = (freqs >= f_lo) & (freqs <= f_hi)
    if config.band_mode == "fixed" and fixed_mask.sum() < MIN_BAND_BINS:
        raise ValueError("analysis band holds fewer than 3 FFT bins")
    f0_mhz = config.f0_hz / 1e6
    alpha = config.attenuation_db_per_mhz_cm
    transfer = calibration.transfer_at(freqs)

    centers = starts + (win - 1) / 2.0
    center_indices = np.rint(centers).astype(np.int64)
    axial_centers_mm = centers * frame.axial_spacing

    slope = np.full((n_rows, n_lines), np.nan)
    intercept = np.full((n_rows, n_lines), np.nan)

    fb = f_mhz[fixed_mask]
    fb_centered = fb - fb.mean()
    fb_norm = float(np.dot(fb_centered, fb_centered))

    for k, start in enumerate(starts):
        block = samples[start : start + win, :]
        silent = ~np.any(block, axis=0)
        spectra = np.fft.rfft(block * window[:, None], nfft, axis=0)
        power = np.abs(spectra) ** 2
        with np.errstate(divide="ignore"):
            power_db = 10.0 * np.log10(power)
        depth_mm = float(axial_centers_mm[k])
        correction = (
            -transfer
            - calibration.diffraction_at(depth_mm, freqs)
            + 2.0 * alpha * (depth_mm / 10.0) * f_mhz
        )
        calibrated = power_db + correction[:, None]
        if config.band_mode == "fixed":
            band = calibrated[fixed_mask, :]
            usable = ~silent & np.all(np.isfinite(band), axis=0)
            if not usable.any():
                continue
            pbar = band[:, usable].mean(axis=0)
            s = fb_centered @ (band[:, usable] - pbar) / fb_norm
            slope[k, usable] = s
            intercept[k, usable] = pbar - s * fb.mean()
        else:
            for j in range(n_lines):
                if silent[j]:
                    continue
                try:
                    s, i, _ = regress_band(freqs, calibrated[:, j], config)
                except ValueError:
                    continue
                slope[k, j] = s
                intercept[k, j] = i

    midband = intercept + slope * f0_mhz
    return ParameterImage(
        slope=slope,
        intercept=intercept,
        midband=midband,
        center_sample_indices=center_indices,
        axial_centers_mm=axial_centers_mm,
        lateral_centers_mm=(np.arange(n_lines) + 0.5) * frame.lateral_spacing,
        center_frequency_mhz=f0_mhz,
    )
