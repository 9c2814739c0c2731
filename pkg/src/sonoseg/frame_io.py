"""RF container I/O, calibration data, envelope detection and B-mode formation.

The on-disk RF container is a directory (or zip) holding ``header.json`` and
``rf.bin``.  ``rf.bin`` stores little-endian signed 16-bit samples in
line-major order (all samples of line 0, then line 1, ...).  In memory the
sample grid is axial-major: ``samples[i, j]`` is depth sample ``i`` of
A-line ``j``.
"""

from __future__ import annotations

import json
import zipfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import hilbert

HEADER_NAME = "header.json"
PAYLOAD_NAME = "rf.bin"

_HEADER_FIELDS = {
    "samples_per_line": int,
    "num_lines": int,
    "sampling_rate_hz": float,
    "center_frequency_hz": float,
    "axial_spacing_mm": float,
    "lateral_spacing_mm": float,
    "frame_id": str,
}


class FrameFormatError(ValueError):
    """Raised for malformed RF containers or calibration files."""


@dataclass
class RFFrame:
    """Raw radio-frequency echo frame with acquisition geometry.

    Attributes
    ----------
    samples : ndarray, int16, shape (samples_per_line, num_lines)
        Axial index is depth, lateral index is A-line number.
    sampling_rate : float
        Axial sampling rate in Hz; must exceed twice the center frequency.
    center_frequency : float
        Transducer center frequency in Hz.
    axial_spacing, lateral_spacing : float
        Physical pitch in mm per sample / mm per line.
    """

    samples: np.ndarray
    sampling_rate: float
    center_frequency: float
    axial_spacing: float
    lateral_spacing: float
    frame_id: str = "frame"

    def __post_init__(self):
        self.samples = np.asarray(self.samples)
        if self.samples.dtype != np.int16:
            self.samples = self.samples.astype(np.int16)
        if self.samples.ndim != 2 or self.samples.size == 0:
            raise ValueError("samples must be a non-empty 2-D grid")
        if not self.sampling_rate > 2.0 * self.center_frequency:
            raise ValueError(
                "Nyquist violation: sampling_rate %.3g Hz <= 2 x center_frequency %.3g Hz"
                % (self.sampling_rate, self.center_frequency)
            )
        if self.axial_spacing <= 0 or self.lateral_spacing <= 0:
            raise ValueError("spacings must be positive")

    @property
    def num_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def num_lines(self) -> int:
        return self.samples.shape[1]


@dataclass
class EnvelopeImage:
    """Per-line echo envelope; same shape as the source frame."""

    values: np.ndarray
    axial_spacing: float
    lateral_spacing: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.size == 0:
            raise ValueError("envelope must be a non-empty 2-D grid")
        if np.any(self.values < 0):
            raise ValueError("envelope values must be non-negative")


@dataclass
class BModeImage:
    """Log-compressed grayscale image, levels in [0, 255]."""

    pixels: np.ndarray
    axial_spacing: float
    lateral_spacing: float

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels)
        if self.pixels.dtype != np.uint8:
            if np.any(self.pixels < 0) or np.any(self.pixels > 255):
                raise ValueError("pixels must lie in [0, 255]")
            self.pixels = self.pixels.astype(np.uint8)


@dataclass
class CalibrationSet:
    """System/diffraction correction spectra and attenuation coefficient.

    ``transfer_db`` is the combined two-way transducer/electronics response
    sampled on ``frequencies_hz``.  ``diffraction_db`` has one row per entry
    of ``depths_mm``.  Both are linearly interpolated onto query grids;
    queries outside the sampled range clamp to the nearest sample.
    """

    frequencies_hz: np.ndarray
    transfer_db: np.ndarray
    depths_mm: np.ndarray
    diffraction_db: np.ndarray
    attenuation_db_per_mhz_cm: float = 0.0

    def __post_init__(self):
        self.frequencies_hz = np.asarray(self.frequencies_hz, dtype=np.float64)
        self.transfer_db = np.asarray(self.transfer_db, dtype=np.float64)
        self.depths_mm = np.asarray(self.depths_mm, dtype=np.float64)
        self.diffraction_db = np.atleast_2d(np.asarray(self.diffraction_db, dtype=np.float64))
        if self.frequencies_hz.ndim != 1 or len(self.frequencies_hz) < 2:
            raise FrameFormatError("calibration needs at least two frequency samples")
        if np.any(np.diff(self.frequencies_hz) <= 0):
            raise FrameFormatError("calibration frequency axis must be strictly increasing")
        if self.transfer_db.shape != self.frequencies_hz.shape:
            raise FrameFormatError("transfer_db length does not match frequency axis")
        if self.diffraction_db.shape != (len(self.depths_mm), len(self.frequencies_hz)):
            raise FrameFormatError("diffraction_db must be depths x frequencies")
        if self.attenuation_db_per_mhz_cm < 0:
            raise FrameFormatError("attenuation coefficient must be >= 0")

    def covers(self, f_lo_hz: float, f_hi_hz: float) -> bool:
        return self.frequencies_hz[0] <= f_lo_hz and self.frequencies_hz[-1] >= f_hi_hz

    def transfer_at(self, freqs_hz) -> np.ndarray:
        return np.interp(freqs_hz, self.frequencies_hz, self.transfer_db)

    def diffraction_at(self, depth_mm: float, freqs_hz) -> np.ndarray:
        d = np.clip(depth_mm, self.depths_mm[0], self.depths_mm[-1])
        k = np.searchsorted(self.depths_mm, d, side="right") - 1
        k = min(max(k, 0), len(self.depths_mm) - 2) if len(self.depths_mm) > 1 else 0
        row_lo = np.interp(freqs_hz, self.frequencies_hz, self.diffraction_db[k])
        if len(self.depths_mm) == 1:
            return row_lo
        row_hi = np.interp(freqs_hz, self.frequencies_hz, self.diffraction_db[k + 1])
        span = self.depths_mm[k + 1] - self.depths_mm[k]
        t = 0.0 if span == 0 else (d - self.depths_mm[k]) / span
        return (1.0 - t) * row_lo + t * row_hi

    @classmethod
    def flat(cls, f_lo_hz: float, f_hi_hz: float, attenuation_db_per_mhz_cm: float = 0.0):
        """All-zero calibration covering [f_lo, f_hi]; useful default."""
        freqs = np.array([0.0, max(f_hi_hz * 2.0, f_lo_hz + 1.0)])
        return cls(
            frequencies_hz=freqs,
            transfer_db=np.zeros(2),
            depths_mm=np.array([0.0]),
            diffraction_db=np.zeros((1, 2)),
            attenuation_db_per_mhz_cm=attenuation_db_per_mhz_cm,
        )

    def to_json_dict(self) -> dict:
        return {
            "frequencies_hz": self.frequencies_hz.tolist(),
            "transfer_db": self.transfer_db.tolist(),
            "depths_mm": self.depths_mm.tolist(),
            "diffraction_db": self.diffraction_db.tolist(),
            "attenuation_db_per_mhz_cm": float(self.attenuation_db_per_mhz_cm),
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "CalibrationSet":
        try:
            return cls(
                frequencies_hz=obj["frequencies_hz"],
                transfer_db=obj["transfer_db"],
                depths_mm=obj["depths_mm"],
                diffraction_db=obj["diffraction_db"],
                attenuation_db_per_mhz_cm=float(obj["attenuation_db_per_mhz_cm"]),
            )
        except KeyError as exc:
            raise FrameFormatError(f"calibration file missing key {exc}") from exc


def load_calibration(path) -> CalibrationSet:
    with open(path) as fh:
        return CalibrationSet.from_json_dict(json.load(fh))


def save_calibration(cal: CalibrationSet, path) -> None:
    with open(path, "w") as fh:
        json.dump(cal.to_json_dict(), fh)


def _parse_header(raw: bytes) -> dict:
    try:
        header = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FrameFormatError(f"malformed header: {exc}") from exc
    if not isinstance(header, dict):
        raise FrameFormatError("malformed header: not a JSON object")
    out = {}
    for key, typ in _HEADER_FIELDS.items():
        if key not in header:
            raise FrameFormatError(f"malformed header: missing key '{key}'")
        try:
            out[key] = typ(header[key])
        except (TypeError, ValueError) as exc:
            raise FrameFormatError(f"malformed header: bad value for '{key}'") from exc
    return out


def _read_container(path: Path) -> tuple[bytes, bytes]:
    if path.is_dir():
        hdr = path / HEADER_NAME
        bin_ = path / PAYLOAD_NAME
        if not hdr.is_file() or not bin_.is_file():
            raise FrameFormatError(f"container {path} lacks {HEADER_NAME} or {PAYLOAD_NAME}")
        return hdr.read_bytes(), bin_.read_bytes()
    if zipfile.is_zipfile(path):
        with zipfile.ZipFile(path) as zf:
            names = set(zf.namelist())
            if HEADER_NAME not in names or PAYLOAD_NAME not in names:
                raise FrameFormatError(f"zip container {path} lacks {HEADER_NAME} or {PAYLOAD_NAME}")
            return zf.read(HEADER_NAME), zf.read(PAYLOAD_NAME)
    raise FrameFormatError(f"{path} is neither a container directory nor a zip file")


def load_rf_frame(container_path) -> RFFrame:
    """Load an RF frame from a container directory or zip.

    Raises ``FrameFormatError`` on malformed headers or when the payload
    length disagrees with the declared geometry, and ``ValueError`` on
    Nyquist violations.
    """
    header_raw, payload = _read_container(Path(container_path))
    header = _parse_header(header_raw)
    spl, nl = header["samples_per_line"], header["num_lines"]
    if spl <= 0 or nl <= 0:
        raise FrameFormatError("malformed header: non-positive geometry")
    expected = spl * nl * 2
    if len(payload) != expected:
        raise FrameFormatError(
            f"sample count mismatch: header declares {spl * nl} samples "
            f"({expected} bytes) but payload holds {len(payload)} bytes"
        )
    flat = np.frombuffer(payload, dtype="<i2")
    samples = flat.reshape(nl, spl).T.copy()
    return RFFrame(
        samples=samples,
        sampling_rate=header["sampling_rate_hz"],
        center_frequency=header["center_frequency_hz"],
        axial_spacing=header["axial_spacing_mm"],
        lateral_spacing=header["lateral_spacing_mm"],
        frame_id=header["frame_id"],
    )


def save_rf_frame(frame: RFFrame, container_path) -> Path:
    """Write a frame as a container; a ``.zip`` suffix selects zip output."""
    path = Path(container_path)
    header = {
        "samples_per_line": frame.num_samples,
        "num_lines": frame.num_lines,
        "sampling_rate_hz": frame.sampling_rate,
        "center_frequency_hz": frame.center_frequency,
        "axial_spacing_mm": frame.axial_spacing,
        "lateral_spacing_mm": frame.lateral_spacing,
        "frame_id": frame.frame_id,
    }
    payload = np.ascontiguousarray(frame.samples.T.astype("<i2")).tobytes()
    header_raw = json.dumps(header, sort_keys=True).encode("utf-8")
    if path.suffix == ".zip":
        path.parent.mkdir(parents=True, exist_ok=True)
        with zipfile.ZipFile(path, "w") as zf:
            zf.writestr(HEADER_NAME, header_raw)
            zf.writestr(PAYLOAD_NAME, payload)
    else:
        path.mkdir(parents=True, exist_ok=True)
        (path / HEADER_NAME).write_bytes(header_raw)
        (path / PAYLOAD_NAME).write_bytes(payload)
    return path


def detect_envelope(frame: RFFrame) -> EnvelopeImage:
    """Analytic-signal magnitude of each A-line (frequency-domain Hilbert)."""
    analytic = hilbert(frame.samples.astype(np.float64), axis=0)
    return EnvelopeImage(
        values=np.abs(analytic),
        axial_spacing=frame.axial_spacing,
        lateral_spacing=frame.lateral_spacing,
    )


def form_bmode(env: EnvelopeImage, dynamic_range_db: float = 50.0) -> BModeImage:
    """Log-compress an envelope onto [0, 255].

    0 dB (the envelope maximum) maps to 255 and -dynamic_range_db maps to 0;
    values are rounded half-up.
    """
    if dynamic_range_db <= 0:
        raise ValueError("dynamic_range_db must be positive")
    peak = env.values.max()
    if peak == 0:
        raise ValueError("empty image: all-zero envelope")
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(env.values / peak)
    db = np.maximum(db, -dynamic_range_db)
    pixels = np.floor((db + dynamic_range_db) / dynamic_range_db * 255.0 + 0.5)
    pixels = np.clip(pixels, 0, 255).astype(np.uint8)
    return BModeImage(
        pixels=pixels,
        axial_spacing=env.axial_spacing,
        lateral_spacing=env.lateral_spacing,
    )
