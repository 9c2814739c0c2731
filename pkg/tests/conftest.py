import numpy as np
import pytest

from sonoseg.frame_io import RFFrame


def raster_disk(radius: float, size: int, center=None) -> np.ndarray:
    """Boolean disk over pixel centers (pixel (r, c) center at r+0.5, c+0.5)."""
    if center is None:
        center = (size / 2.0, size / 2.0)
    y, x = np.mgrid[:size, :size]
    return (x + 0.5 - center[1]) ** 2 + (y + 0.5 - center[0]) ** 2 <= radius**2


def raster_ellipse(semi_lat: float, semi_ax: float, size: int) -> np.ndarray:
    y, x = np.mgrid[:size, :size]
    c = size / 2.0
    return ((x + 0.5 - c) / semi_lat) ** 2 + ((y + 0.5 - c) / semi_ax) ** 2 <= 1.0


def raster_polygon(vertices: np.ndarray, size: int) -> np.ndarray:
    """Rasterize a (row, col) polygon over pixel centers."""
    from matplotlib.path import Path

    y, x = np.mgrid[:size, :size]
    pts = np.stack([y.ravel() + 0.5, x.ravel() + 0.5], axis=1)
    return Path(vertices).contains_points(pts).reshape(size, size)


def star_polygon(size: int = 512, spikes: int = 8, r_inner: float = 80, r_outer: float = 200):
    angles = np.linspace(0, 2 * np.pi, 2 * spikes, endpoint=False)
    radii = np.where(np.arange(2 * spikes) % 2 == 0, r_outer, r_inner)
    return np.stack(
        [size / 2 + radii * np.sin(angles), size / 2 + radii * np.cos(angles)], axis=1
    )


def tone_frame(
    num_samples=256,
    num_lines=4,
    sampling_rate=40e6,
    center_frequency=10e6,
    amplitude=1000.0,
) -> RFFrame:
    t = np.arange(num_samples) / sampling_rate
    line = amplitude * np.sin(2 * np.pi * center_frequency * t)
    samples = np.tile(line[:, None], (1, num_lines))
    return RFFrame(
        samples=samples.astype(np.int16),
        sampling_rate=sampling_rate,
        center_frequency=center_frequency,
        axial_spacing=0.01925,
        lateral_spacing=0.2,
        frame_id="tone",
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
