"""Empirical mode decomposition of envelope lines.

Sifting follows Huang's procedure: detect extrema, interpolate upper and
lower envelopes through them with natural cubic splines, subtract the
envelope mean, and repeat until the proto-IMF is acceptable.  A proto-IMF
is accepted when all of the following hold:

* the normalized squared sift change  sum(m^2)/sum(h^2)  falls below
  ``sift_sd_threshold`` (the classic SD rule, with m the envelope mean),
* the recomputed envelope mean is small:  mean|m| <= threshold * RMS of
  the signal being decomposed,
* extrema and zero-crossing counts differ by at most one.

Sifting is capped at ``max_sift_iterations``.  Decomposition stops early
when the running residue is monotone or has fewer than two maxima or two
minima, so short or trend-only signals yield no IMFs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline


@dataclass
class EmdParams:
    num_imfs: int = 4
    max_sift_iterations: int = 50
    sift_sd_threshold: float = 0.05

    def __post_init__(self):
        if self.num_imfs < 1:
            raise ValueError("num_imfs must be >= 1")
        if self.max_sift_iterations < 1:
            raise ValueError("max_sift_iterations must be >= 1")
        if self.sift_sd_threshold <= 0:
            raise ValueError("sift_sd_threshold must be positive")


@dataclass
class Decomposition:
    """IMFs plus residue; their sum reconstructs the input exactly."""

    imfs: list
    residue: np.ndarray

    @property
    def num_imfs(self) -> int:
        return len(self.imfs)

    def reconstruct(self) -> np.ndarray:
        out = self.residue.copy()
        for imf in self.imfs:
            out += imf
        return out


def find_extrema(signal) -> tuple[np.ndarray, np.ndarray]:
    """Indices of strict local maxima and minima.

    Flat plateaus contribute a single extremum at their midpoint index,
    ties broken toward the lower index.
    """
    y = np.asarray(signal, dtype=np.float64)
    if y.ndim != 1 or y.size < 3:
        raise ValueError("signal must be 1-D with length >= 3")
    d = np.diff(y)
    nz = np.nonzero(d)[0]
    empty = np.array([], dtype=np.int64)
    if nz.size < 2:
        return empty, empty
    s = np.sign(d[nz])
    chg = np.nonzero(s[:-1] != s[1:])[0]
    if chg.size == 0:
        return empty, empty
    start = nz[chg] + 1
    end = nz[chg + 1]
    mid = (start + end) // 2
    rising = s[chg] > 0
    return mid[rising], mid[~rising]


def _envelope_through(y: np.ndarray, knots: np.ndarray, side: int = 0) -> np.ndarray:
    """Natural cubic spline through (index, value) knots over the full axis.

    With three or more knots the two extrema nearest each signal end are
    mirrored across that end before splining; with exactly two knots the
    envelope degenerates to the line through them.  ``side`` anchors a
    signal endpoint as an extra knot when it overshoots the envelope
    (+1: endpoint above the first/last maximum, -1: below the minimum),
    which keeps boundary humps from riding outside the envelope mean.
    """
    n = len(y)
    t = np.asarray(knots, dtype=np.float64)
    v = y[knots]
    grid = np.arange(n, dtype=np.float64)
    if side != 0 and len(t) >= 2:
        if t[0] > 0 and (y[0] - v[0]) * side > 0:
            t = np.concatenate([[0.0], t])
            v = np.concatenate([[y[0]], v])
        if t[-1] < n - 1 and (y[-1] - v[-1]) * side > 0:
            t = np.concatenate([t, [float(n - 1)]])
            v = np.concatenate([v, [y[-1]]])
    if len(t) == 2:
        slope = (v[1] - v[0]) / (t[1] - t[0])
        return v[0] + slope * (grid - t[0])
    left_t, left_v = [], []
    for k in (1, 0):
        refl = -t[k]
        if refl < t[0]:
            left_t.append(refl)
            left_v.append(v[k])
    right_t, right_v = [], []
    for k in (-1, -2):
        refl = 2.0 * (n - 1) - t[k]
        if refl > t[-1]:
            right_t.append(refl)
            right_v.append(v[k])
    tt = np.concatenate([left_t, t, right_t])
    vv = np.concatenate([left_v, v, right_v])
    return CubicSpline(tt, vv, bc_type="natural")(grid)


def spline_envelopes(signal, maxima, minima) -> tuple[np.ndarray, np.ndarray]:
    """Upper and lower spline envelopes through the extrema."""
    y = np.asarray(signal, dtype=np.float64)
    maxima = np.asarray(maxima, dtype=np.int64)
    minima = np.asarray(minima, dtype=np.int64)
    if len(maxima) < 2 or len(minima) < 2:
        raise ValueError("need at least two maxima and two minima")
    return _envelope_through(y, maxima, side=+1), _envelope_through(y, minima, side=-1)


def _zero_crossings(y: np.ndarray) -> int:
    s = np.sign(y)
    s = s[s != 0]
    if s.size < 2:
        return 0
    return int(np.count_nonzero(s[:-1] != s[1:]))


def _imf_property_holds(h: np.ndarray, n_extrema: int) -> bool:
    return abs(n_extrema - _zero_crossings(h)) <= 1


def _sift(x: np.ndarray, params: EmdParams, rms0: float) -> np.ndarray | None:
    """Extract one IMF from ``x``; None when decomposition must stop."""
    h = x.copy()
    for k in range(params.max_sift_iterations):
        maxima, minima = find_extrema(h)
        n_ext = len(maxima) + len(minima)
        if len(maxima) < 2 or len(minima) < 2:
            if k > 0 and _imf_property_holds(h, n_ext):
                return h
            return None
        upper = _envelope_through(h, maxima, side=+1)
        lower = _envelope_through(h, minima, side=-1)
        m = 0.5 * (upper + lower)
        denom = float(np.sum(h * h))
        sd = float(np.sum(m * m)) / denom if denom > 0 else 0.0
        if (
            sd < params.sift_sd_threshold
            and float(np.mean(np.abs(m))) <= params.sift_sd_threshold * rms0
            and _imf_property_holds(h, n_ext)
        ):
            return h
        h = h - m
    return h


def decompose(signal, params: EmdParams | None = None) -> Decomposition:
    """Decompose a 1-D signal into up to ``num_imfs`` IMFs plus residue.

    Short or monotone signals return ``imfs=[]`` and ``residue == signal``.
    The decomposition is deterministic.
    """
    if params is None:
        params = EmdParams()
    y = np.asarray(signal, dtype=np.float64)
    if y.ndim != 1:
        raise ValueError("signal must be 1-D")
    if y.size < 4:
        return Decomposition(imfs=[], residue=y.copy())
    rms0 = float(np.sqrt(np.mean(y * y)))
    if rms0 == 0.0:
        return Decomposition(imfs=[], residue=y.copy())
    residue = y.copy()
    imfs = []
    for _ in range(params.num_imfs):
        imf = _sift(residue, params, rms0)
        if imf is None:
            break
        imfs.append(imf)
        residue = residue - imf
    return Decomposition(imfs=imfs, residue=residue)


def residue_image(grid, params: EmdParams | None = None) -> np.ndarray:
    """Per-line EMD residue of a 2-D grid (one decomposition per column)."""
    if params is None:
        params = EmdParams()
    x = np.asarray(grid, dtype=np.float64)
    if x.ndim != 2 or x.size == 0:
        raise ValueError("grid must be a non-empty 2-D array")
    out = np.empty_like(x)
    for j in range(x.shape[1]):
        out[:, j] = decompose(x[:, j], params).residue
    return out
