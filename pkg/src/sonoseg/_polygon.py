"""Polygon helpers for binary-mask measurement.

Two boundary representations are used.  The Moore-neighbor contour is the
ordered sequence of boundary *pixels* and is what re-rasterizes back to the
mask.  The crack polygon follows the pixel-edge lattice around the region,
so its shoelace area equals the pixel count exactly; smoothing it with a
short circular moving average removes the staircase direction quantization
that otherwise biases perimeter estimates by several percent.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import uniform_filter1d

# (row, col) Moore neighborhood in clockwise screen order starting west.
_MOORE = np.array(
    [(0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1)],
    dtype=np.int64,
)

PERIMETER_SMOOTHING_WINDOW = 9


def moore_contour(mask: np.ndarray) -> np.ndarray:
    """Ordered closed boundary pixels of a connected region, shape (n, 2).

    Standard Moore-neighbor tracing with Jacob's stopping criterion; the
    start pixel is the uppermost-leftmost region pixel.
    """
    fg = np.asarray(mask, dtype=bool)
    rows, cols = np.nonzero(fg)
    if rows.size == 0:
        raise ValueError("mask is empty")
    start = (int(rows[0]), int(cols[np.argmin(cols[rows == rows[0]])]))

    def at(p):
        r, c = p
        return 0 <= r < fg.shape[0] and 0 <= c < fg.shape[1] and fg[r, c]

    contour = [start]
    backtrack_dir = 0  # index into _MOORE of the pixel we came from (west)
    current = start
    first_move = None
    for _ in range(4 * fg.size + 8):
        found = False
        for step in range(8):
            k = (backtrack_dir + step) % 8
            cand = (current[0] + _MOORE[k][0], current[1] + _MOORE[k][1])
            if at(cand):
                if current == start:
                    if first_move is None:
                        first_move = k
                    elif k == first_move and len(contour) > 1:
                        return np.array(contour[:-1], dtype=np.int64)
                contour.append(cand)
                # new backtrack: direction from cand toward the last bg pixel
                prev = (backtrack_dir + step - 1) % 8
                back_pixel = (current[0] + _MOORE[prev][0], current[1] + _MOORE[prev][1])
                d = (back_pixel[0] - cand[0], back_pixel[1] - cand[1])
                backtrack_dir = int(np.nonzero((_MOORE == d).all(axis=1))[0][0])
                current = cand
                found = True
                break
        if not found:
            return np.array([start], dtype=np.int64)  # isolated pixel
    return np.array(contour[:-1], dtype=np.int64)


_DIRS = {"R": (0, 1), "D": (1, 0), "L": (0, -1), "U": (-1, 0)}
_RIGHT_OF = {"R": "D", "D": "L", "L": "U", "U": "R"}
_LEFT_OF = {"R": "U", "U": "L", "L": "D", "D": "R"}


def crack_polygon(mask: np.ndarray) -> np.ndarray:
    """Outer pixel-edge boundary of a connected region, shape (n, 2) float.

    Vertices are corner-lattice points in (row, col) units; pixel (r, c)
    occupies [r, r+1] x [c, c+1].  The walk keeps the region on its right,
    turning right first at saddle corners, so 8-connected pinches trace as
    one loop.  abs(shoelace area) of the result equals the pixel count.
    """
    fg = np.asarray(mask, dtype=bool)
    rows, cols = np.nonzero(fg)
    if rows.size == 0:
        raise ValueError("mask is empty")
    r0 = int(rows.min())
    c0 = int(cols[rows == r0].min())

    def pix(r, c):
        return 0 <= r < fg.shape[0] and 0 <= c < fg.shape[1] and fg[r, c]

    def valid(corner, d):
        r, c = corner
        if d == "R":
            return pix(r, c) and not pix(r - 1, c)
        if d == "D":
            return pix(r, c - 1) and not pix(r, c)
        if d == "L":
            return pix(r - 1, c - 1) and not pix(r, c - 1)
        return pix(r - 1, c) and not pix(r - 1, c - 1)  # U

    start = (r0, c0)
    direction = "R"
    vertices = [start]
    corner = start
    for _ in range(4 * fg.size + 8):
        dr, dc = _DIRS[direction]
        corner = (corner[0] + dr, corner[1] + dc)
        if corner == start:
            break
        vertices.append(corner)
        for cand in (_RIGHT_OF[direction], direction, _LEFT_OF[direction]):
            if valid(corner, cand):
                direction = cand
                break
        else:
            raise RuntimeError("crack walk stuck; mask is not a connected region")
    return np.array(vertices, dtype=np.float64)


def smooth_closed_polygon(poly: np.ndarray, window: int = PERIMETER_SMOOTHING_WINDOW) -> np.ndarray:
    """Circular moving average of the vertices of a closed polygon."""
    if len(poly) <= window:
        return poly.copy()
    return uniform_filter1d(poly, size=window, axis=0, mode="wrap")


def polygon_perimeter(poly: np.ndarray) -> float:
    d = np.diff(np.vstack([poly, poly[:1]]), axis=0)
    return float(np.hypot(d[:, 0], d[:, 1]).sum())


def polygon_area(poly: np.ndarray) -> float:
    x = poly[:, 1]
    y = poly[:, 0]
    return float(abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))) / 2.0)


def convex_hull(points: np.ndarray) -> np.ndarray:
    """Convex hull vertices (Andrew monotone chain); degenerates gracefully."""
    pts = np.unique(np.asarray(points, dtype=np.float64), axis=0)
    if len(pts) <= 2:
        return pts
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def max_pairwise_distance(points: np.ndarray) -> float:
    """Maximum Feret diameter of a point set (via its convex hull)."""
    hull = convex_hull(points)
    if len(hull) < 2:
        return 0.0
    diff = hull[:, None, :] - hull[None, :, :]
    return float(np.sqrt((diff**2).sum(axis=2)).max())


def pixel_corners(pixels: np.ndarray) -> np.ndarray:
    """All four corner-lattice points of each pixel in an (n, 2) index array."""
    p = np.asarray(pixels, dtype=np.float64)
    offsets = np.array([(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)])
    return (p[:, None, :] + offsets[None, :, :]).reshape(-1, 2)
