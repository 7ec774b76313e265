"""Spatial ROI estimation and conversion of event windows to ELM input vectors."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .events import EventWindow

DEFAULT_TRIM = 0.9
DEFAULT_SMOOTH_DIST = 10.0
DEFAULT_SIDE = 60


@dataclass(frozen=True)
class RoiBox:
    """Inclusive pixel bounds."""

    x_min: int
    x_max: int
    y_min: int
    y_max: int

    def __post_init__(self):
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ValueError(f"inverted box {self}")

    @property
    def width(self) -> int:
        return self.x_max - self.x_min + 1

    @property
    def height(self) -> int:
        return self.y_max - self.y_min + 1

    def shifted(self, dx: int, dy: int) -> "RoiBox":
        return RoiBox(self.x_min + dx, self.x_max + dx, self.y_min + dy, self.y_max + dy)

    def contains(self, x, y) -> np.ndarray:
        return (x >= self.x_min) & (x <= self.x_max) & (y >= self.y_min) & (y <= self.y_max)

    def distance(self, x, y) -> np.ndarray:
        """Chebyshev distance from each point to the box (0 inside)."""
        dx = np.maximum(np.maximum(self.x_min - x, x - self.x_max), 0)
        dy = np.maximum(np.maximum(self.y_min - y, y - self.y_max), 0)
        return np.maximum(dx, dy)


@dataclass(eq=False)
class RoiResult:
    box: RoiBox
    x: np.ndarray  # retained events inside ``box``
    y: np.ndarray
    fell_back: bool = False  # smoothness prior rejected every event


def _side_bounds(v: np.ndarray, c: float, frac: float):
    # keep ceil(frac * n_side) events nearest the centroid on each side
    left = np.sort(v[v < c])[::-1]
    right = np.sort(v[v > c])
    lo = int(left[math.ceil(frac * len(left)) - 1]) if len(left) else int(v.min())
    hi = int(right[math.ceil(frac * len(right)) - 1]) if len(right) else int(v.max())
    return lo, hi


def _min_extent(lo: int, hi: int, limit: Optional[int]):
    if hi > lo:
        return lo, hi
    hi = lo + 1
    if limit is not None and hi >= limit:
        lo, hi = limit - 2, limit - 1
    return max(lo, 0), hi


def roi_from_points(
    x: np.ndarray,
    y: np.ndarray,
    trim_fraction: float = DEFAULT_TRIM,
    prev_roi: Optional[RoiBox] = None,
    smooth_dist: float = DEFAULT_SMOOTH_DIST,
    width: Optional[int] = None,
    height: Optional[int] = None,
) -> RoiResult:
    """Array form of :func:`estimate_spatial_roi`."""
    if len(x) == 0:
        raise ValueError("ROI estimation needs at least one event")
    if not 0 < trim_fraction <= 1:
        raise ValueError(f"trim_fraction must be in (0, 1], got {trim_fraction}")
    x = np.asarray(x)
    y = np.asarray(y)
    fell_back = False
    if prev_roi is not None:
        near = prev_roi.distance(x, y) <= smooth_dist
        if near.any():
            x, y = x[near], y[near]
        else:
            fell_back = True
    cx, cy = x.mean(), y.mean()
    x_lo, x_hi = _side_bounds(x, cx, trim_fraction)
    y_lo, y_hi = _side_bounds(y, cy, trim_fraction)
    x_lo, x_hi = _min_extent(x_lo, x_hi, width)
    y_lo, y_hi = _min_extent(y_lo, y_hi, height)
    box = RoiBox(x_lo, x_hi, y_lo, y_hi)
    inside = box.contains(x, y)
    return RoiResult(box, x[inside], y[inside], fell_back)


def estimate_spatial_roi(
    window: EventWindow,
    trim_fraction: float = DEFAULT_TRIM,
    prev_roi: Optional[RoiBox] = None,
    smooth_dist: float = DEFAULT_SMOOTH_DIST,
    width: Optional[int] = None,
    height: Optional[int] = None,
) -> RoiResult:
    """Fraction-trimmed rectangular ROI around the event centroid.

    With ``prev_roi`` given, events farther than ``smooth_dist`` (Chebyshev)
    outside it are discarded first. If that discards everything the prior is
    ignored and ``fell_back`` is set. Along each axis the box then keeps the
    ``trim_fraction`` of events nearest the centroid on either side. A
    degenerate axis is widened to 2 pixels.
    """
    return roi_from_points(window.x, window.y, trim_fraction, prev_roi, smooth_dist, width, height)


def binarize(x: np.ndarray, y: np.ndarray, roi: RoiBox) -> np.ndarray:
    """Rows are y, columns are x. Events outside ``roi`` are ignored."""
    img = np.zeros((roi.height, roi.width), dtype=np.uint8)
    inside = roi.contains(x, y)
    img[np.asarray(y)[inside] - roi.y_min, np.asarray(x)[inside] - roi.x_min] = 1
    return img


def _resize_rows(image: np.ndarray, side: int) -> np.ndarray:
    n = image.shape[0]
    out = image[(np.arange(side) * n) // side]
    if n > side:
        # ceil(i * side / n) is the first output that would sample row i if it were enlarging
        np.maximum.at(out, np.minimum((np.arange(n) * side + n - 1) // n, side - 1), image)
    return out


def resize_square(image: np.ndarray, side: int = DEFAULT_SIDE) -> np.ndarray:
    """Nearest-neighbour resample to ``side`` x ``side``; output stays binary.

    Axes are resampled one at a time. Every output pixel takes its nearest
    source pixel; along a shrinking axis every set source pixel also sets its
    nearest output pixel, so one-pixel edges survive instead of falling
    between sample points. Enlarging is plain pixel replication.
    """
    h, w = image.shape
    if h == 0 or w == 0:
        raise ValueError("cannot resize an empty image")
    b = (np.asarray(image) >= 0.5).astype(np.uint8)
    return _resize_rows(_resize_rows(b, side).T, side).T.copy()


def to_input_vector(image: np.ndarray) -> np.ndarray:
    """Map {0, 1} pixels to {-1, +1}, row-major."""
    return image.astype(np.float64).ravel() * 2.0 - 1.0


class RoiTracker:
    """Threads the previous ROI through successive windows of one stream."""

    def __init__(
        self,
        trim_fraction: float = DEFAULT_TRIM,
        smooth_dist: float = DEFAULT_SMOOTH_DIST,
        side: int = DEFAULT_SIDE,
        width: Optional[int] = None,
        height: Optional[int] = None,
    ):
        self.trim_fraction = trim_fraction
        self.smooth_dist = smooth_dist
        self.side = side
        self.width = width
        self.height = height
        self.prev_roi: Optional[RoiBox] = None
        self.n_fallbacks = 0

    def reset(self) -> None:
        self.prev_roi = None

    def image(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        res = roi_from_points(
            x, y, self.trim_fraction, self.prev_roi, self.smooth_dist, self.width, self.height
        )
        self.n_fallbacks += res.fell_back
        self.prev_roi = res.box
        return resize_square(binarize(res.x, res.y, res.box), self.side)

    def __call__(self, window: EventWindow) -> np.ndarray:
        """Side x side binary image for ``window``."""
        return self.image(window.x, window.y)
