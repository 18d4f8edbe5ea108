"""Planar geometry, map-frame conventions, and pixel/meter conversions.

Conventions, fixed once here and relied on by every other module:

- The metric frame is (x, y) in meters, x along map columns, y along map
  rows. Pixel (col, row) scales to meters (x, y) by ``meters_per_pixel``
  on both axes; row 0 is the map's north edge.
- Bearings and headings are degrees in [0, 360), measured from the +y
  axis (bearing 0, "north" in compass terms) turning clockwise toward
  +x (bearing 90).
- Distances are always 2D; altitude never enters them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class DegenerateBearingError(ValueError):
    """Bearing is undefined between two identical points."""


@dataclass(frozen=True)
class Point2D:
    """A position in meters (x along columns, y along rows)."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"point coordinates must be finite, got ({self.x}, {self.y})")


@dataclass(frozen=True)
class PixelPoint:
    """A position in pixel coordinates (col, row).

    Negative or out-of-map values are representable here; bounds are
    enforced where a point is actually attached to a map.
    """

    col: float
    row: float


@dataclass(frozen=True)
class BBox:
    """An axis-aligned pixel box with continuous corners, x1 <= x2 and y1 <= y2."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        if self.x1 > self.x2 or self.y1 > self.y2:
            raise ValueError(f"bbox corners out of order: {(self.x1, self.y1, self.x2, self.y2)}")

    @property
    def area(self) -> float:
        return (self.x2 - self.x1) * (self.y2 - self.y1)

    @property
    def center(self) -> PixelPoint:
        return PixelPoint((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)

    @staticmethod
    def from_corners(x1: float, y1: float, x2: float, y2: float) -> "BBox":
        """Build a box from corners in any order (swaps per axis as needed)."""
        if x1 > x2:
            x1, x2 = x2, x1
        if y1 > y2:
            y1, y2 = y2, y1
        return BBox(x1, y1, x2, y2)


@dataclass(frozen=True)
class MapMeta:
    """Raster dimensions and the pixel-to-meter scale of one map."""

    width: int
    height: int
    meters_per_pixel: float = 1.0

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"map dimensions must be >= 1, got {self.width}x{self.height}")
        if not (self.meters_per_pixel > 0 and math.isfinite(self.meters_per_pixel)):
            raise ValueError(f"meters_per_pixel must be positive, got {self.meters_per_pixel}")

    @property
    def extent_x(self) -> float:
        """Map width in meters."""
        return self.width * self.meters_per_pixel

    @property
    def extent_y(self) -> float:
        """Map height in meters."""
        return self.height * self.meters_per_pixel


@dataclass(frozen=True)
class Pose:
    """UAV state: planar position (meters), altitude (meters), heading (degrees)."""

    position: Point2D
    altitude: float
    heading: float

    def __post_init__(self):
        if self.altitude < 0:
            raise ValueError(f"altitude must be >= 0, got {self.altitude}")
        object.__setattr__(self, "heading", normalize_heading(self.heading))


def normalize_heading(degrees: float) -> float:
    """Wrap an angle into [0, 360)."""
    wrapped = math.fmod(degrees, 360.0)
    if wrapped < 0:
        wrapped += 360.0
    return wrapped if wrapped < 360.0 else 0.0


def heading_delta(from_deg: float, to_deg: float) -> float:
    """Signed smallest rotation from one heading to another, in (-180, 180]."""
    delta = math.fmod(to_deg - from_deg, 360.0)
    if delta > 180.0:
        delta -= 360.0
    elif delta <= -180.0:
        delta += 360.0
    return delta


def distance(a: Point2D, b: Point2D) -> float:
    """Euclidean distance in meters between two 2D points."""
    return math.hypot(a.x - b.x, a.y - b.y)


def bearing(origin: Point2D, target: Point2D) -> float:
    """Compass bearing from origin to target: 0 along +y, 90 along +x, in [0, 360)."""
    if origin == target:
        raise DegenerateBearingError(f"bearing undefined from a point to itself: {origin}")
    angle = math.degrees(math.atan2(target.x - origin.x, target.y - origin.y))
    return normalize_heading(angle)


def px_to_m(p: PixelPoint, meta: MapMeta) -> Point2D:
    """Scale pixel (col, row) to meters (x, y)."""
    return Point2D(p.col * meta.meters_per_pixel, p.row * meta.meters_per_pixel)


def m_to_px(p: Point2D, meta: MapMeta) -> PixelPoint:
    """Scale meters (x, y) to pixel (col, row)."""
    return PixelPoint(p.x / meta.meters_per_pixel, p.y / meta.meters_per_pixel)


def in_map_bounds(p: Point2D, meta: MapMeta) -> bool:
    """Whether a metric point lies inside the map extent (edges inclusive)."""
    return 0.0 <= p.x <= meta.extent_x and 0.0 <= p.y <= meta.extent_y


def clamp_to_map(p: Point2D, meta: MapMeta) -> Point2D:
    """Clamp a metric point into the map extent."""
    return Point2D(
        min(max(p.x, 0.0), meta.extent_x),
        min(max(p.y, 0.0), meta.extent_y),
    )


def point_to_bbox_distance(p: Point2D, box: BBox, meters_per_pixel: float = 1.0) -> float:
    """Distance in meters from a metric point to a pixel box (0 inside the box)."""
    bx1 = box.x1 * meters_per_pixel
    by1 = box.y1 * meters_per_pixel
    bx2 = box.x2 * meters_per_pixel
    by2 = box.y2 * meters_per_pixel
    dx = max(bx1 - p.x, 0.0, p.x - bx2)
    dy = max(by1 - p.y, 0.0, p.y - by2)
    return math.hypot(dx, dy)
