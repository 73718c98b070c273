"""Exact 2-D primitives: convex shapes, segments, dilation areas and the
line-of-sight blocking predicate.

All predicates work on closed sets with an absolute tolerance of ``EPS``
metres. A segment that only touches a shape within ``EPS`` of the sensed
end point is *not* blocked, so a point on an object's near surface stays
visible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence, Union

import numpy as np

from . import _kernels

EPS = 1e-9
TWO_PI = 2.0 * math.pi


class Point2(NamedTuple):
    x: float
    y: float


class Segment(NamedTuple):
    a: Point2
    b: Point2

    @property
    def length(self) -> float:
        return math.hypot(self.b[0] - self.a[0], self.b[1] - self.a[1])


@dataclass(frozen=True)
class Disc:
    radius: float

    def __post_init__(self):
        # zero radius is allowed: point-like bodies (RSUs) never block
        if not self.radius >= 0.0:
            raise ValueError(f"disc radius must be >= 0, got {self.radius}")

    @property
    def area(self) -> float:
        return math.pi * self.radius ** 2

    @property
    def circumradius(self) -> float:
        return self.radius

    @property
    def perimeter(self) -> float:
        return TWO_PI * self.radius


@dataclass(frozen=True)
class Rect:
    half_length: float
    half_width: float
    heading: float = 0.0

    def __post_init__(self):
        if not (self.half_length > 0.0 and self.half_width > 0.0):
            raise ValueError("rectangle half-dimensions must be positive")

    @property
    def area(self) -> float:
        return 4.0 * self.half_length * self.half_width

    @property
    def circumradius(self) -> float:
        return math.hypot(self.half_length, self.half_width)

    @property
    def perimeter(self) -> float:
        return 4.0 * (self.half_length + self.half_width)


ConvexShape = Union[Disc, Rect]


@dataclass(frozen=True)
class PlacedShape:
    center: Point2
    shape: ConvexShape


# -- radial sensing supports -------------------------------------------------

def _wrap(theta):
    return np.mod(theta, TWO_PI)


@dataclass(frozen=True)
class Omni:
    r_max: float

    @property
    def reach(self) -> float:
        return self.r_max

    def range_at(self, theta):
        return np.full(np.shape(theta), self.r_max, dtype=float)


@dataclass(frozen=True)
class Sector:
    r_max: float
    center_angle: float
    width: float

    @property
    def reach(self) -> float:
        return self.r_max

    def range_at(self, theta):
        off = np.abs(_wrap(np.asarray(theta) - self.center_angle + math.pi) - math.pi)
        return np.where(off <= self.width / 2.0 + EPS, self.r_max, 0.0)


@dataclass(frozen=True)
class Piecewise:
    """r_max(theta) sampled on a uniform grid over [0, 2*pi); nearest-sample lookup."""

    radii: tuple

    def __post_init__(self):
        if len(self.radii) == 0 or min(self.radii) < 0:
            raise ValueError("piecewise support needs nonnegative samples")

    @property
    def reach(self) -> float:
        return float(max(self.radii))

    def range_at(self, theta):
        n = len(self.radii)
        k = np.rint(_wrap(np.asarray(theta)) / (TWO_PI / n)).astype(int) % n
        return np.asarray(self.radii, dtype=float)[k]


RadialSupport = Union[Omni, Sector, Piecewise]


def support_contains(support: RadialSupport, dx, dy) -> np.ndarray:
    """Membership of offsets (dx, dy) from the sensor in the radial support."""
    dx = np.asarray(dx, dtype=float)
    dy = np.asarray(dy, dtype=float)
    dist = np.hypot(dx, dy)
    if isinstance(support, Omni):
        return dist <= support.r_max + EPS
    rmax = support.range_at(np.arctan2(dy, dx))
    return (dist <= rmax + EPS) | (dist == 0.0)


# -- packed arrays for the compiled kernels ------------------------------------

@dataclass(frozen=True)
class ShapeArrays:
    kind: np.ndarray
    cx: np.ndarray
    cy: np.ndarray
    a: np.ndarray
    b: np.ndarray
    ca: np.ndarray
    sa: np.ndarray
    brad: np.ndarray

    def __len__(self):
        return self.kind.size

    def args(self):
        return (self.kind, self.cx, self.cy, self.a, self.b, self.ca, self.sa, self.brad)


def pack_shapes(shapes: Sequence[PlacedShape]) -> ShapeArrays:
    n = len(shapes)
    kind = np.zeros(n, dtype=np.int64)
    vals = np.zeros((7, n))
    for i, ps in enumerate(shapes):
        s = ps.shape
        vals[0, i], vals[1, i] = ps.center[0], ps.center[1]
        if isinstance(s, Disc):
            vals[2, i] = s.radius
            vals[4, i] = 1.0
        else:
            kind[i] = _kernels.RECT
            vals[2, i], vals[3, i] = s.half_length, s.half_width
            vals[4, i], vals[5, i] = math.cos(s.heading), math.sin(s.heading)
        vals[6, i] = s.circumradius
    return ShapeArrays(kind, *(np.ascontiguousarray(v) for v in vals))


def disc_arrays(cx, cy, radius) -> ShapeArrays:
    """Packed arrays for many equal discs, without building objects."""
    cx = np.ascontiguousarray(cx, dtype=float)
    n = cx.size
    r = np.full(n, float(radius))
    return ShapeArrays(np.zeros(n, dtype=np.int64), cx, np.ascontiguousarray(cy, dtype=float),
                       r, np.zeros(n), np.ones(n), np.zeros(n), r.copy())


def rect_arrays(cx, cy, half_length, half_width, heading=0.0) -> ShapeArrays:
    cx = np.ascontiguousarray(cx, dtype=float)
    n = cx.size
    return ShapeArrays(np.ones(n, dtype=np.int64), cx, np.ascontiguousarray(cy, dtype=float),
                       np.full(n, float(half_length)), np.full(n, float(half_width)),
                       np.full(n, math.cos(heading)), np.full(n, math.sin(heading)),
                       np.full(n, math.hypot(half_length, half_width)))


# -- operations ---------------------------------------------------------------

def segment_shape_intersects(seg: Segment, obj: PlacedShape, target_exempt: Point2 | None = None) -> bool:
    """True iff ``seg`` meets ``obj`` at some point other than the exempt target.

    The exempt point must be one of the segment end points (``seg.b`` by
    default, i.e. the sensed location).
    """
    a, b = seg
    exempt_at_origin = False
    if target_exempt is not None and not _same(target_exempt, b):
        if _same(target_exempt, a):
            exempt_at_origin = True
        else:
            raise ValueError("target_exempt must be an end point of the segment")
    p = pack_shapes([obj])
    if seg.length == 0.0:
        return False
    return bool(_kernels.seg_blocked(float(a[0]), float(a[1]), float(b[0]), float(b[1]),
                                     p.kind[0], p.cx[0], p.cy[0], p.a[0], p.b[0], p.ca[0], p.sa[0],
                                     exempt_at_origin, EPS))


def _same(p, q) -> bool:
    return abs(p[0] - q[0]) <= EPS and abs(p[1] - q[1]) <= EPS


def shape_width(shape: ConvexShape, direction: float) -> float:
    """Width of the shape measured perpendicular to ``direction``."""
    if isinstance(shape, Disc):
        return 2.0 * shape.radius
    rel = direction - shape.heading
    return 2.0 * (shape.half_length * abs(math.sin(rel)) + shape.half_width * abs(math.cos(rel)))


def minkowski_segment_dilation_area(seg_len: float, shape: ConvexShape, direction: float | None = None) -> float:
    """Area of a segment of length ``seg_len`` dilated by the reflected shape.

    For a disc of radius r this is ``pi r^2 + 2 r L``. For other convex shapes
    it is ``area + L * w`` with ``w`` the width perpendicular to ``direction``;
    without a direction the isotropic mean width (perimeter / pi) is used.
    """
    if seg_len < 0:
        raise ValueError(f"segment length must be >= 0, got {seg_len}")
    if isinstance(shape, Disc):
        return math.pi * shape.radius ** 2 + 2.0 * shape.radius * seg_len
    w = shape.perimeter / math.pi if direction is None else shape_width(shape, direction)
    return shape.area + seg_len * w


def dilation_area_mc(seg_len: float, shape: ConvexShape, n: int, rng: np.random.Generator,
                     direction: float = 0.0) -> tuple[float, float]:
    """Hit-or-miss estimate of the dilation area; returns (estimate, std error).

    A point z lies in ``l + reflected(A)`` iff the shape placed at z meets the
    segment, which is tested with the exact blocking predicate.
    """
    ext = shape.circumradius + EPS
    ux, uy = math.cos(direction), math.sin(direction)
    ex, ey = seg_len * ux, seg_len * uy
    x0, x1 = min(0.0, ex) - ext, max(0.0, ex) + ext
    y0, y1 = min(0.0, ey) - ext, max(0.0, ey) + ext
    box = (x1 - x0) * (y1 - y0)
    zx = rng.uniform(x0, x1, n)
    zy = rng.uniform(y0, y1, n)
    if isinstance(shape, Disc):
        # distance from z to the segment <= r
        t = np.clip(zx * ux + zy * uy, 0.0, seg_len)
        hit = np.hypot(zx - t * ux, zy - t * uy) <= shape.radius
    else:
        arr = rect_arrays(zx, zy, shape.half_length, shape.half_width, shape.heading)
        hit = np.array([
            _kernels.seg_blocked(0.0, 0.0, ex, ey, 1, arr.cx[i], arr.cy[i], arr.a[i], arr.b[i],
                                 arr.ca[i], arr.sa[i], False, -1.0)
            if seg_len > 0 else bool(point_in_shape(Point2(0.0, 0.0), PlacedShape(Point2(zx[i], zy[i]), shape)))
            for i in range(n)
        ])
    frac = hit.mean()
    return box * frac, box * math.sqrt(frac * (1 - frac) / n)


def point_in_shape(p: Point2, obj: PlacedShape) -> bool:
    dx = p[0] - obj.center[0]
    dy = p[1] - obj.center[1]
    s = obj.shape
    if isinstance(s, Disc):
        return math.hypot(dx, dy) <= s.radius + EPS
    c, sn = math.cos(s.heading), math.sin(s.heading)
    u = dx * c + dy * sn
    v = -dx * sn + dy * c
    return abs(u) <= s.half_length + EPS and abs(v) <= s.half_width + EPS


def points_in_shape(xs, ys, obj: PlacedShape) -> np.ndarray:
    """Vectorised ``point_in_shape``."""
    dx = np.asarray(xs, dtype=float) - obj.center[0]
    dy = np.asarray(ys, dtype=float) - obj.center[1]
    s = obj.shape
    if isinstance(s, Disc):
        return np.hypot(dx, dy) <= s.radius + EPS
    c, sn = math.cos(s.heading), math.sin(s.heading)
    return (np.abs(dx * c + dy * sn) <= s.half_length + EPS) & (np.abs(-dx * sn + dy * c) <= s.half_width + EPS)


def boundary_samples(obj: PlacedShape, k: int) -> list[Point2]:
    """``k`` points spaced uniformly by arc length on the boundary.

    Discs start at angle 0. Rectangles start at the midpoint of the front
    (+half_length) edge and run counter-clockwise, so ``k=4`` yields the four
    edge midpoints.
    """
    return [Point2(float(x), float(y)) for x, y in boundary_samples_array(obj, k)]


def boundary_samples_array(obj: PlacedShape, k: int) -> np.ndarray:
    if k < 4:
        raise ValueError("need at least 4 boundary samples")
    s = obj.shape
    cx, cy = obj.center
    if isinstance(s, Disc):
        th = TWO_PI * np.arange(k) / k
        return np.column_stack([cx + s.radius * np.cos(th), cy + s.radius * np.sin(th)])
    local = rect_boundary_local(s.half_length, s.half_width, k)
    c, sn = math.cos(s.heading), math.sin(s.heading)
    return np.column_stack([cx + local[:, 0] * c - local[:, 1] * sn,
                            cy + local[:, 0] * sn + local[:, 1] * c])


def rect_boundary_local(hl: float, hw: float, k: int) -> np.ndarray:
    """Boundary samples of an axis-aligned rectangle centred at the origin."""
    # corners in walk order starting from the front-edge midpoint
    path = np.array([[hl, 0.0], [hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw], [hl, 0.0]])
    seg = np.hypot(*np.diff(path, axis=0).T)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    s = cum[-1] * np.arange(k) / k
    j = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(seg) - 1)
    frac = (s - cum[j]) / seg[j]
    return path[j] + frac[:, None] * (path[j + 1] - path[j])
