"""Monte Carlo coverage sets, coverage areas, redundancy and gamma-coverage.

A location x is in sensor i's coverage set when it lies in i's (translated)
radial support and either belongs to i's own body or the segment from the
sensor to x meets no other object except possibly at x itself. The sensor's
own body never blocks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from . import _kernels
from .geometry import (EPS, Disc, Omni, PlacedShape, Point2, RadialSupport, ShapeArrays, pack_shapes,
                       point_in_shape, points_in_shape, support_contains)
from .pointprocess import Window

NBINS = 1024
DEFAULT_RESOLUTION = 0.25


@dataclass(frozen=True)
class SensorMark:
    offset: Point2
    support: RadialSupport


@dataclass(frozen=True)
class MarkedObject:
    id: int
    placed: PlacedShape
    sensor: Optional[SensorMark] = None

    def __post_init__(self):
        if self.sensor is not None:
            c = self.placed.center
            pos = Point2(c[0] + self.sensor.offset[0], c[1] + self.sensor.offset[1])
            if not point_in_shape(pos, self.placed):
                raise ValueError(f"sensor offset of object {self.id} lies outside its body")

    @property
    def is_sensor(self) -> bool:
        return self.sensor is not None

    @property
    def sensor_position(self) -> Point2:
        c = self.placed.center
        off = self.sensor.offset if self.sensor is not None else (0.0, 0.0)
        return Point2(c[0] + off[0], c[1] + off[1])


@dataclass(frozen=True)
class EnvironmentSnapshot:
    objects: tuple
    window: Window

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        ids = [o.id for o in self.objects]
        if len(set(ids)) != len(ids):
            raise ValueError("object ids must be unique")

    @cached_property
    def index(self) -> dict:
        return {o.id: i for i, o in enumerate(self.objects)}

    @cached_property
    def shapes(self) -> ShapeArrays:
        return pack_shapes([o.placed for o in self.objects])

    @cached_property
    def sensor_ids(self) -> tuple:
        return tuple(o.id for o in self.objects if o.is_sensor)

    @cached_property
    def sensor_table(self) -> tuple[np.ndarray, np.ndarray]:
        """Sensor positions and omni ranges (NaN for other support kinds), indexed like objects."""
        pos = np.zeros((len(self.objects), 2))
        rmax = np.full(len(self.objects), np.nan)
        for k, o in enumerate(self.objects):
            pos[k] = o.sensor_position
            if o.is_sensor and isinstance(o.sensor.support, Omni):
                rmax[k] = o.sensor.support.r_max
        return pos, rmax

    def get(self, obj_id: int) -> MarkedObject:
        try:
            return self.objects[self.index[obj_id]]
        except KeyError:
            raise ValueError(f"unknown object id {obj_id}") from None

    def sensor(self, obj_id: int) -> MarkedObject:
        o = self.get(obj_id)
        if not o.is_sensor:
            raise ValueError(f"object {obj_id} carries no sensor")
        return o


@dataclass(frozen=True)
class DiscROI:
    center: Point2
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("region of interest needs a positive radius")

    @property
    def half_extent(self) -> tuple[float, float]:
        return self.radius, self.radius

    def contains(self, x, y):
        return np.hypot(np.asarray(x) - self.center[0], np.asarray(y) - self.center[1]) <= self.radius

    @property
    def area(self) -> float:
        return math.pi * self.radius ** 2


@dataclass(frozen=True)
class DiscStripROI:
    center: Point2
    radius: float
    strip_half_width: float

    def __post_init__(self):
        if not (self.radius > 0 and self.strip_half_width > 0):
            raise ValueError("region of interest needs positive radius and strip width")

    @property
    def half_extent(self) -> tuple[float, float]:
        return self.radius, min(self.radius, self.strip_half_width)

    def contains(self, x, y):
        dy = np.asarray(y) - self.center[1]
        return (np.hypot(np.asarray(x) - self.center[0], dy) <= self.radius) & (np.abs(dy) <= self.strip_half_width)

    @property
    def area(self) -> float:
        from .analytics import disc_strip_area
        return disc_strip_area(self.radius, self.strip_half_width)


RegionOfInterest = Union[DiscROI, DiscStripROI]


@dataclass
class CoverageGrid:
    """Per-cell redundancy counts on a regular grid of cell centres.

    ``origin`` is the lower-left corner; cell (row, col) has its centre at
    ``origin + ((col + 0.5) * res, (row + 0.5) * res)``.
    """

    origin: Point2
    resolution: float
    counts: np.ndarray
    occupied_mask: np.ndarray
    roi_mask: np.ndarray = field(default=None)

    @property
    def cell_area(self) -> float:
        return self.resolution ** 2

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        ny, nx = self.counts.shape
        xs = self.origin[0] + (np.arange(nx) + 0.5) * self.resolution
        ys = self.origin[1] + (np.arange(ny) + 0.5) * self.resolution
        return np.meshgrid(xs, ys)

    def area_at_least(self, gamma: int) -> float:
        return float(np.count_nonzero((self.counts >= gamma) & self.roi_mask)) * self.cell_area

    @property
    def roi_area(self) -> float:
        return float(np.count_nonzero(self.roi_mask)) * self.cell_area


def roi_grid(roi: RegionOfInterest, resolution: float):
    """Cell-centre coordinates and ROI mask covering the ROI's bounding box."""
    if not resolution > 0:
        raise ValueError("resolution must be positive")
    hx, hy = roi.half_extent
    nx = max(1, int(math.ceil(2 * hx / resolution - 1e-9)))
    ny = max(1, int(math.ceil(2 * hy / resolution - 1e-9)))
    origin = Point2(roi.center[0] - nx * resolution / 2, roi.center[1] - ny * resolution / 2)
    xs = origin[0] + (np.arange(nx) + 0.5) * resolution
    ys = origin[1] + (np.arange(ny) + 0.5) * resolution
    gx, gy = np.meshgrid(xs, ys)
    return origin, gx, gy, roi.contains(gx, gy)


def occupied_mask(env: EnvironmentSnapshot, origin, resolution: float, shape: tuple) -> np.ndarray:
    ny, nx = shape
    occ = np.zeros(shape, dtype=bool)
    for o in env.objects:
        c = o.placed.center
        ext = o.placed.shape.circumradius
        if ext <= 0:
            continue
        c0 = max(0, int((c[0] - ext - origin[0]) / resolution))
        c1 = min(nx, int((c[0] + ext - origin[0]) / resolution) + 1)
        r0 = max(0, int((c[1] - ext - origin[1]) / resolution))
        r1 = min(ny, int((c[1] + ext - origin[1]) / resolution) + 1)
        if c0 >= c1 or r0 >= r1:
            continue
        xs = origin[0] + (np.arange(c0, c1) + 0.5) * resolution
        ys = origin[1] + (np.arange(r0, r1) + 0.5) * resolution
        gx, gy = np.meshgrid(xs, ys)
        occ[r0:r1, c0:c1] |= points_in_shape(gx, gy, o.placed)
    return occ


def visible_cells(env: EnvironmentSnapshot, sensor_index: int, xs, ys) -> np.ndarray:
    """Membership of points (xs, ys) in the coverage set of ``env.objects[sensor_index]``."""
    obj = env.objects[sensor_index]
    sx, sy = obj.sensor_position
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    out = support_contains(obj.sensor.support, xs - sx, ys - sy)
    own = points_in_shape(xs, ys, obj.placed)
    todo = out & ~own
    if todo.any():
        tx = np.ascontiguousarray(xs[todo])
        ty = np.ascontiguousarray(ys[todo])
        ex = np.full(tx.size, -1, dtype=np.int64)
        vis = _kernels.los_batch(float(sx), float(sy), tx, ty, ex, sensor_index, False,
                                 *env.shapes.args(), NBINS, EPS)
        out[todo] = vis
    return out


def coverage_set(env: EnvironmentSnapshot, sensor_id: int, roi: RegionOfInterest,
                 resolution: float = DEFAULT_RESOLUTION) -> CoverageGrid:
    env.sensor(sensor_id)
    origin, gx, gy, mask = roi_grid(roi, resolution)
    counts = np.zeros(gx.shape, dtype=np.int32)
    idx = env.index[sensor_id]
    counts[mask] = visible_cells(env, idx, gx[mask], gy[mask])
    return CoverageGrid(origin, resolution, counts, occupied_mask(env, origin, resolution, gx.shape), mask)


def coverage_area(env: EnvironmentSnapshot, sensor_id: int, roi: RegionOfInterest,
                  resolution: float = DEFAULT_RESOLUTION) -> float:
    return coverage_set(env, sensor_id, roi, resolution).area_at_least(1)


def _check_collaborators(env: EnvironmentSnapshot, K: Iterable[int]) -> list:
    ids = sorted(set(K))
    for i in ids:
        env.sensor(i)
    return ids


def viewers(env: EnvironmentSnapshot, K: Iterable[int], x) -> np.ndarray:
    """Boolean per collaborator (in sorted id order): does it see location x?"""
    ids = _check_collaborators(env, K)
    if not ids:
        return np.zeros(0, dtype=bool)
    idx = np.array([env.index[i] for i in ids], dtype=np.int64)
    return viewers_by_index(env, idx, x)


def viewers_by_index(env: EnvironmentSnapshot, idx: np.ndarray, x) -> np.ndarray:
    """``viewers`` for sensor indices into env.objects (no id validation)."""
    x0, y0 = float(x[0]), float(x[1])
    pos_all, rmax_all = env.sensor_table
    pos = pos_all[idx]
    rmax = rmax_all[idx]
    ddx = x0 - pos[:, 0]
    ddy = y0 - pos[:, 1]
    in_sup = np.hypot(ddx, ddy) <= rmax + EPS
    other = np.flatnonzero(np.isnan(rmax))
    for j in other:
        in_sup[j] = bool(support_contains(env.objects[idx[j]].sensor.support, ddx[j], ddy[j]))
    cand = np.flatnonzero(in_sup)
    seen = np.zeros(idx.size, dtype=bool)
    if cand.size == 0:
        return seen
    args = env.shapes.args()
    own = _kernels.point_in_each(x0, y0, idx[cand], *args[:-1], EPS)
    seen[cand[own]] = True
    todo = cand[~own]
    if todo.size:
        vis = _kernels.los_batch(x0, y0, np.ascontiguousarray(pos[todo, 0]), np.ascontiguousarray(pos[todo, 1]),
                                 idx[todo], -1, True, *args, NBINS, EPS)
        seen[todo] = vis
    return seen


def redundancy_at(env: EnvironmentSnapshot, collaborators: Iterable[int], x) -> int:
    """Number of collaborators whose coverage set contains x (exact LOS, no raster)."""
    return int(viewers(env, collaborators, x).sum())


def accumulate_sensor(env: EnvironmentSnapshot, sensor_index: int, origin, resolution: float,
                      mask: np.ndarray, counts: np.ndarray) -> None:
    """Add sensor ``sensor_index``'s coverage set to ``counts`` (cells where ``mask`` holds)."""
    o = env.objects[sensor_index]
    p = o.sensor_position
    sup = o.sensor.support
    if isinstance(sup, Omni):
        c = o.placed.center
        reach = o.placed.shape.circumradius + math.hypot(p[0] - c[0], p[1] - c[1]) + EPS
        _kernels.accumulate_visible(float(p[0]), float(p[1]), float(sup.r_max), sensor_index, reach,
                                    float(origin[0]), float(origin[1]), float(resolution), mask, counts,
                                    *env.shapes.args(), NBINS, EPS)
        return
    ny, nx = counts.shape
    xs = origin[0] + (np.arange(nx) + 0.5) * resolution
    ys = origin[1] + (np.arange(ny) + 0.5) * resolution
    gx, gy = np.meshgrid(xs, ys)
    near = mask & (np.hypot(gx - p[0], gy - p[1]) <= sup.reach + EPS)
    if near.any():
        counts[near] += visible_cells(env, sensor_index, gx[near], gy[near])


def redundancy_grid(env: EnvironmentSnapshot, K: Iterable[int], roi: RegionOfInterest,
                    resolution: float = DEFAULT_RESOLUTION) -> CoverageGrid:
    ids = _check_collaborators(env, K)
    origin, gx, gy, mask = roi_grid(roi, resolution)
    counts = np.zeros(gx.shape, dtype=np.int32)
    hx, hy = roi.half_extent
    for i in ids:
        o = env.objects[env.index[i]]
        p = o.sensor_position
        reach = o.sensor.support.reach
        if abs(p[0] - roi.center[0]) > hx + reach or abs(p[1] - roi.center[1]) > hy + reach:
            continue
        accumulate_sensor(env, env.index[i], origin, resolution, mask, counts)
    return CoverageGrid(origin, resolution, counts, occupied_mask(env, origin, resolution, gx.shape), mask)


def gamma_coverage(env: EnvironmentSnapshot, K: Iterable[int], roi: RegionOfInterest, gamma: int,
                   resolution: float = DEFAULT_RESOLUTION) -> dict:
    if gamma < 1:
        raise ValueError("gamma must be >= 1")
    grid = redundancy_grid(env, K, roi, resolution)
    area = grid.area_at_least(gamma)
    return {"area": area, "normalized": area / grid.roi_area}


def rsu_gamma_gain(env: EnvironmentSnapshot, K: Iterable[int], roi: RegionOfInterest, gamma: int,
                   gamma_rsu: int, resolution: float = DEFAULT_RESOLUTION) -> float:
    """Extra normalized gamma-coverage when infrastructure supplies ``gamma_rsu`` redundancy."""
    if gamma_rsu >= gamma:
        raise ValueError("gamma_rsu must be smaller than gamma")
    if gamma_rsu < 0:
        raise ValueError("gamma_rsu must be >= 0")
    grid = redundancy_grid(env, K, roi, resolution)
    return (grid.area_at_least(gamma - gamma_rsu) - grid.area_at_least(gamma)) / grid.roi_area


def disc_sensor(obj_id: int, center, radius: float, sensing_radius: Optional[float]) -> MarkedObject:
    """Disc object with an omni sensor at its centre (or no sensor when the radius is None)."""
    sensor = None if sensing_radius is None else SensorMark(Point2(0.0, 0.0), Omni(sensing_radius))
    return MarkedObject(obj_id, PlacedShape(Point2(float(center[0]), float(center[1])), Disc(radius)), sensor)


class SensorRaster:
    """Cell template for ROIs centred on the sensor itself.

    Cell offsets, distances and angular bins are computed once and reused for
    every sensor, which makes typical-sensor averages over many sensors cheap.
    ``area(env, i)`` equals ``coverage_area`` with the ROI centred on sensor i.
    """

    def __init__(self, radius: float, resolution: float = DEFAULT_RESOLUTION,
                 strip_half_width: Optional[float] = None):
        roi = (DiscROI(Point2(0.0, 0.0), radius) if strip_half_width is None
               else DiscStripROI(Point2(0.0, 0.0), radius, strip_half_width))
        self.roi = roi
        self.resolution = resolution
        _, gx, gy, mask = roi_grid(roi, resolution)
        dx = gx[mask]
        dy = gy[mask]
        dist, bins = _kernels.target_bins(0.0, 0.0, dx, dy, NBINS)
        order = np.lexsort((dist, bins))
        self.dx = np.ascontiguousarray(dx[order])
        self.dy = np.ascontiguousarray(dy[order])
        self.dist = np.ascontiguousarray(dist[order])
        self.bstart = np.searchsorted(bins[order], np.arange(NBINS + 1)).astype(np.int64)
        self.roi_area = self.dx.size * resolution ** 2

    def visible(self, env: EnvironmentSnapshot, sensor_index: int) -> np.ndarray:
        """Coverage mask over the template cells (in template order)."""
        obj = env.objects[sensor_index]
        sx, sy = obj.sensor_position
        sup = obj.sensor.support
        if isinstance(sup, Omni):
            c = obj.placed.center
            reach = obj.placed.shape.circumradius + math.hypot(sx - c[0], sy - c[1]) + EPS
            return _kernels.visible_sorted(float(sx), float(sy), self.dx, self.dy, self.dist, self.bstart,
                                           float(sup.r_max), sensor_index, reach, *env.shapes.args(), NBINS, EPS)
        return visible_cells(env, sensor_index, self.dx + sx, self.dy + sy)

    def area(self, env: EnvironmentSnapshot, sensor_index: int) -> float:
        return float(np.count_nonzero(self.visible(env, sensor_index))) * self.resolution ** 2
