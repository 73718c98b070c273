"""Straight multi-lane freeway: generation and central-lane statistics.

Lanes are numbered from the median outwards, so lane 0 of each direction is
one of the two central lanes. Direction +1 occupies y > 0. Vehicles are
axis-aligned rectangles with an omni sensor at the centre; participation
is an independent thinning by uniform marks, so two configs that differ only
in ``p_s`` share the same vehicles and nest their sensor sets.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from functools import lru_cache
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from ._stats import ratio_stats
from .geometry import EPS, PlacedShape, Point2, Rect
from .pointprocess import Seed, Window, sample_matern_lane, uniform_marks
from .sensing_engine import (EnvironmentSnapshot, MarkedObject, Omni, SensorMark, SensorRaster, accumulate_sensor,
                      viewers_by_index)

METRICS = ("coverage_area_norm", "gamma_coverage_norm", "rsu_gain", "void_redundancy")


class EmptyEligibleSet(ValueError):
    """No reference vehicle (or void location) qualifies for a central-lane statistic."""


@dataclass(frozen=True)
class FreewayConfig:
    lanes_per_direction: int = 3
    lane_width: float = 4.0
    vehicle_length: float = 4.8
    vehicle_width: float = 1.8
    min_gap: float = 10.0
    lateral_offset_halfwidth: float = 1.0
    road_length: float = 1000.0
    target_density: float = 0.0175
    p_s: float = 1.0
    sensing_radius: float = 100.0
    roi_radius: float = 100.0
    roi_strip_halfwidth: float = 12.0
    # trimmed at each road end before ROIs may start; None means sensing_radius
    guard: Optional[float] = None
    matern_method: str = "sequential"
    seed: Seed = field(default_factory=lambda: Seed(0))

    def __post_init__(self):
        if self.lanes_per_direction < 1:
            raise ValueError("lanes_per_direction must be >= 1")
        if not (self.lane_width > 0 and self.road_length > 0):
            raise ValueError("lane_width and road_length must be positive")
        if not 0.0 <= self.p_s <= 1.0:
            raise ValueError(f"p_s must lie in [0, 1], got {self.p_s}")
        if self.target_density < 0:
            raise ValueError("target_density must be >= 0")
        if self.min_gap < self.vehicle_length:
            raise ValueError("min_gap below vehicle_length lets same-lane vehicles overlap")
        if self.lateral_offset_halfwidth + self.vehicle_width / 2 > self.lane_width / 2 + EPS:
            raise ValueError("lateral offsets can push vehicles out of their lane")
        if self.guard is not None and self.guard < 0:
            raise ValueError("guard must be >= 0")

    @property
    def lane_density(self) -> float:
        """Vehicles per metre of lane."""
        return self.target_density * self.lane_width

    @property
    def road_half_width(self) -> float:
        return self.lanes_per_direction * self.lane_width

    @property
    def guard_length(self) -> float:
        return self.sensing_radius if self.guard is None else self.guard

    def lane_center(self, lane: int, direction: int) -> float:
        return direction * (lane + 0.5) * self.lane_width

    def check_feasible(self) -> None:
        lam = self.lane_density
        if self.matern_method == "sequential" and lam * self.min_gap >= 1.0:
            raise ValueError(f"lane density {lam:g}/m infeasible with min_gap {self.min_gap} m "
                             f"(needs target_density < {1.0 / (self.min_gap * self.lane_width):g})")
        if self.matern_method == "matern2" and 2.0 * lam * self.min_gap >= 1.0:
            raise ValueError(f"type-II lane density {lam:g}/m infeasible with min_gap {self.min_gap} m")


@dataclass
class FreewayRealization:
    cfg: FreewayConfig
    env: EnvironmentSnapshot
    lane_index: np.ndarray
    direction: np.ndarray
    marks: np.ndarray

    @property
    def centers(self) -> np.ndarray:
        return np.array([o.placed.center for o in self.env.objects]).reshape(-1, 2)

    @property
    def is_sensor(self) -> np.ndarray:
        return np.array([o.is_sensor for o in self.env.objects], dtype=bool)


def _lanes(cfg: FreewayConfig):
    for d_i, direction in enumerate((1, -1)):
        for lane in range(cfg.lanes_per_direction):
            yield d_i * cfg.lanes_per_direction + lane, lane, direction


def generate_freeway(cfg: FreewayConfig) -> FreewayRealization:
    cfg.check_feasible()
    body = Rect(cfg.vehicle_length / 2, cfg.vehicle_width / 2, 0.0)
    objs, lane_idx, dirs, marks = [], [], [], []
    for key, lane, direction in _lanes(cfg):
        xs = sample_matern_lane(cfg.road_length, cfg.min_gap, cfg.lane_density, cfg.seed, 1, key,
                                method=cfg.matern_method)
        offs = cfg.seed.rng(2, key).uniform(-cfg.lateral_offset_halfwidth, cfg.lateral_offset_halfwidth, xs.size)
        m = uniform_marks(xs.size, cfg.seed, 3, key)
        yc = cfg.lane_center(lane, direction)
        for x, off, mk in zip(xs, offs, m):
            sensor = SensorMark(Point2(0.0, 0.0), Omni(cfg.sensing_radius)) if mk < cfg.p_s else None
            objs.append(MarkedObject(len(objs), PlacedShape(Point2(float(x), float(yc + off)), body), sensor))
        lane_idx.append(np.full(xs.size, lane))
        dirs.append(np.full(xs.size, direction))
        marks.append(m)
    h = cfg.road_half_width
    env = EnvironmentSnapshot(objs, Window(0.0, cfg.road_length, -h, h, cfg.guard_length))
    cat = lambda parts, dt: np.concatenate(parts).astype(dt) if parts else np.empty(0, dt)
    return FreewayRealization(cfg, env, cat(lane_idx, np.int64), cat(dirs, np.int64), cat(marks, float))


class RoadRaster:
    """Cell grid over the road surface [0, L] x [-H, H]."""

    def __init__(self, cfg: FreewayConfig, resolution: float):
        self.res = resolution
        self.h = cfg.road_half_width
        self.nx = int(math.ceil(cfg.road_length / resolution - 1e-9))
        self.ny = int(math.ceil(2 * self.h / resolution - 1e-9))
        self.origin = Point2(0.0, -self.h)
        self.ys = self.origin[1] + (np.arange(self.ny) + 0.5) * resolution
        self.on_road = np.abs(self.ys) <= self.h

    def cols(self, x_lo: float, x_hi: float) -> tuple[int, int]:
        c0 = max(0, int(math.floor(x_lo / self.res)))
        c1 = min(self.nx, int(math.ceil(x_hi / self.res)))
        return c0, c1

    def roi_mask(self, cfg: FreewayConfig, center, c0: int, c1: int) -> np.ndarray:
        xs = (np.arange(c0, c1) + 0.5) * self.res
        gx, gy = np.meshgrid(xs, self.ys)
        m = np.hypot(gx - center[0], gy - center[1]) <= cfg.roi_radius
        m &= np.abs(gy - center[1]) <= cfg.roi_strip_halfwidth
        m &= self.on_road[:, None]
        return m


@lru_cache(maxsize=8)
def _template(radius: float, resolution: float, strip: float) -> SensorRaster:
    return SensorRaster(radius, resolution, strip)


def eligible_references(real: FreewayRealization) -> np.ndarray:
    """Sensing vehicles in the two central lanes whose ROI lies inside the guarded road."""
    cfg = real.cfg
    if len(real.env.objects) == 0:
        return np.empty(0, dtype=np.int64)
    x = real.centers[:, 0]
    lo = cfg.guard_length + cfg.roi_radius
    hi = cfg.road_length - cfg.guard_length - cfg.roi_radius
    ok = real.is_sensor & (real.lane_index == 0) & (x >= lo) & (x <= hi)
    return np.flatnonzero(ok)


def _accumulate(real: FreewayRealization, raster: RoadRaster, sensors, c0: int, c1: int) -> np.ndarray:
    counts = np.zeros((raster.ny, c1 - c0), dtype=np.int32)
    mask = np.ones_like(counts, dtype=bool)
    origin = (c0 * raster.res, raster.origin[1])
    for k in sensors:
        accumulate_sensor(real.env, int(k), origin, raster.res, mask, counts)
    return counts


def reference_values(real: FreewayRealization, metric: str, gamma: int = 1, gamma_rsu: int = 0,
                     resolution: float = 0.25, void_points: int = 200) -> np.ndarray:
    """Per-reference (or per void location) values of a central-lane metric."""
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")
    cfg = real.cfg
    if metric == "void_redundancy":
        return _void_values(real, void_points)
    refs = eligible_references(real)
    if refs.size == 0:
        return np.empty(0)
    raster = RoadRaster(cfg, resolution)
    centers = real.centers
    out = np.empty(refs.size)
    if metric == "coverage_area_norm":
        tpl = _template(cfg.roi_radius, resolution, cfg.roi_strip_halfwidth)
        for j, i in enumerate(refs):
            road = np.abs(tpl.dy + centers[i, 1]) <= cfg.road_half_width
            vis = tpl.visible(real.env, int(i))
            out[j] = np.count_nonzero(vis & road) / np.count_nonzero(road)
        return out
    if gamma < 1:
        raise ValueError("gamma must be >= 1")
    if metric == "rsu_gain" and not 0 < gamma_rsu < gamma:
        raise ValueError("rsu_gain needs 0 < gamma_rsu < gamma")
    lo = centers[refs, 0].min() - cfg.roi_radius
    hi = centers[refs, 0].max() + cfg.roi_radius
    c0, c1 = raster.cols(lo, hi)
    reach = cfg.sensing_radius + EPS
    sens = np.flatnonzero(real.is_sensor & (centers[:, 0] >= lo - reach) & (centers[:, 0] <= hi + reach))
    counts = _accumulate(real, raster, sens, c0, c1)
    for j, i in enumerate(refs):
        a0, a1 = raster.cols(centers[i, 0] - cfg.roi_radius, centers[i, 0] + cfg.roi_radius)
        roi = raster.roi_mask(cfg, centers[i], a0, a1)
        sub = counts[:, a0 - c0:a1 - c0]
        n = np.count_nonzero(roi)
        cov = np.count_nonzero((sub >= gamma) & roi) / n
        if metric == "rsu_gain":
            cov = np.count_nonzero((sub >= gamma - gamma_rsu) & roi) / n - cov
        out[j] = cov
    return out


def _void_values(real: FreewayRealization, n_points: int) -> np.ndarray:
    """Redundancy at uniform void locations of the central lanes, inside the guarded road."""
    cfg = real.cfg
    lo = cfg.guard_length
    hi = cfg.road_length - cfg.guard_length
    if hi <= lo:
        return np.empty(0)
    sens = np.flatnonzero(real.is_sensor) if real.env.objects else np.empty(0, dtype=np.int64)
    rng = cfg.seed.rng(4)
    sh = real.env.shapes
    out = np.empty(n_points)
    got = 0
    tries = 0
    while got < n_points:
        tries += 1
        if tries > 100 * n_points + 1000:
            raise EmptyEligibleSet("central lanes have no void space to sample")
        x = rng.uniform(lo, hi)
        y = rng.uniform(-cfg.lane_width, cfg.lane_width)
        if len(sh) and _kernels.point_in_each(x, y, np.arange(len(sh), dtype=np.int64), *sh.args()[:-1], EPS).any():
            continue
        out[got] = viewers_by_index(real.env, sens, (x, y)).sum() if sens.size else 0
        got += 1
    return out


def central_lane_statistic(real: FreewayRealization, metric: str, **metric_args) -> float:
    """Mean of ``metric`` over the eligible central-lane references.

    Raises EmptyEligibleSet when nothing qualifies.
    """
    v = reference_values(real, metric, **metric_args)
    if v.size == 0:
        raise EmptyEligibleSet(f"no eligible central-lane reference for {metric}")
    return float(v.mean())


def _grid_points(sweep: dict) -> list:
    names = list(sweep)
    return [dict(zip(names, vals)) for vals in itertools.product(*(sweep[n] for n in names))]


def _run_seed(cfg: FreewayConfig, metric: str, metric_args: dict, s: int):
    real = generate_freeway(replace(cfg, seed=cfg.seed.child(s)))
    v = reference_values(real, metric, **metric_args)
    return float(v.sum()), int(v.size)


def _run_point(cfg: FreewayConfig, point: dict, metric: str, metric_args: dict, seeds: int) -> dict:
    cfg_fields = {k: v for k, v in point.items() if k in FreewayConfig.__dataclass_fields__}
    args = dict(metric_args, **{k: v for k, v in point.items() if k not in cfg_fields})
    rec = dict(point, metric=metric, mean=float("nan"), se=float("nan"), n_seeds=0, n_samples=0, error="")
    try:
        c = replace(cfg, **cfg_fields)
        c.check_feasible()
        sums = np.zeros(seeds)
        cnts = np.zeros(seeds)
        for s in range(seeds):
            sums[s], cnts[s] = _run_seed(c, metric, args, s)
    except ValueError as exc:
        rec["error"] = str(exc)
        return rec
    if cnts.sum() == 0:
        rec["error"] = "no eligible references"
        return rec
    rec["mean"], rec["se"] = ratio_stats(sums, cnts)
    rec["n_seeds"] = seeds
    rec["n_samples"] = int(cnts.sum())
    return rec


def run_experiment(cfg: FreewayConfig, sweep: dict, metric: str, seeds: int,
                   metric_args: Optional[dict] = None, jobs: int = 1) -> list:
    """One record per grid point: pooled mean over all references and seeds, SE, counts.

    ``sweep`` maps FreewayConfig fields (or metric arguments such as
    ``gamma``) to value lists; the grid is their product. Seed s of every
    point uses ``cfg.seed.child(s)``, so points share common random numbers.
    A point whose generation fails gets an ``error`` string instead of
    aborting the sweep.
    """
    if not sweep or any(len(v) == 0 for v in sweep.values()):
        raise ValueError("sweep grid must be nonempty")
    if seeds < 1:
        raise ValueError("seeds must be >= 1")
    metric_args = metric_args or {}
    points = _grid_points(sweep)
    if jobs <= 1:
        return [_run_point(cfg, p, metric, metric_args, seeds) for p in points]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        futs = [ex.submit(_run_point, cfg, p, metric, metric_args, seeds) for p in points]
        return [f.result() for f in futs]


def config_dict(cfg: FreewayConfig) -> dict:
    d = asdict(cfg)
    d["seed"] = [cfg.seed.root, cfg.seed.stream]
    return d
