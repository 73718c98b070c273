"""Moving two-direction traffic, road-side units and (gamma, tau)-object coverage.

Vehicles keep their time-0 marks and move at +/- speed_s along x. Positions
at time t come from ``displace``; the road is generated long enough that
the studied stretch [0, road_length] stays populated for the whole run.
RSUs stand on the +y side of the road, so direction +1 is the "nearby" one.

Sensing is evaluated once per frame for every participating sensor and
every vehicle that can matter; a TrackTable keeps the last time each
(sensor, object) pair was seen. Any tau and collaboration scheme is then a
filter over that table, so one pass serves a whole (p_s, tau, scheme) grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from . import _kernels
from .freeway_sim import FreewayConfig, generate_freeway
from .geometry import EPS, Disc, PlacedShape, Point2, Rect, boundary_samples_array, rect_boundary_local
from .pointprocess import Seed, Window, displace
from .sensing_engine import NBINS, EnvironmentSnapshot, MarkedObject, Omni, SensorMark

SCHEMES = ("base", "rsu", "opposite", "rsu_and_opposite")
TAU_INF = math.inf


@dataclass(frozen=True)
class RsuConfig:
    spacing: float = 400.0
    setback: float = 2.0
    elevated: bool = False
    r_rsu: float = 200.0

    def __post_init__(self):
        if not (self.spacing > 0 and self.r_rsu > 0) or self.setback < 0:
            raise ValueError("RSU spacing and range must be positive, setback >= 0")


@dataclass(frozen=True)
class DynamicConfig:
    base: FreewayConfig = field(default_factory=lambda: FreewayConfig(p_s=0.2))
    speed_s: float = 20.0
    rsu: Optional[RsuConfig] = field(default_factory=RsuConfig)
    r_vehicle: float = 200.0
    r_communication: float = 500.0
    r_interest: float = 200.0
    tau: float = 0.0
    scheme: str = "base"
    dt: float = 0.1
    duration: float = 3.0
    boundary_samples: int = 16

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.tau < 0:
            raise ValueError("tau must be >= 0")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if self.duration < 0 or self.speed_s < 0:
            raise ValueError("duration and speed must be >= 0")
        if self.boundary_samples < 4:
            raise ValueError("need at least 4 boundary samples")

    @property
    def n_frames(self) -> int:
        return int(round(self.duration / self.dt)) + 1

    def frame_times(self) -> np.ndarray:
        return np.round(np.arange(self.n_frames) * self.dt, 12)


class TrackTable:
    """Last time each (sensor, object) pair was sensed; -inf when never.

    Rows and columns are environment indices of sensors and objects.
    """

    def __init__(self, n_sensors: int, n_objects: int):
        self.last_seen = np.full((n_sensors, n_objects), -np.inf)
        self.now = -np.inf

    def update(self, sensor: int, objects, t: float) -> None:
        if t < self.now:
            raise ValueError("track table updates must move forward in time")
        self.now = t
        self.last_seen[sensor, np.asarray(objects, dtype=np.int64)] = t

    def last(self, sensor: int, obj: int) -> float:
        return float(self.last_seen[sensor, obj])

    def fresh(self, sensors, objects, t: float, tau: float) -> np.ndarray:
        """(len(sensors), len(objects)) mask of pairs sensed within [t - tau, t]."""
        ls = self.last_seen[np.ix_(np.asarray(sensors, dtype=np.int64), np.asarray(objects, dtype=np.int64))]
        return np.isfinite(ls) & (ls >= t - tau - 1e-9)


def object_redundancy(track: TrackTable, collaborators: Iterable[int], object_id: int, t: float, tau: float) -> int:
    ks = list(collaborators)
    if not ks:
        return 0
    return int(track.fresh(ks, [object_id], t, tau).sum())


@dataclass
class DynamicFrame:
    t: float
    env: EnvironmentSnapshot
    n_vehicles: int
    direction: np.ndarray
    marks: np.ndarray
    elevated_rsu: bool = False
    r_interest: float = 200.0

    def is_rsu(self, idx: int) -> bool:
        return idx >= self.n_vehicles


def place_rsus(cfg: DynamicConfig, x_min: float = 0.0, x_max: Optional[float] = None,
               first_id: int = 0) -> list:
    """RSUs at x = k * spacing inside [x_min, x_max], setback beyond the +y road edge."""
    if cfg.rsu is None:
        return []
    x_max = cfg.base.road_length if x_max is None else x_max
    r = cfg.rsu
    y = cfg.base.road_half_width + r.setback
    ks = range(int(math.ceil(x_min / r.spacing - 1e-12)), int(math.floor(x_max / r.spacing + 1e-12)) + 1)
    return [MarkedObject(first_id + n, PlacedShape(Point2(k * r.spacing, y), Disc(0.0)),
                         SensorMark(Point2(0.0, 0.0), Omni(r.r_rsu)))
            for n, k in enumerate(ks)]


def _overlaps_disc(cx, cy, hl, hw, px, py, r) -> np.ndarray:
    """Axis-aligned rectangles vs the disc b(p, r), by closest-point distance."""
    dx = np.maximum(np.abs(cx - px) - hl, 0.0)
    dy = np.maximum(np.abs(cy - py) - hw, 0.0)
    return dx * dx + dy * dy <= r * r


def objects_of_interest(frame: DynamicFrame, sensor_id: int) -> set:
    """Vehicles overlapping the sensor's ROI disc; the sensor itself is left out."""
    k = frame.env.index[sensor_id]
    p = frame.env.objects[k].sensor_position
    sh = frame.env.shapes
    n = frame.n_vehicles
    hit = _overlaps_disc(sh.cx[:n], sh.cy[:n], sh.a[:n], sh.b[:n], p[0], p[1], frame.r_interest)
    return {frame.env.objects[j].id for j in np.flatnonzero(hit) if j != k}


def _sensed_by(frame: DynamicFrame, k: int, cand: np.ndarray, local: np.ndarray) -> np.ndarray:
    """Which candidate vehicles (environment indices) sensor k sees any boundary sample of."""
    env = frame.env
    o = env.objects[k]
    px, py = o.sensor_position
    rmax = o.sensor.support.r_max
    sh = env.shapes
    m = local.shape[0]
    tx = (sh.cx[cand][:, None] + local[None, :, 0]).ravel()
    ty = (sh.cy[cand][:, None] + local[None, :, 1]).ravel()
    ok = np.hypot(tx - px, ty - py) <= rmax + EPS
    vis = ok.copy()
    rsu = frame.is_rsu(k)
    if ok.any() and not (rsu and frame.elevated_rsu):
        ex = np.repeat(cand, m)[ok]
        vis[ok] = _kernels.los_batch(float(px), float(py), np.ascontiguousarray(tx[ok]), np.ascontiguousarray(ty[ok]),
                                     ex, -1 if rsu else k, False, *sh.args(), NBINS, EPS)
    seen = vis.reshape(-1, m).any(axis=1)
    seen[cand == k] = True
    return seen


def object_sensed(frame: DynamicFrame, sensor_id: int, object_id: int, k: int = 16) -> bool:
    """Does the sensor see any of k boundary samples of the object (the object itself not blocking)?"""
    env = frame.env
    si = env.index[sensor_id]
    oj = env.index[object_id]
    if si == oj:
        return True
    placed = env.objects[oj].placed
    local = boundary_samples_array(placed, k) - np.asarray(placed.center)
    return bool(_sensed_by(frame, si, np.array([oj], dtype=np.int64), local)[0])


@dataclass
class _Scene:
    centers0: np.ndarray
    velocity: np.ndarray
    direction: np.ndarray
    marks: np.ndarray
    body: Rect
    rsus: list
    x_lo: float
    x_hi: float


def _scene(cfg: DynamicConfig, seed: Seed, taus: Sequence[float]) -> _Scene:
    tmax = max([t for t in taus if math.isfinite(t)] + [0.0])
    r_sense = max(cfg.r_vehicle, cfg.rsu.r_rsu if cfg.rsu else 0.0)
    pad = cfg.r_interest + r_sense + cfg.speed_s * (cfg.duration + tmax) + 20.0
    base = replace(cfg.base, road_length=cfg.base.road_length + 2 * pad, sensing_radius=cfg.r_vehicle,
                   seed=seed)
    real = generate_freeway(replace(base, p_s=1.0))
    c = real.centers.copy()
    c[:, 0] -= pad
    v = np.column_stack([real.direction * cfg.speed_s, np.zeros(len(c))])
    body = Rect(base.vehicle_length / 2, base.vehicle_width / 2)
    rsus = place_rsus(cfg, -pad, cfg.base.road_length + pad, first_id=len(c))
    return _Scene(c, v, real.direction, real.marks, body, rsus, -pad, cfg.base.road_length + pad)


def build_frame(cfg: DynamicConfig, scene: _Scene, t: float, p_s: float) -> DynamicFrame:
    pos = displace(scene.centers0, scene.velocity, t)
    objs = []
    for j, (x, y) in enumerate(pos):
        sensor = SensorMark(Point2(0.0, 0.0), Omni(cfg.r_vehicle)) if scene.marks[j] < p_s else None
        objs.append(MarkedObject(j, PlacedShape(Point2(float(x), float(y)), scene.body), sensor))
    objs.extend(scene.rsus)
    h = cfg.base.road_half_width + (cfg.rsu.setback if cfg.rsu else 0.0) + 1.0
    env = EnvironmentSnapshot(objs, Window(scene.x_lo, scene.x_hi, -h, h))
    return DynamicFrame(t, env, len(pos), scene.direction, scene.marks,
                        bool(cfg.rsu and cfg.rsu.elevated), cfg.r_interest)


def _collaborators(scheme: str, direction: int, veh_dir: np.ndarray, veh_part: np.ndarray, n_veh: int,
                   n_rsu: int) -> np.ndarray:
    same = veh_part & (veh_dir == direction)
    other = veh_part & (veh_dir != direction)
    pool = same | other if scheme in ("opposite", "rsu_and_opposite") else same
    ids = np.flatnonzero(pool)
    if scheme in ("rsu", "rsu_and_opposite") and n_rsu:
        ids = np.concatenate([ids, np.arange(n_veh, n_veh + n_rsu)])
    return ids


def simulate_grid(cfg: DynamicConfig, gamma: int, seed: Seed, taus: Sequence[float] = (0.0,),
                  schemes: Sequence[str] = SCHEMES, p_s_values: Optional[Sequence[float]] = None) -> list:
    """Per-frame mean (gamma, tau)-object coverage for every (p_s, scheme, tau, direction).

    Frames before max(tau) are warm-up and not reported. Each record holds
    t, p_s, scheme, tau, direction (+1 nearby / -1 opposite), the mean over
    reference vehicles and their number. References whose ROI holds no other
    vehicle are skipped.
    """
    if gamma < 1:
        raise ValueError("gamma must be >= 1")
    for s in schemes:
        if s not in SCHEMES:
            raise ValueError(f"unknown scheme {s!r}")
    p_s_values = [cfg.base.p_s] if p_s_values is None else list(p_s_values)
    finite = [t for t in taus if math.isfinite(t)]
    warm = max(finite + [0.0])
    if cfg.duration < warm:
        raise ValueError("duration must cover the largest finite tau")
    scene = _scene(cfg, seed, taus)
    n_veh = len(scene.centers0)
    n_rsu = len(scene.rsus)
    ps_max = max(p_s_values)
    part_max = scene.marks < ps_max
    local = rect_boundary_local(scene.body.half_length, scene.body.half_width, cfg.boundary_samples)
    track = TrackTable(n_veh + n_rsu, n_veh)
    L = cfg.base.road_length
    diag = scene.body.circumradius
    out = []
    for t in cfg.frame_times():
        frame = build_frame(cfg, scene, float(t), ps_max)
        sh = frame.env.shapes
        cx = sh.cx[:n_veh]
        cy = sh.cy[:n_veh]
        # every vehicle that can be an object of interest now or within the largest window
        reach_t = cfg.speed_s * warm
        zone = (cx >= -cfg.r_interest - diag - reach_t) & (cx <= L + cfg.r_interest + diag + reach_t)
        for k in np.concatenate([np.flatnonzero(part_max), np.arange(n_veh, n_veh + n_rsu)]):
            o = frame.env.objects[k]
            px, py = o.sensor_position
            rk = o.sensor.support.r_max + diag
            cand = np.flatnonzero(zone & (np.abs(cx - px) <= rk) & (np.abs(cy - py) <= rk))
            if cand.size == 0:
                continue
            seen = _sensed_by(frame, int(k), cand, local)
            track.update(int(k), cand[seen], float(t))
        if t < warm - 1e-9:
            continue
        for ps in p_s_values:
            part = scene.marks < ps
            refs_all = np.flatnonzero(part & (cx >= 0.0) & (cx <= L))
            for d in (1, -1):
                refs = refs_all[scene.direction[refs_all] == d]
                cov = {(s, tau): [] for s in schemes for tau in taus}
                for i in refs:
                    ooi = np.flatnonzero(_overlaps_disc(cx, cy, scene.body.half_length, scene.body.half_width,
                                                        cx[i], cy[i], cfg.r_interest))
                    ooi = ooi[ooi != i]
                    if ooi.size == 0:
                        continue
                    sx = sh.cx
                    sy = sh.cy
                    for s in schemes:
                        ks = _collaborators(s, d, scene.direction, part, n_veh, n_rsu)
                        ks = ks[np.hypot(sx[ks] - cx[i], sy[ks] - cy[i]) <= cfg.r_communication + EPS]
                        for tau in taus:
                            red = track.fresh(ks, ooi, float(t), tau).sum(axis=0)
                            cov[(s, tau)].append(float(np.mean(red >= gamma)))
                for (s, tau), vals in cov.items():
                    out.append({"t": float(t), "p_s": ps, "scheme": s, "tau": tau, "direction": d,
                                "coverage": float(np.mean(vals)) if vals else float("nan"),
                                "n_refs": len(vals)})
    return out


def simulate(cfg: DynamicConfig, gamma: int, seed: Seed) -> list:
    """Time series of mean (gamma, tau)-object coverage per direction for cfg.scheme and cfg.tau."""
    recs = simulate_grid(cfg, gamma, seed, taus=(cfg.tau,), schemes=(cfg.scheme,))
    return [{"t": r["t"], "direction": r["direction"], "coverage": r["coverage"], "n_refs": r["n_refs"]}
            for r in recs]
