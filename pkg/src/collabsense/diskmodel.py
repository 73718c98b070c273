"""Monte Carlo of the disc model: the simulation side of the closed forms.

Realizations place discs of radius ``r_obj`` at an HPPP, every disc carrying
an omni sensor of radius ``r_sense``. Sensing participation is decided by a
uniform mark per object (sensor iff mark < p_s), so one realization serves a
whole p_s sweep with common random numbers, and the sensor sets are nested
in p_s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._stats import ratio_stats
from .analytics import DiscModelParams, DiscRoi, DiscStripRoi, RoiSpec
from .pointprocess import Seed, Window, sample_hppp, uniform_marks
from .sensing_engine import EnvironmentSnapshot, SensorRaster, disc_sensor, viewers_by_index


@dataclass
class DiscScene:
    env: EnvironmentSnapshot
    marks: np.ndarray
    centers: np.ndarray


def disc_scene(p: DiscModelParams, half_width: float, seed: Seed, *keys: int, typical: bool = False) -> DiscScene:
    """One disc-model realization on a square window.

    With ``typical=True`` an extra object is placed at the origin as index 0
    with mark -1 (a sensor at every p_s): by Slivnyak's theorem the remaining points
    are then distributed as under the Palm law of the typical sensor.
    """
    w = Window.centered(half_width)
    pts = sample_hppp(p.lam, w, seed, *keys)
    marks = uniform_marks(len(pts), seed, *keys)
    if typical:
        pts = np.vstack([[0.0, 0.0], pts])
        marks = np.concatenate([[-1.0], marks])
    radii = np.full(len(pts), p.r_obj)
    if typical:
        radii[0] = p.r0
    objs = [disc_sensor(i, pts[i], radii[i], p.r_sense) for i in range(len(pts))]
    return DiscScene(EnvironmentSnapshot(objs, w), marks, pts)


def mc_coverage_area(p: DiscModelParams, seeds: int, seed: Seed, resolution: float = 0.25,
                     sensors_per_seed: int = 30) -> dict:
    """Expected coverage area of the typical sensor, raster-estimated.

    Every object whose centre lies in a central box (sized to hold about
    ``sensors_per_seed`` objects) is a typical sensor. The Palm mean is the
    pooled ratio (sum of areas)/(number of sensors) across seeds; averaging
    per-seed means instead would overweight sparse realizations.
    """
    if p.lam == 0:
        return {"mean": SensorRaster(p.r_sense, resolution).roi_area, "se": 0.0, "n": seeds, "sensors": seeds}
    box = 0.5 * math.sqrt(sensors_per_seed / p.lam)
    half = box + p.r_sense + p.r_obj + 1.0
    raster = SensorRaster(p.r_sense, resolution)
    tot = np.zeros(seeds)
    cnt = np.zeros(seeds)
    for s in range(seeds):
        sc = disc_scene(p, half, seed, s)
        inner = np.flatnonzero((np.abs(sc.centers) <= box).all(axis=1))
        tot[s] = sum(raster.area(sc.env, int(i)) for i in inner)
        cnt[s] = inner.size
    mean, se = ratio_stats(tot, cnt)
    return {"mean": mean, "se": se, "n": seeds, "sensors": int(cnt.sum())}


def mc_void_redundancy_raw(p: DiscModelParams, p_s_values: Sequence[float], seeds: int, points_per_seed: int,
                           seed: Seed, region_half: float = 50.0) -> tuple[np.ndarray, np.ndarray]:
    """Per-seed redundancy sums at uniform void locations, (seeds, len(p_s_values)), and point counts."""
    half = region_half + p.r_sense + p.r_obj + 1.0
    sums = np.zeros((seeds, len(p_s_values)))
    counts = np.zeros(seeds)
    for s in range(seeds):
        sc = disc_scene(p, half, seed, s)
        rng = seed.rng(0x5A, s)
        allidx = np.arange(len(sc.env.objects), dtype=np.int64)
        got = 0
        while got < points_per_seed:
            x = rng.uniform(-region_half, region_half, 2)
            if _occupied(sc, x, p.r_obj):
                continue
            m = sc.marks[viewers_by_index(sc.env, allidx, x)]
            for j, ps in enumerate(p_s_values):
                sums[s, j] += np.count_nonzero(m < ps)
            got += 1
        counts[s] = got
    return sums, counts


def mc_void_redundancy(p: DiscModelParams, p_s_values: Sequence[float], seeds: int, points_per_seed: int,
                       seed: Seed, region_half: float = 50.0) -> dict:
    """Mean redundancy at uniform void locations for each p_s (common realizations).

    Returns {p_s: (mean, se, n_points)}; the SE treats seeds as clusters.
    """
    sums, counts = mc_void_redundancy_raw(p, p_s_values, seeds, points_per_seed, seed, region_half)
    return {ps: (*ratio_stats(sums[:, j], counts), int(counts.sum())) for j, ps in enumerate(p_s_values)}


def _occupied(sc: DiscScene, x, r: float) -> bool:
    d2 = (sc.centers[:, 0] - x[0]) ** 2 + (sc.centers[:, 1] - x[1]) ** 2
    return bool((d2 <= r * r).any())


def _roi_contains(roi: RoiSpec, x) -> bool:
    if math.hypot(x[0], x[1]) > roi.r_interest:
        return False
    return isinstance(roi, DiscRoi) or abs(x[1]) <= roi.strip_half_width


def mc_gamma_coverage(p: DiscModelParams, roi: RoiSpec, gammas: Sequence[int], p_s_values: Sequence[float],
                      seeds: int, points_per_seed: int, seed: Seed) -> dict:
    """Normalized gamma-coverage of the typical sensor's ROI by random point sampling.

    The typical sensor always collaborates; others do when their mark is
    below p_s. Returns {(p_s, gamma): (mean, se)}.
    """
    half = roi.r_interest + p.r_sense + p.r_obj + 1.0
    hy = roi.r_interest if isinstance(roi, DiscRoi) else min(roi.r_interest, roi.strip_half_width)
    hits = {(ps, g): np.zeros(seeds) for ps in p_s_values for g in gammas}
    for s in range(seeds):
        sc = disc_scene(p, half, seed, s, typical=True)
        rng = seed.rng(0x6C, s)
        allidx = np.arange(len(sc.env.objects), dtype=np.int64)
        got = 0
        while got < points_per_seed:
            x = (rng.uniform(-roi.r_interest, roi.r_interest), rng.uniform(-hy, hy))
            if not _roi_contains(roi, x):
                continue
            m = sc.marks[viewers_by_index(sc.env, allidx, x)]
            for ps in p_s_values:
                c = np.count_nonzero(m < ps)
                for g in gammas:
                    hits[(ps, g)][s] += c >= g
            got += 1
    out = {}
    for key, h in hits.items():
        frac = h / points_per_seed
        out[key] = (float(frac.mean()), float(frac.std(ddof=1) / math.sqrt(seeds)) if seeds > 1 else float("nan"))
    return out
