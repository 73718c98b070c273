"""Random spatial structures: Poisson processes, thinning, hard-core lane
processes and displacement.

Every sampler takes a :class:`Seed`; the pair ``(root, stream)`` plus any
extra integer keys fully determines the draw, so parallel trials never share
generator state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Seed:
    root: int
    stream: int = 0

    def rng(self, *keys: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence([self.root, self.stream, *keys]))

    def child(self, stream: int) -> "Seed":
        # streams are hashed together with the parent so children never collide
        ss = np.random.SeedSequence([self.root, self.stream, stream])
        return Seed(self.root, int(ss.generate_state(2, np.uint64)[0]))


@dataclass(frozen=True)
class Window:
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    guard_margin: float = 0.0

    def __post_init__(self):
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ValueError("window must have positive extent")
        if self.guard_margin < 0:
            raise ValueError("guard margin must be >= 0")

    @classmethod
    def centered(cls, half_width: float, half_height: float | None = None, guard_margin: float = 0.0):
        hh = half_width if half_height is None else half_height
        return cls(-half_width, half_width, -hh, hh, guard_margin)

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)

    def inner(self) -> tuple[float, float, float, float]:
        g = self.guard_margin
        return (self.x_min + g, self.x_max - g, self.y_min + g, self.y_max - g)

    def in_inner(self, x, y) -> np.ndarray:
        x0, x1, y0, y1 = self.inner()
        x = np.asarray(x)
        y = np.asarray(y)
        return (x >= x0) & (x <= x1) & (y >= y0) & (y <= y1)


def sample_hppp(lam: float, w: Window, seed: Seed, *keys: int) -> np.ndarray:
    """Homogeneous Poisson process on ``w``; returns an (n, 2) array."""
    if lam < 0:
        raise ValueError(f"intensity must be >= 0, got {lam}")
    rng = seed.rng(0x50, *keys)
    n = rng.poisson(lam * w.area) if lam > 0 else 0
    xs = rng.uniform(w.x_min, w.x_max, n)
    ys = rng.uniform(w.y_min, w.y_max, n)
    return np.column_stack([xs, ys])


def uniform_marks(n: int, seed: Seed, *keys: int) -> np.ndarray:
    """Independent U(0,1) marks; ``marks < p`` is a p-thinning, nested in p."""
    return seed.rng(0x7A, *keys).random(n)


def thin(points, p: float, seed: Seed, *keys: int) -> tuple[np.ndarray, np.ndarray]:
    """Independent p-thinning; returns (kept, removed)."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"retention probability must lie in [0, 1], got {p}")
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    keep = uniform_marks(len(pts), seed, *keys) < p
    return pts[keep], pts[~keep]


def matern_base_intensity(target_density: float, min_gap: float, method: str = "sequential") -> float:
    """Base Poisson intensity that thins to ``target_density``.

    ``sequential``: left-to-right hard-core thinning, density lb / (1 + g lb).
    ``matern2``: classical type-II thinning, density (1 - exp(-2 g lb)) / (2 g).
    """
    g = min_gap
    if method == "sequential":
        if target_density * g >= 1.0:
            raise ValueError(f"target density {target_density} must be below 1/min_gap = {1.0 / g}")
        return target_density / (1.0 - g * target_density)
    if method == "matern2":
        if 2.0 * g * target_density >= 1.0:
            raise ValueError(f"type-II density {target_density} must be below 1/(2*min_gap) = {0.5 / g}")
        return -math.log1p(-2.0 * g * target_density) / (2.0 * g)
    raise ValueError(f"unknown hard-core method {method!r}")


def sample_matern_lane(lane_length: float, min_gap: float, target_density: float, seed: Seed,
                       *keys: int, method: str = "sequential") -> np.ndarray:
    """Hard-core positions on [0, lane_length] with consecutive gaps >= min_gap.

    The default ``sequential`` construction scans a base Poisson process from
    left to right and keeps a point when it is at least ``min_gap`` past the
    last kept one. Kept gaps are then ``min_gap + Exp(lb)``, which is what is
    drawn here, started from the stationary delay so the pattern has no edge
    artefact at 0.
    """
    if target_density < 0:
        raise ValueError("target density must be >= 0")
    if min_gap > 0 and target_density * min_gap >= 1.0:
        raise ValueError(f"target density {target_density} must be below 1/min_gap = {1.0 / min_gap}")
    if target_density == 0 or lane_length <= 0:
        return np.empty(0)
    lb = matern_base_intensity(target_density, min_gap, method)
    rng = seed.rng(0x4D, *keys)
    if method == "matern2":
        return _matern2(lane_length, min_gap, lb, rng)
    g = min_gap
    if rng.random() < g * target_density:
        first = rng.uniform(0.0, g)
    else:
        first = g + rng.exponential(1.0 / lb)
    n_guess = int(lane_length * target_density * 1.2 + 10 * math.sqrt(lane_length * target_density + 1) + 10)
    pos = [first]
    while pos[-1] <= lane_length:
        gaps = g + rng.exponential(1.0 / lb, n_guess)
        chunk = pos[-1] + np.cumsum(gaps)
        pos.extend(chunk.tolist())
    out = np.asarray(pos)
    return out[out <= lane_length]


def _matern2(lane_length, g, lb, rng):
    lo, hi = -g, lane_length + g
    n = rng.poisson(lb * (hi - lo))
    x = np.sort(rng.uniform(lo, hi, n))
    t = rng.random(n)
    left = np.searchsorted(x, x - g, side="right")
    right = np.searchsorted(x, x + g, side="left")
    keep = np.ones(n, dtype=bool)
    for i in range(n):
        nb = t[left[i]:right[i]]
        keep[i] = t[i] <= nb.min()
    x = x[keep]
    return x[(x >= 0) & (x <= lane_length)]


def displace(points, velocities, t: float) -> np.ndarray:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    vel = np.asarray(velocities, dtype=float).reshape(-1, 2)
    if len(pts) != len(vel):
        raise ValueError(f"got {len(pts)} points but {len(vel)} velocities")
    return pts + vel * t
