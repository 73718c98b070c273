"""Closed forms for the disc model: expected coverage area, void-location
redundancy and the Poisson-tail approximation of gamma-coverage.

All objects are discs of radius ``r_obj`` with sensors at their centres and
omni supports of radius ``r_sense``. A segment of length L is obstructed by
a disc exactly when the disc centre falls in the segment dilated by the
disc, whose area is pi r^2 + 2 r L, so a void location at distance rho from
the typical sensor is visible with probability exp(-lam (pi r^2 + 2 r rho)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Union

import numpy as np
from scipy import integrate, special


@dataclass(frozen=True)
class DiscModelParams:
    lam: float
    p_s: float = 1.0
    r_obj: float = 1.67
    r_sense: float = 100.0
    # radius of the typical sensor's own body; None means the same as r_obj
    r_obj_sensor: Optional[float] = None

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        if not 0.0 <= self.p_s <= 1.0:
            raise ValueError(f"p_s must lie in [0, 1], got {self.p_s}")
        if self.r_obj < 0 or self.r_sense < 0:
            raise ValueError("radii must be >= 0")
        if self.r_obj_sensor is not None and self.r_obj_sensor < 0:
            raise ValueError("radii must be >= 0")

    @property
    def r0(self) -> float:
        return self.r_obj if self.r_obj_sensor is None else self.r_obj_sensor

    @property
    def lam_s(self) -> float:
        return self.p_s * self.lam


@dataclass(frozen=True)
class DiscRoi:
    r_interest: float

    def __post_init__(self):
        if not self.r_interest > 0:
            raise ValueError("r_interest must be positive")


@dataclass(frozen=True)
class DiscStripRoi:
    r_interest: float
    strip_half_width: float

    def __post_init__(self):
        if not (self.r_interest > 0 and self.strip_half_width > 0):
            raise ValueError("r_interest and strip_half_width must be positive")


RoiSpec = Union[DiscRoi, DiscStripRoi]


@dataclass(frozen=True)
class ApproxTerms:
    ed_c_a: float
    ed_c_not_a: float
    ed_not_a: float
    ea_s: float
    r_bar_void: float


def disc_strip_area(radius: float, half_width: float) -> float:
    """Area of b(0, radius) intersected with the strip |y| <= half_width."""
    if radius <= 0:
        return 0.0
    if half_width >= radius:
        return math.pi * radius ** 2
    w = half_width
    return 2.0 * (w * math.sqrt(radius ** 2 - w ** 2) + radius ** 2 * math.asin(w / radius))


def roi_area(roi: RoiSpec) -> float:
    if isinstance(roi, DiscRoi):
        return math.pi * roi.r_interest ** 2
    return disc_strip_area(roi.r_interest, roi.strip_half_width)


def _roi_disc_area(roi: Optional[RoiSpec], radius: float) -> float:
    """|roi ∩ b(0, radius)|, with roi=None meaning the whole plane."""
    if roi is None:
        return math.pi * radius ** 2
    if isinstance(roi, DiscRoi):
        return math.pi * min(radius, roi.r_interest) ** 2
    return disc_strip_area(min(radius, roi.r_interest), roi.strip_half_width)


def _radial_integral(a: float, lo: float, hi: float) -> float:
    """Integral of rho * exp(-a rho) over [lo, hi].

    The antiderivative -(rho/a + 1/a^2) exp(-a rho) is rewritten through the
    regularized incomplete gamma P(2, x) = 1 - (1 + x) exp(-x), which stays
    accurate as a -> 0.
    """
    if hi <= lo:
        return 0.0
    if a == 0.0:
        return 0.5 * (hi * hi - lo * lo)
    return float(special.gammainc(2, a * hi) - special.gammainc(2, a * lo)) / (a * a)


def _void_integral(p: DiscModelParams, roi: Optional[RoiSpec] = None) -> float:
    """Integral over rho in (r0, R] of visibility times the ROI's angular measure, without e^{-lam pi r^2}."""
    a = 2.0 * p.lam * p.r_obj
    lo = p.r0
    hi = p.r_sense if roi is None else min(p.r_sense, roi.r_interest)
    if roi is None or isinstance(roi, DiscRoi):
        return 2.0 * math.pi * _radial_integral(a, lo, hi)
    w = roi.strip_half_width
    # full circles up to w, then the strip's angular share 4 asin(w / rho)
    inner = 2.0 * math.pi * _radial_integral(a, lo, min(hi, w))
    if hi <= w:
        return inner
    f = lambda rho: 4.0 * math.asin(w / rho) * rho * math.exp(-a * rho)
    outer, _ = integrate.quad(f, max(lo, w), hi, epsabs=0.0, epsrel=1e-12, limit=200)
    return inner + outer


def _blocked_own(p: DiscModelParams) -> float:
    """exp(-lam pi r^2), the chance a point is outside every generic object."""
    return math.exp(-p.lam * math.pi * p.r_obj ** 2)


def expected_coverage_area(p: DiscModelParams, roi: Optional[RoiSpec] = None) -> dict:
    """Expected coverage area of the typical sensor, optionally restricted to an ROI.

    Returns total, self_term (own body inside the support) and void_term, plus
    ``normalized`` (by the support area, or the ROI area when given).
    """
    support = min(p.r_sense, p.r0)
    self_term = _roi_disc_area(roi, support)
    void_term = _blocked_own(p) * _void_integral(p, roi)
    total = self_term + void_term
    denom = math.pi * p.r_sense ** 2 if roi is None else roi_area(roi)
    return {"total": total, "self_term": self_term, "void_term": void_term,
            "normalized": total / denom if denom > 0 else 0.0}


def void_term_quad(p: DiscModelParams) -> float:
    """Adaptive 2-D-in-polar quadrature of the void term; oracle for the closed form."""
    lam, r = p.lam, p.r_obj
    f = lambda rho: 2.0 * math.pi * rho * math.exp(-lam * (math.pi * r * r + 2.0 * r * rho))
    val, _ = integrate.quad(f, p.r0, p.r_sense, epsabs=0.0, epsrel=1e-12, limit=200)
    return val if p.r_sense > p.r0 else 0.0


def expected_void_redundancy(p: DiscModelParams) -> float:
    """Mean number of sensors that see a typical void location.

    Equal to lam_s E|C0 \\ A0| / exp(-lam |A|); the exp(-lam pi r^2) factor of
    the void term cancels, so it is never divided out numerically.
    """
    return p.lam_s * _void_integral(p)


def poisson_tail(k: int, m: float) -> float:
    """P(N >= k) for N ~ Poisson(m), by direct summation of the smaller side."""
    if m < 0:
        raise ValueError(f"Poisson mean must be >= 0, got {m}")
    if k <= 0:
        return 1.0
    if m == 0:
        return 0.0
    logm = math.log(m)
    term = lambda i: math.exp(i * logm - m - math.lgamma(i + 1))
    if k - 1 <= m:
        # lower sum is the smaller mass when k sits below the mode
        return max(0.0, 1.0 - math.fsum(term(i) for i in range(k)))
    terms = []
    i = k
    while True:
        t = term(i)
        terms.append(t)
        if t < 1e-18 * terms[0] or i > k + 10000:
            break
        i += 1
    return min(1.0, math.fsum(terms))


def approx_terms(p: DiscModelParams, roi: RoiSpec) -> ApproxTerms:
    r0 = p.r0
    d_a = _roi_disc_area(roi, r0)
    return ApproxTerms(
        ed_c_a=_roi_disc_area(roi, min(r0, p.r_sense)),
        ed_c_not_a=_blocked_own(p) * _void_integral(p, roi),
        ed_not_a=roi_area(roi) - d_a,
        ea_s=math.pi * min(p.r_sense, r0) ** 2,
        r_bar_void=float(expected_void_redundancy(p)),
    )


def gamma_coverage_approx(p: DiscModelParams, roi: RoiSpec, gamma: int) -> dict:
    """Normalized gamma-coverage of the typical sensor's ROI, Poisson-tail approximation.

    Own-body cells need gamma-1 further sensors sitting on them, own-coverage
    void cells gamma-1 further viewers; uncovered cells need gamma of either.
    Redundancy in the void is taken Poisson with the unconditioned mean.
    """
    if gamma < 1:
        raise ValueError("gamma must be >= 1")
    t = approx_terms(p, roi)
    m_s = p.lam_s * t.ea_s
    area = (t.ed_c_a * poisson_tail(gamma - 1, m_s)
            + t.ed_c_not_a * poisson_tail(gamma - 1, t.r_bar_void)
            + t.ed_not_a * poisson_tail(gamma, m_s)
            + (t.ed_not_a * _blocked_own(p) - t.ed_c_not_a) * poisson_tail(gamma, t.r_bar_void))
    # the four terms partition the ROI, so only rounding can leave [0, 1]
    return {"normalized": min(1.0, max(0.0, area / roi_area(roi))), "terms": t}


def coverage_vs_obstruction(lam_s_fixed: float, lam_total_sweep: Sequence[float], roi: RoiSpec, gamma: int,
                            base: Optional[DiscModelParams] = None) -> list:
    """(lam - lam_s, normalized gamma-coverage) with the sensor density held fixed."""
    base = base or DiscModelParams(lam=lam_s_fixed)
    out = []
    for lam in lam_total_sweep:
        if lam < lam_s_fixed:
            raise ValueError(f"total density {lam} below sensor density {lam_s_fixed}")
        p_s = lam_s_fixed / lam if lam > 0 else 1.0
        q = replace(base, lam=lam, p_s=p_s)
        out.append((lam - lam_s_fixed, gamma_coverage_approx(q, roi, gamma)["normalized"]))
    return out


def coverage_curve(lams: Sequence[float], base: DiscModelParams, roi: Optional[RoiSpec] = None) -> np.ndarray:
    """Normalized expected coverage over a density sweep."""
    return np.array([expected_coverage_area(replace(base, lam=l), roi)["normalized"] for l in lams])
