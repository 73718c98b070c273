import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from collabsense.analytics import (DiscModelParams, DiscRoi, DiscStripRoi, coverage_curve, coverage_vs_obstruction,
                                   disc_strip_area, expected_coverage_area, expected_void_redundancy,
                                   gamma_coverage_approx, poisson_tail, void_term_quad)

STRIP = DiscStripRoi(100.0, 12.0)


def test_zero_density_is_full_disc():
    assert expected_coverage_area(DiscModelParams(0.0))["total"] == pytest.approx(math.pi * 100 ** 2, rel=1e-12)


def test_reference_coverage_value():
    out = expected_coverage_area(DiscModelParams(0.01))
    assert out["total"] == pytest.approx(4366, abs=2)
    assert out["normalized"] == pytest.approx(0.139, abs=0.001)


def test_high_density_below_twenty_percent():
    assert expected_coverage_area(DiscModelParams(0.03))["normalized"] < 0.20


@pytest.mark.parametrize("lam", [1e-4, 0.003, 0.01, 0.0175, 0.03, 0.1])
def test_closed_form_matches_quadrature(lam):
    p = DiscModelParams(lam)
    closed = expected_coverage_area(p)["void_term"] / math.exp(-lam * math.pi * p.r_obj ** 2)
    quad = void_term_quad(p) / math.exp(-lam * math.pi * p.r_obj ** 2)
    assert closed == pytest.approx(quad, rel=1e-8)


def test_coverage_monotone():
    lams = np.linspace(0.0, 0.05, 26)
    vals = coverage_curve(lams, DiscModelParams(0.0))
    assert np.all(np.diff(vals) < 0)
    by_r = [expected_coverage_area(DiscModelParams(0.01, r_sense=R))["total"] for R in (10, 50, 100, 200)]
    assert all(a <= b for a, b in zip(by_r, by_r[1:]))


def test_strip_roi_normalization():
    p = DiscModelParams(0.0)
    out = expected_coverage_area(p, STRIP)
    assert out["normalized"] == pytest.approx(1.0, rel=1e-9)
    assert disc_strip_area(100.0, 12.0) == pytest.approx(2 * (12 * math.sqrt(100 ** 2 - 144) + 100 ** 2 * math.asin(0.12)))
    assert disc_strip_area(10.0, 12.0) == pytest.approx(math.pi * 100)


def test_void_redundancy_reference():
    assert expected_void_redundancy(DiscModelParams(0.01)) == pytest.approx(47.6, abs=0.1)
    assert expected_void_redundancy(DiscModelParams(0.01, p_s=0.0)) == 0.0


def test_void_redundancy_linear_in_ps():
    full = expected_void_redundancy(DiscModelParams(0.01))
    half = expected_void_redundancy(DiscModelParams(0.01, p_s=0.5))
    assert half / full == pytest.approx(0.5, rel=1e-15)


def test_void_redundancy_interior_maximum():
    lams = np.geomspace(1e-4, 0.2, 60)
    vals = np.array([expected_void_redundancy(DiscModelParams(l)) for l in lams])
    k = int(vals.argmax())
    assert 0 < k < len(lams) - 1
    assert np.all(np.diff(vals[:k + 1]) > 0) and np.all(np.diff(vals[k:]) < 0)


@pytest.mark.parametrize("k, m, expected", [(0, 3.3, 1.0), (1, 1.0, 1 - math.exp(-1)), (5, 0.0, 0.0)])
def test_poisson_tail_examples(k, m, expected):
    assert poisson_tail(k, m) == pytest.approx(expected, abs=1e-15)


@settings(max_examples=200, deadline=None)
@given(k=st.integers(0, 80), m=st.floats(0.0, 60.0))
def test_poisson_tail_matches_scipy(k, m):
    ref = 1.0 if k == 0 else float(stats.poisson.sf(k - 1, m))
    lower = 0.0 if k == 0 else float(stats.poisson.cdf(k - 1, m))
    got = poisson_tail(k, m)
    assert got == pytest.approx(ref, abs=1e-12)
    assert got + lower == pytest.approx(1.0, abs=1e-12)


def test_poisson_tail_monotone():
    assert all(poisson_tail(k, 5.0) >= poisson_tail(k + 1, 5.0) for k in range(30))
    assert all(poisson_tail(3, m) <= poisson_tail(3, m + 0.5) for m in np.linspace(0, 10, 21))
    with pytest.raises(ValueError):
        poisson_tail(1, -1.0)


def test_gamma_approx_single_sensor_collapse():
    p = DiscModelParams(0.01, p_s=0.0)
    got = gamma_coverage_approx(p, STRIP, 1)["normalized"]
    assert got == pytest.approx(expected_coverage_area(p, STRIP)["normalized"], rel=1e-12)


def test_gamma_approx_headline():
    assert gamma_coverage_approx(DiscModelParams(0.0175, p_s=0.2), STRIP, 1)["normalized"] == pytest.approx(0.8,
                                                                                                              abs=0.1)


@pytest.mark.parametrize("roi", [STRIP, DiscRoi(100.0)])
def test_gamma_approx_ranges(roi):
    for lam in (0.003, 0.01, 0.03):
        prev_ps = None
        for ps in np.linspace(0, 1, 11):
            vals = [gamma_coverage_approx(DiscModelParams(lam, p_s=ps), roi, g)["normalized"] for g in (1, 2, 3, 4)]
            assert all(0.0 <= v <= 1.0 for v in vals)
            assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))
            if prev_ps is not None:
                assert all(v >= w - 1e-12 for v, w in zip(vals, prev_ps))
            prev_ps = vals


def test_gamma_must_be_positive():
    with pytest.raises(ValueError):
        gamma_coverage_approx(DiscModelParams(0.01), STRIP, 0)


def test_obstruction_sweep():
    base = DiscModelParams(0.002)
    sweep = [0.002 + o for o in np.linspace(0, 0.03, 16)]
    pts = coverage_vs_obstruction(0.002, sweep, STRIP, 1, base)
    assert pts[0][0] == 0.0
    assert pts[0][1] == pytest.approx(gamma_coverage_approx(DiscModelParams(0.002), STRIP, 1)["normalized"])
    vals = [v for _, v in pts]
    assert all(a >= b for a, b in zip(vals, vals[1:]))
    lam = sweep[5]
    direct = gamma_coverage_approx(DiscModelParams(lam, p_s=0.002 / lam), STRIP, 1)["normalized"]
    assert pts[5][1] == pytest.approx(direct, rel=1e-15)
    with pytest.raises(ValueError):
        coverage_vs_obstruction(0.01, [0.005], STRIP, 1)


def test_large_exponent_does_not_underflow_to_nan():
    out = expected_coverage_area(DiscModelParams(5.0))
    assert math.isfinite(out["total"]) and out["total"] > 0
    assert math.isfinite(expected_void_redundancy(DiscModelParams(5.0)))


@pytest.mark.parametrize("kw", [dict(lam=-1.0), dict(lam=0.01, p_s=1.5), dict(lam=0.01, r_obj=-1.0)])
def test_invalid_params(kw):
    with pytest.raises(ValueError):
        DiscModelParams(**kw)
