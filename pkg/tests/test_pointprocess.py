import numpy as np
import pytest
from scipy import stats

from collabsense.pointprocess import (Seed, Window, displace, matern_base_intensity, sample_hppp,
                                      sample_matern_lane, thin, uniform_marks)


def test_hppp_empty_at_zero():
    assert sample_hppp(0.0, Window(0, 1000, -12, 12), Seed(1)).shape == (0, 2)


def test_hppp_mean_count():
    w = Window(0, 1000, -12, 12)
    counts = np.array([len(sample_hppp(0.01, w, Seed(3, s))) for s in range(10_000)])
    assert abs(counts.mean() - 240.0) <= 3 * np.sqrt(240.0 / 10_000)
    # Poisson: variance equals the mean
    assert abs(counts.var(ddof=1) / 240.0 - 1.0) < 0.05


def test_hppp_uniform_in_window():
    w = Window(-50, 50, 0, 20)
    pts = np.concatenate([sample_hppp(0.05, w, Seed(4, s)) for s in range(200)])
    assert pts[:, 0].min() >= -50 and pts[:, 0].max() <= 50
    assert pts[:, 1].min() >= 0 and pts[:, 1].max() <= 20
    h, _ = np.histogram(pts[:, 0], bins=20, range=(-50, 50))
    assert stats.chisquare(h).pvalue > 0.01


def test_hppp_deterministic():
    w = Window.centered(100.0)
    a = sample_hppp(0.01, w, Seed(9, 2), 5)
    b = sample_hppp(0.01, w, Seed(9, 2), 5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, sample_hppp(0.01, w, Seed(9, 3), 5))


def test_hppp_negative_intensity():
    with pytest.raises(ValueError):
        sample_hppp(-1.0, Window.centered(10.0), Seed(0))


def test_seed_children_distinct():
    s = Seed(7)
    kids = {s.child(i).stream for i in range(1000)}
    assert len(kids) == 1000
    assert s.child(3) == s.child(3)


def test_window_guard():
    w = Window(0, 1000, -12, 12, guard_margin=100)
    assert w.inner() == (100, 900, 88, -88)
    with pytest.raises(ValueError):
        Window(0, 0, 0, 1)
    with pytest.raises(ValueError):
        Window(0, 1, 0, 1, guard_margin=-1)


@pytest.mark.parametrize("p, expected", [(1.0, 50), (0.0, 0)])
def test_thin_extremes(p, expected):
    pts = np.random.default_rng(0).random((50, 2))
    kept, removed = thin(pts, p, Seed(1))
    assert len(kept) == expected and len(removed) == 50 - expected


def test_thin_fraction():
    pts = np.zeros((100_000, 2))
    kept, _ = thin(pts, 0.2, Seed(2))
    assert abs(len(kept) / 1e5 - 0.2) <= 0.004


def test_thin_parts_are_uniform():
    w = Window(0, 100, 0, 100)
    pts = np.concatenate([sample_hppp(0.05, w, Seed(8, s)) for s in range(100)])
    kept, removed = thin(pts, 0.3, Seed(11))
    for part in (kept, removed):
        h, _, _ = np.histogram2d(part[:, 0], part[:, 1], bins=8, range=[[0, 100], [0, 100]])
        assert stats.chisquare(h.ravel()).pvalue > 0.01


def test_thin_rejects_bad_probability():
    with pytest.raises(ValueError):
        thin(np.zeros((3, 2)), 1.5, Seed(0))


def test_marks_nested_thinning():
    m = uniform_marks(1000, Seed(4))
    assert np.all((m < 0.2) <= (m < 0.5))


def test_matern_empty():
    assert sample_matern_lane(1000.0, 10.0, 0.0, Seed(0)).size == 0


@pytest.mark.parametrize("method", ["sequential", "matern2"])
def test_matern_gaps_and_density(method):
    target = 0.05 if method == "sequential" else 0.04
    counts = []
    for s in range(100):
        x = sample_matern_lane(10_000.0, 10.0, target, Seed(5, s), method=method)
        assert np.all(np.diff(x) >= 10.0)
        assert x.min() >= 0 and x.max() <= 10_000.0
        counts.append(x.size)
    assert abs(np.mean(counts) / (target * 1e4) - 1.0) < 0.05


def test_matern_rejects_infeasible():
    with pytest.raises(ValueError):
        sample_matern_lane(1000.0, 10.0, 0.11, Seed(0))
    with pytest.raises(ValueError):
        matern_base_intensity(0.06, 10.0, "matern2")
    with pytest.raises(ValueError):
        matern_base_intensity(0.01, 10.0, "bogus")


def test_displace():
    pts = np.array([[0.0, 1.0], [5.0, -2.0]])
    assert np.array_equal(displace(pts, np.ones((2, 2)), 0.0), pts)
    out = displace(pts, np.array([[20.0, 0.0], [20.0, 0.0]]), 1.5)
    np.testing.assert_allclose(out[:, 0] - pts[:, 0], 30.0)
    with pytest.raises(ValueError):
        displace(pts, np.ones((3, 2)), 1.0)


def test_displaced_hppp_stays_uniform():
    # wrap-around displacement on a torus keeps an HPPP an HPPP
    w = Window(0, 100, 0, 100)
    pts = np.concatenate([sample_hppp(0.05, w, Seed(12, s)) for s in range(50)])
    vel = np.random.default_rng(1).normal(0, 10, pts.shape)
    moved = np.mod(displace(pts, vel, 3.0), 100.0)
    h, _, _ = np.histogram2d(moved[:, 0], moved[:, 1], bins=8, range=[[0, 100], [0, 100]])
    assert stats.chisquare(h.ravel()).pvalue > 0.01
