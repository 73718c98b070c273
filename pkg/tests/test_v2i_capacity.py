import numpy as np
import pytest

from collabsense.pointprocess import Seed
from collabsense.v2i_capacity import (STATES, LaneParams, build_transition_matrix, grid_capacity,
                                      initial_distribution, monte_carlo_lane, p_front, p_v2i, single_lane_capacity,
                                      v2v_throughput_proxy)

PS = [round(0.1 * i, 1) for i in range(1, 10)]


def lane(p_s, eta=5):
    return LaneParams(p_s, t_interest=2.0 * eta)


def test_eta_from_times():
    assert lane(0.5, 5).eta == 5
    assert LaneParams(0.5, t_gap=2.0, t_interest=9.9).eta == 4


@pytest.mark.parametrize("p_s", [0.0, 1.0])
def test_endpoints_are_zero(p_s):
    r = single_lane_capacity(lane(p_s))
    assert r.e_n_uplink == 0.0
    assert r.c_ul_norm == r.c_dl_bcast_norm == r.c_dl_uni_norm == 0.0


def test_plugin_values():
    r = single_lane_capacity(lane(0.5))
    assert r.e_n_uplink == pytest.approx(1 - (6 / 32) ** 2, abs=1e-15)
    assert r.e_n_uplink == pytest.approx(0.964844, abs=5e-7)
    assert r.e_n_dl_unicast == pytest.approx(2.0, abs=1e-15)


def test_p_front_examples():
    assert p_front(1, 0.5) == pytest.approx(0.0, abs=1e-15)
    assert p_front(5, 0.5) == pytest.approx(0.8125, abs=1e-15)


@pytest.mark.parametrize("eta", [1, 2, 5, 10])
@pytest.mark.parametrize("p_s", PS)
def test_p_v2i_is_uplink(eta, p_s):
    assert p_v2i(eta, p_s) == pytest.approx(single_lane_capacity(lane(p_s, eta)).e_n_uplink, abs=1e-15)


def test_ul_equals_broadcast():
    for p_s in PS:
        r = single_lane_capacity(lane(p_s))
        assert r.c_ul == r.c_dl_broadcast


def test_uplink_unimodal():
    vals = np.array([single_lane_capacity(lane(p)).e_n_uplink for p in np.linspace(0, 1, 201)])
    assert np.all(vals[1:-1] > 0)
    signs = np.sign(np.diff(vals))
    signs = signs[signs != 0]
    assert np.count_nonzero(np.diff(signs)) == 1


@pytest.mark.parametrize("mode", ["same_lane", "all_lanes"])
def test_transition_matrices_stochastic(mode):
    for p_s in np.linspace(0, 1, 11):
        P = build_transition_matrix(float(p_s), mode)
        assert np.all(P >= 0)
        np.testing.assert_allclose(P.sum(axis=1), 1.0, atol=1e-12)
        pi = initial_distribution(float(p_s))
        for _ in range(100):
            pi = pi @ P
        assert abs(pi.sum() - 1.0) < 1e-10


def test_extreme_chains_absorb():
    idx = {s: i for i, s in enumerate(STATES)}
    P1 = build_transition_matrix(1.0, "same_lane")
    s = idx[((1, 1, 1), 0)]
    assert P1[s, s] == pytest.approx(1.0)
    P0 = build_transition_matrix(0.0, "same_lane")
    z = idx[((0, 0, 0), 0)]
    assert P0[z, z] == pytest.approx(1.0)


def test_grid_examples():
    for mode in ("same_lane", "all_lanes"):
        assert grid_capacity(5, 1.0, mode)["p_v2i"] == pytest.approx(0.0, abs=1e-12)
    for p_s in (0.85, 0.9, 0.95):
        assert grid_capacity(5, p_s, "same_lane")["c_ul_norm"] < 0.25


def test_grid_all_lanes_mid_range():
    # interior of the stated range; the endpoints are reported in the acceptance run
    for p_s in (0.2, 0.3, 0.4, 0.5):
        assert grid_capacity(5, p_s, "all_lanes")["p_v2i"] > 0.95


def test_lateral_help_reduces_v2i():
    for p_s in np.linspace(0.05, 0.95, 19):
        assert grid_capacity(5, float(p_s), "same_lane")["p_v2i"] <= p_v2i(5, float(p_s)) + 1e-12


def test_grid_matches_monte_carlo():
    for mode, mc_mode in (("same_lane", "grid_same_lane"), ("all_lanes", "grid_all_lanes")):
        for p_s in (0.3, 0.7):
            g = grid_capacity(5, p_s, mode)
            mc = monte_carlo_lane(lane(p_s), mc_mode, 200_000, Seed(31), burst_columns=0)
            assert abs(mc["e_n_uplink"] - g["p_v2i"]) <= 4 * mc["se_n_uplink"] + 1e-12
            assert abs(mc["e_n_dl_unicast"] - g["e_n_dl_unicast"]) <= 4 * mc["se_n_dl_unicast"] + 1e-12
            assert abs(mc["e_v2v"] - g["e_v2v"]) <= 4 * mc["se_v2v"] + 1e-12


def test_monte_carlo_single_lane_example():
    mc = monte_carlo_lane(lane(0.5), "single_lane", 1_000_000, Seed(32))
    assert mc["e_n_uplink"] == pytest.approx(0.9648, abs=0.001)
    assert mc["percentile_95"] >= mc["segment_mean"]


def test_monte_carlo_full_penetration_has_no_v2i():
    mc = monte_carlo_lane(lane(1.0), "grid_same_lane", 10_000, Seed(33))
    assert mc["e_n_uplink"] == 0.0 and mc["e_n_dl_unicast"] == 0.0


def test_monte_carlo_deterministic():
    a = monte_carlo_lane(lane(0.4), "single_lane", 50_000, Seed(34), burst_columns=500)
    b = monte_carlo_lane(lane(0.4), "single_lane", 50_000, Seed(34), burst_columns=500)
    assert a == b


def test_monte_carlo_rejects_bad_mode():
    with pytest.raises(ValueError):
        monte_carlo_lane(lane(0.4), "nope", 10, Seed(0))


def test_v2v_proxy():
    assert v2v_throughput_proxy(lane(1.0), "single_lane", 1000, Seed(1)) == pytest.approx(1.0)
    assert v2v_throughput_proxy(lane(0.0), "single_lane", 1000, Seed(1)) == 0.0
    vals = [v2v_throughput_proxy(lane(p), "single_lane", 100_000, Seed(2)) for p in PS]
    assert all(a <= b for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("kw", [dict(p_s=1.2), dict(p_s=0.5, t_gap=0.0), dict(p_s=0.5, t_interest=1.0)])
def test_invalid_lane_params(kw):
    with pytest.raises(ValueError):
        LaneParams(**kw)
