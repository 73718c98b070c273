"""Oracle-agreement checks: closed forms against simulation.

Every check returns rows of ``Check`` records so the CLI can tabulate them
and the test-suite can assert on them with the same numbers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._stats import ratio_stats
from .analytics import (DiscModelParams, DiscStripRoi, expected_coverage_area, expected_void_redundancy,
                        gamma_coverage_approx)
from .diskmodel import mc_coverage_area, mc_gamma_coverage, mc_void_redundancy_raw
from .pointprocess import Seed
from .v2i_capacity import (LaneParams, build_transition_matrix, grid_capacity, monte_carlo_lane, single_lane_capacity,
                  SHARING_MODES)

# typical sensors per realization; denser scenes are cheaper per sensor but noisier
COVERAGE_SENSORS_PER_SEED = {0.003: 200, 0.01: 200, 0.0175: 400, 0.03: 400}
PS_GRID = tuple(round(0.1 * i, 1) for i in range(1, 10))


@dataclass
class Check:
    name: str
    item: str
    value: float
    reference: float
    tolerance: float
    passed: bool


def coverage_area(seed: Seed = Seed(2024), seeds: int = 200, resolution: float = 0.25,
                  lams=(0.003, 0.01, 0.0175, 0.03), rel_tol: float = 0.02) -> list:
    out = []
    for lam in lams:
        p = DiscModelParams(lam)
        m = COVERAGE_SENSORS_PER_SEED.get(lam, 200)
        mc = mc_coverage_area(p, seeds, seed.child(int(round(lam * 1e6))), resolution, sensors_per_seed=m)
        ref = expected_coverage_area(p)["total"]
        rel = abs(mc["mean"] - ref) / ref
        out.append(Check("coverage_area", f"lam={lam}", mc["mean"], ref, rel_tol, rel <= rel_tol))
    return out


def void_redundancy(seed: Seed = Seed(2025), seeds: int = 50, points_per_seed: int = 200,
                    lam: float = 0.01, rel_tol: float = 0.05) -> list:
    p = DiscModelParams(lam)
    ps = (0.25, 0.5, 1.0)
    sums, counts = mc_void_redundancy_raw(p, ps, seeds, points_per_seed, seed)
    ref = expected_void_redundancy(p)
    full, _ = ratio_stats(sums[:, -1], counts)
    out = [Check("void_redundancy", f"lam={lam},p_s=1", full, ref, rel_tol, abs(full - ref) <= rel_tol * ref)]
    # analytic linearity in p_s, to machine precision
    dev = max(abs(expected_void_redundancy(DiscModelParams(lam, p_s=s)) - s * ref) for s in ps)
    out.append(Check("redundancy_linearity_analytic", "p_s in {0.25,0.5,1}", dev, 0.0, 1e-12 * ref, dev <= 1e-12 * ref))
    # empirical: R(p_s) - p_s R(1) on common realizations, within 2 SE of zero
    for j, s in enumerate(ps[:-1]):
        d, se = ratio_stats(sums[:, j] - s * sums[:, -1], counts)
        out.append(Check("redundancy_linearity_mc", f"p_s={s}", d, 0.0, 2 * se, abs(d) <= 2 * se))
    return out


def gamma_approx(seed: Seed = Seed(2026), seeds: int = 100, points_per_seed: int = 200, lam: float = 0.01,
                 tol: float = 0.05) -> list:
    roi = DiscStripRoi(100.0, 12.0)
    gammas = (1, 2, 3)
    mc = mc_gamma_coverage(DiscModelParams(lam), roi, gammas, PS_GRID, seeds, points_per_seed, seed)
    out = []
    for s in PS_GRID:
        for g in gammas:
            a = gamma_coverage_approx(DiscModelParams(lam, p_s=s), roi, g)["normalized"]
            v = mc[(s, g)][0]
            out.append(Check("gamma_approx", f"p_s={s},gamma={g}", v, a, tol, abs(v - a) <= tol))
    return out


def single_lane(seed: Seed = Seed(2027), trials: int = 1_000_000, etas=(1, 2, 5, 10)) -> list:
    out = []
    for eta in etas:
        for s in PS_GRID:
            p = LaneParams(s, t_interest=2.0 * eta)
            exact = single_lane_capacity(p)
            mc = monte_carlo_lane(p, "single_lane", trials, seed.child(eta * 100 + int(round(s * 10))),
                                  burst_columns=0)
            for key, se_key in (("e_n_uplink", "se_n_uplink"), ("e_n_dl_unicast", "se_n_dl_unicast")):
                ref = getattr(exact, key)
                tol = 3 * mc[se_key]
                ok = abs(mc[key] - ref) <= tol if tol > 0 else abs(mc[key] - ref) <= 1e-12
                out.append(Check("single_lane_mc", f"eta={eta},p_s={s},{key}", mc[key], ref, tol, ok))
    v = single_lane_capacity(LaneParams(0.5, t_interest=10.0)).e_n_uplink
    out.append(Check("single_lane_plugin", "eta=5,p_s=0.5", v, 0.964844, 5e-7, abs(v - 0.964844) <= 5e-7))
    for s in (0.0, 1.0):
        r = single_lane_capacity(LaneParams(s, t_interest=10.0))
        z = max(abs(r.c_ul_norm), abs(r.c_dl_uni_norm))
        out.append(Check("single_lane_endpoints", f"p_s={s}", z, 0.0, 0.0, z == 0.0))
    return out


def grid_chain(eta: int = 5) -> list:
    out = []
    worst = 0.0
    for mode in SHARING_MODES:
        for s in np.linspace(0.0, 1.0, 21):
            P = build_transition_matrix(float(s), mode)
            worst = max(worst, float(np.abs(P.sum(axis=1) - 1.0).max()), float(max(0.0, -P.min())))
    out.append(Check("grid_row_stochastic", "both modes, p_s grid", worst, 0.0, 1e-12, worst <= 1e-12))
    for mode in SHARING_MODES:
        v = grid_capacity(eta, 1.0, mode)["p_v2i"]
        out.append(Check("grid_p_v2i_full", mode, v, 0.0, 1e-12, abs(v) <= 1e-12))
    for s in (0.81, 0.85, 0.9, 0.95, 0.99):
        v = grid_capacity(eta, s, "same_lane")["c_ul_norm"]
        out.append(Check("grid_c_ul_high_ps", f"p_s={s}", v, 0.25, 0.0, v < 0.25))
    for s in (0.1, 0.2, 0.3, 0.4, 0.5, 0.6):
        v = grid_capacity(eta, s, "all_lanes")["p_v2i"]
        out.append(Check("grid_all_lanes_p_v2i", f"p_s={s}", v, 0.95, 0.0, v > 0.95))
    return out


SUITE = {
    "coverage": coverage_area,
    "redundancy": void_redundancy,
    "gamma": gamma_approx,
    "single_lane": single_lane,
    "grid": grid_chain,
}


def run_suite(names=None, seed: int | None = None) -> list:
    out = []
    for name in names or SUITE:
        fn = SUITE[name]
        if seed is not None and name != "grid":
            out.extend(fn(seed=Seed(seed)))
        else:
            out.extend(fn())
    return out


def check_rows(checks) -> list:
    return [{"check": c.name, "item": c.item, "value": c.value, "reference": c.reference,
             "tolerance": c.tolerance, "passed": int(bool(c.passed))} for c in checks]


def all_passed(checks) -> bool:
    return all(c.passed for c in checks)
