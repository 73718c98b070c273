"""V2I capacity needed to share sensor data along a lane.

A sensing reference vehicle must deliver its data to the ``eta`` vehicles in
front and behind. Collaborating vehicles relay over line-of-sight V2V links;
a non-collaborating vehicle breaks the chain and the infrastructure steps in
(uplink once, then broadcast or per-vehicle unicast), after which V2V relay
resumes.

The multi-lane variant is a grid of 3 lanes where vehicles also relay to the
nearest vehicle in a neighbouring lane. Its forward evolution column by column
is a Markov chain on Z_k = (X_k, Y_k): X_k flags the vehicles of column k
that collaborate and hold the data, Y_k whether V2I was needed so far.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .pointprocess import Seed

SHARING_MODES = ("same_lane", "all_lanes")
MC_MODES = ("single_lane", "grid_same_lane", "grid_all_lanes")


@dataclass(frozen=True)
class LaneParams:
    p_s: float
    speed_s: float = 20.0
    t_gap: float = 2.0
    t_interest: float = 10.0
    segment_d: float = 1000.0
    nu: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.p_s <= 1.0:
            raise ValueError(f"p_s must lie in [0, 1], got {self.p_s}")
        if self.speed_s <= 0 or self.t_gap <= 0 or self.segment_d <= 0:
            raise ValueError("speed, gap and segment length must be positive")
        if self.eta < 1:
            raise ValueError("t_interest must be at least t_gap (eta >= 1)")

    @property
    def eta(self) -> int:
        return int(math.floor(self.t_interest / self.t_gap + 1e-9))

    @property
    def lam_vehicle(self) -> float:
        return 1.0 / (self.speed_s * self.t_gap)

    @property
    def scale(self) -> float:
        """lam_vehicle * d * nu, the normalization of every capacity."""
        return self.lam_vehicle * self.segment_d * self.nu


@dataclass(frozen=True)
class CapacityResult:
    e_n_uplink: float
    e_n_dl_unicast: float
    c_ul: float
    c_dl_broadcast: float
    c_dl_unicast: float
    c_ul_norm: float
    c_dl_bcast_norm: float
    c_dl_uni_norm: float


def _result(p: LaneParams, e_up: float, e_uni: float) -> CapacityResult:
    ul = p.p_s * e_up
    uni = p.p_s * e_uni
    return CapacityResult(e_up, e_uni, ul * p.scale, ul * p.scale, uni * p.scale, ul, ul, uni)


def p_front(eta: int, p_s: float) -> float:
    """Chance that some collaborator among the next ``eta`` vehicles cannot be reached by V2V.

    V2I is avoided exactly when the row reads 1^k 0^(eta-k): k collaborators
    then only non-collaborators, who need nothing.
    """
    q = 1.0 - p_s
    return 1.0 - math.fsum(p_s ** k * q ** (eta - k) for k in range(eta + 1))


def p_v2i(eta: int, p_s: float) -> float:
    return 1.0 - (1.0 - p_front(eta, p_s)) ** 2


def single_lane_capacity(p: LaneParams) -> CapacityResult:
    eta = p.eta
    e_uni = 2.0 * (eta - 1) * p.p_s * (1.0 - p.p_s) if eta >= 2 else 0.0
    return _result(p, p_v2i(eta, p.p_s), e_uni)


# --- grid chain -------------------------------------------------------------

def _share(xt, s):
    """In-column V2V sharing: lanes 1-2-3 form a path over collaborating vehicles."""
    x1, x2, x3 = xt
    s1, s2, s3 = s
    return (x1 or (s1 and (x2 or (x3 and s2))),
            x2 or (s2 and (x1 or x3)),
            x3 or (s3 and (x2 or (x1 and s2))))


def _unreached_components(xh, s) -> int:
    """Connected runs of collaborating, unreached vehicles along lanes 1-2-3."""
    n = 0
    prev = False
    for i in range(3):
        cur = bool(s[i]) and not xh[i]
        if cur and not prev:
            n += 1
        prev = cur
    return n


def column_step(x, s, mode: str):
    """One column of the relay rules.

    Returns (next X, V2I trigger, unicast downlinks in the column, V2V receptions in the column).
    """
    xt = tuple(bool(a and b) for a, b in zip(x, s))
    xh = _share(xt, s)
    if mode == "same_lane":
        trig = bool(s[1]) and not xh[1]
        uni = 1 if trig else 0
    elif mode == "all_lanes":
        trig = any(bool(h) != bool(si) for h, si in zip(xh, s))
        uni = _unreached_components(xh, s)
    else:
        raise ValueError(f"unknown sharing mode {mode!r}")
    nxt = tuple(bool(v) for v in s) if trig else xh
    v2v = sum(nxt) - uni
    return nxt, trig, uni, v2v


STATES = [(x, y) for y in (0, 1) for x in itertools.product((0, 1), repeat=3)]
STATE_INDEX = {st: i for i, st in enumerate(STATES)}


def _outcomes(p_s: float):
    for s in itertools.product((0, 1), repeat=3):
        k = sum(s)
        yield s, p_s ** k * (1.0 - p_s) ** (3 - k)


def build_transition_matrix(p_s: float, sharing_mode: str = "same_lane") -> np.ndarray:
    """Row-stochastic P over the 16 states ((x1, x2, x3), y): P[i, j] = P(Z_{k+1} = j | Z_k = i).

    Distributions evolve as pi_{k+1} = P.T @ pi_k.
    """
    if not 0.0 <= p_s <= 1.0:
        raise ValueError(f"p_s must lie in [0, 1], got {p_s}")
    if sharing_mode not in SHARING_MODES:
        raise ValueError(f"unknown sharing mode {sharing_mode!r}")
    n = len(STATES)
    P = np.zeros((n, n))
    for j, (x, y) in enumerate(STATES):
        for s, pr in _outcomes(p_s):
            nxt, trig, _, _ = column_step(x, s, sharing_mode)
            i = STATE_INDEX[(tuple(int(v) for v in nxt), int(y or trig))]
            P[j, i] += pr
    return P


def initial_distribution(p_s: float) -> np.ndarray:
    """Column 0: the reference holds its data; each lateral neighbour collaborates
    (and hears the reference directly) with probability p_s; Y = 0."""
    pi = np.zeros(len(STATES))
    for s1 in (0, 1):
        for s3 in (0, 1):
            pr = (p_s if s1 else 1 - p_s) * (p_s if s3 else 1 - p_s)
            pi[STATE_INDEX[((s1, 1, s3), 0)]] += pr
    return pi


def _x_matrix_with_rewards(p_s: float, mode: str):
    """8-state chain on X alone plus expected per-step unicast and V2V counts from each state."""
    xs = list(itertools.product((0, 1), repeat=3))
    idx = {x: i for i, x in enumerate(xs)}
    Q = np.zeros((8, 8))
    uni = np.zeros(8)
    v2v = np.zeros(8)
    for j, x in enumerate(xs):
        for s, pr in _outcomes(p_s):
            nxt, _, u, v = column_step(x, s, mode)
            Q[idx[tuple(int(a) for a in nxt)], j] += pr
            uni[j] += pr * u
            v2v[j] += pr * v
    return Q, uni, v2v, idx


def grid_capacity(eta: int, p_s: float, sharing_mode: str = "same_lane", p: LaneParams | None = None) -> dict:
    """p_v2i, expected unicast downlinks and V2V receptions for the 3-lane grid.

    Both directions start from the same column-0 state and then evolve
    independently, so p_v2i combines them per initial state.
    """
    if eta < 1:
        raise ValueError("eta must be >= 1")
    P = build_transition_matrix(p_s, sharing_mode)
    pi0 = initial_distribution(p_s)
    Pk = np.linalg.matrix_power(P, eta)
    v2i_mask = np.array([y == 1 for _, y in STATES], dtype=float)
    pf = Pk @ v2i_mask  # p_front started from each basis state
    pv = float(pi0 @ (1.0 - (1.0 - pf) ** 2))
    Q, uni, v2v, idx = _x_matrix_with_rewards(p_s, sharing_mode)
    q = np.zeros(8)
    for (x, y), w in zip(STATES, pi0):
        q[idx[x]] += w
    e_uni = 0.0
    e_v2v = 0.0
    for _ in range(eta):
        e_uni += float(uni @ q)
        e_v2v += float(v2v @ q)
        q = Q @ q
    lateral0 = 2.0 * p_s
    out = {"p_v2i": pv, "e_n_uplink": pv, "e_n_dl_unicast": 2.0 * e_uni, "e_v2v": 2.0 * e_v2v + lateral0,
           "c_ul_norm": p_s * pv, "c_dl_bcast_norm": p_s * pv, "c_dl_uni_norm": p_s * 2.0 * e_uni}
    if p is not None:
        out["c_ul"] = out["c_ul_norm"] * p.scale
        out["c_dl_broadcast"] = out["c_ul"]
        out["c_dl_unicast"] = out["c_dl_uni_norm"] * p.scale
    return out


# --- Monte Carlo ------------------------------------------------------------

def _propagate(x0: np.ndarray, S: np.ndarray, mode: str):
    """Vectorized relay over columns.

    x0: (n, 3) bool column-0 holders; S: (n, eta, 3) bool collaborators in
    columns 1..eta. Reachability within a column is closed by repeated
    neighbour passes on the lane path rather than the closed-form update.
    Returns (any V2I, unicast count, V2V receptions) per row.
    """
    n, eta, _ = S.shape
    x = x0.copy()
    need = np.zeros(n, dtype=bool)
    uni = np.zeros(n, dtype=np.int64)
    v2v = np.zeros(n, dtype=np.int64)
    for k in range(eta):
        s = S[:, k, :]
        h = x & s
        for _ in range(2):
            h = h | (s & (np.roll(h, 1, axis=1) & np.array([False, True, True])))
            h = h | (s & (np.roll(h, -1, axis=1) & np.array([True, True, False])))
        if mode == "single_lane":
            trig = s[:, 1] & ~h[:, 1]
            u = trig.astype(np.int64)
        elif mode == "grid_same_lane":
            trig = s[:, 1] & ~h[:, 1]
            u = trig.astype(np.int64)
        else:
            miss = s & ~h
            trig = miss.any(axis=1)
            starts = miss & ~np.concatenate([np.zeros((n, 1), bool), miss[:, :2]], axis=1)
            u = starts.sum(axis=1)
        x = np.where(trig[:, None], s, h)
        need |= trig
        uni += u
        v2v += x.sum(axis=1) - u
    return need, uni, v2v


def _sample_grid(rng, n: int, eta: int, p_s: float, mode: str):
    lanes = rng.random((n, 2 * eta + 1, 3)) < p_s
    if mode == "single_lane":
        lanes[:, :, 0] = False
        lanes[:, :, 2] = False
    lanes[:, eta, 1] = True
    return lanes


def _directions(lanes: np.ndarray, eta: int):
    x0 = lanes[:, eta, :]
    fwd = lanes[:, eta + 1:, :]
    bwd = lanes[:, :eta, :][:, ::-1, :]
    return x0, fwd, bwd


def monte_carlo_lane(p: LaneParams, mode: str, trials: int, seed: Seed, batch: int = 200_000,
                     burst_columns: int = 20_000) -> dict:
    """Empirical V2I counts for a sensing reference vehicle.

    Each trial draws collaboration flags for the 2*eta+1 columns around the
    reference and applies the relay rules. ``percentile_95`` is the 95th
    percentile, over road segments of length d, of the number of uplinks
    sent by the sensing vehicles in the segment (a burst proxy), from a long
    lane drawn separately; ``segment_mean`` is the mean of the same count.
    """
    if mode not in MC_MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    eta = p.eta
    sharing = "all_lanes" if mode == "grid_all_lanes" else "same_lane"
    inner = "grid_all_lanes" if sharing == "all_lanes" else mode
    up = np.zeros(0)
    sums = np.zeros(3)
    sq = np.zeros(3)
    done = 0
    b = 0
    while done < trials:
        n = min(batch, trials - done)
        rng = seed.rng(0xB1, b)
        lanes = _sample_grid(rng, n, eta, p.p_s, mode)
        x0, fwd, bwd = _directions(lanes, eta)
        nf, uf, vf = _propagate(x0, fwd, inner)
        nb, ub, vb = _propagate(x0, bwd, inner)
        lat = x0[:, 0].astype(np.int64) + x0[:, 2]
        vals = np.stack([(nf | nb).astype(float), (uf + ub).astype(float), (vf + vb + lat).astype(float)])
        sums += vals.sum(axis=1)
        sq += (vals ** 2).sum(axis=1)
        done += n
        b += 1
    mean = sums / trials
    var = np.maximum(sq / trials - mean ** 2, 0.0) * trials / max(trials - 1, 1)
    se = np.sqrt(var / trials)
    res = _result(p, float(mean[0]), float(mean[1]))
    p95, seg_mean = _burst(p, inner, seed, burst_columns)
    return {"e_n_uplink": res.e_n_uplink, "e_n_dl_unicast": res.e_n_dl_unicast, "e_v2v": float(mean[2]),
            "se_n_uplink": float(se[0]), "se_n_dl_unicast": float(se[1]), "se_v2v": float(se[2]),
            "c_ul_norm": res.c_ul_norm, "c_dl_bcast_norm": res.c_dl_bcast_norm, "c_dl_uni_norm": res.c_dl_uni_norm,
            "percentile_95": p95, "segment_mean": seg_mean, "trials": trials}


def _burst(p: LaneParams, mode: str, seed: Seed, columns: int) -> tuple[float, float]:
    eta = p.eta
    m = max(1, int(round(p.segment_d * p.lam_vehicle)))
    if columns < m:
        return float("nan"), float("nan")
    rng = seed.rng(0xB2)
    total = columns + 2 * eta
    road = rng.random((total, 3)) < p.p_s
    if mode == "single_lane":
        road[:, 0] = False
        road[:, 2] = False
    win = np.lib.stride_tricks.sliding_window_view(road, (2 * eta + 1, 3))[:, 0]
    refs = np.flatnonzero(road[eta:eta + columns, 1])
    x0, fwd, bwd = _directions(win[refs], eta)
    nf, _, _ = _propagate(x0, fwd, mode)
    nb, _, _ = _propagate(x0, bwd, mode)
    per_col = np.zeros(columns)
    per_col[refs] = (nf | nb)
    nseg = columns // m
    seg = per_col[:nseg * m].reshape(nseg, m).sum(axis=1)
    return float(np.percentile(seg, 95)), float(seg.mean())


def v2v_throughput_proxy(p: LaneParams, mode: str, trials: int, seed: Seed) -> float:
    """Mean V2V receptions per sensing vehicle's data, relative to the same mode at p_s = 1.

    Receptions count every vehicle that obtains the data over a V2V link,
    including lateral relays and V2V forwarding after an infrastructure drop.
    """
    if p.p_s == 0:
        return 0.0
    cur = monte_carlo_lane(p, mode, trials, seed, burst_columns=0)["e_v2v"]
    full = monte_carlo_lane(LaneParams(1.0, p.speed_s, p.t_gap, p.t_interest, p.segment_d, p.nu), mode, 1, seed,
                            burst_columns=0)["e_v2v"]
    return cur / full
