"""Command-line presets that regenerate the figure data as CSV.

Usage: python -m collabsense <command> [--config FILE] [--set key=value ...]
       [--seed N] [--trials N] [--jobs N] [--resolution R] [--out PATH]

The config file is JSON; its keys must exist in the command's defaults
(printed by ``--show-defaults``). Flags override file values. The effective
config is written next to the CSV as ``<out>.config.json``.

Exit codes: 0 success, 1 validation checks failed, 2 invalid config,
3 infeasible parameters, 4 some sweep points failed (see the error column).
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields, replace
from typing import Optional

import numpy as np

from . import analytics, diskmodel, validation
from . import freeway_sim as freeway
from . import temporal_dynamics as temporal
from . import v2i_capacity as v2i
from ._stats import mean_se, ratio_stats
from .pointprocess import Seed

JOBS_ENV = "COLLABSENSE_JOBS"

EXIT_OK, EXIT_CHECKS, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_PARTIAL = 0, 1, 2, 3, 4


class ConfigError(ValueError):
    pass


def _freeway_defaults() -> dict:
    d = {f.name: f.default for f in fields(freeway.FreewayConfig)
         if f.name not in ("seed", "target_density", "p_s", "guard")}
    d["guard"] = d["sensing_radius"]
    return d


FREEWAY_LAMS = [0.001, 0.0025, 0.005, 0.0075, 0.01, 0.0125, 0.015, 0.0175, 0.02, 0.0225, 0.024]
PS_SWEEP = [round(0.1 * i, 1) for i in range(1, 10)]
V2I_PS = [round(0.05 + 0.05 * i, 2) for i in range(19)]
DISC = {"r_obj": 1.67, "r_sense": 100.0, "roi_radius": 100.0, "roi_strip_halfwidth": 12.0}

DEFAULTS = {
    "coverage-area": {"seed": 1, "jobs": 1, "resolution": 0.25, "seeds": 20, "lams": FREEWAY_LAMS,
                      "disc": DISC, "freeway": _freeway_defaults()},
    "redundancy": {"seed": 1, "jobs": 1, "seeds": 20, "points_per_seed": 200, "lams": FREEWAY_LAMS,
                   "p_s": [1.0], "model": "freeway", "disc": DISC, "freeway": _freeway_defaults()},
    "gamma-coverage": {"seed": 1, "jobs": 1, "resolution": 0.25, "seeds": 20, "disc_seeds": 100,
                       "points_per_seed": 200, "lams": [0.01], "p_s": PS_SWEEP, "gammas": [1, 2, 3],
                       "gamma_rsu": 0, "models": ["approx", "disc", "freeway"], "disc": DISC,
                       "freeway": _freeway_defaults()},
    "obstruction-sweep": {"lam_s": 0.002, "obstruction": [round(0.002 * i, 3) for i in range(16)],
                          "gammas": [1], "disc": DISC},
    "v2i": {"seed": 1, "trials": 200000, "mode": "single", "p_s": V2I_PS,
            "lane": {"speed_s": 20.0, "t_gap": 2.0, "t_interest": 10.0, "segment_d": 1000.0, "nu": 1.0}},
    "v2i-all-lanes": {"seed": 1, "p_s": V2I_PS,
                      "lane": {"speed_s": 20.0, "t_gap": 2.0, "t_interest": 10.0, "segment_d": 1000.0, "nu": 1.0}},
    "temporal": {"seed": 1, "jobs": 1, "seeds": 10, "gamma": 1, "p_s": [0.1, 0.3, 0.5, 0.7, 0.9],
                 "taus": [0.0, 0.5, 1.0, 2.0], "schemes": list(temporal.SCHEMES),
                 "dynamic": {"speed_s": 20.0, "r_vehicle": 200.0, "r_communication": 500.0, "r_interest": 200.0,
                             "dt": 0.1, "duration": 3.0, "boundary_samples": 16},
                 "rsu": {"enabled": True, "spacing": 400.0, "setback": 2.0, "elevated": False, "r_rsu": 200.0},
                 "freeway": dict(_freeway_defaults(), road_length=1000.0, target_density=0.0175)},
    "validate": {"seed": 0, "checks": list(validation.SUITE)},
}

CHOICES = {"model": ("freeway", "disc"), "mode": ("single", "grid"), "models": ("approx", "disc", "freeway"),
           "schemes": temporal.SCHEMES, "checks": tuple(validation.SUITE),
           "matern_method": ("sequential", "matern2")}


# --- config -----------------------------------------------------------------

def _check_value(path: str, default, value):
    key = path.rsplit(".", 1)[-1]
    if isinstance(default, dict):
        if not isinstance(value, dict):
            raise ConfigError(f"{path}: expected a section")
        return merge(default, value, path)
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true/false")
        return value
    if isinstance(default, (int, float)) and default is not None:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number")
        if isinstance(default, int) and not isinstance(default, bool) and not float(value).is_integer():
            raise ConfigError(f"{path}: expected an integer")
        if not math.isfinite(value):
            raise ConfigError(f"{path}: must be finite")
        return type(default)(value) if isinstance(default, int) else float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string")
        if key in CHOICES and value not in CHOICES[key]:
            raise ConfigError(f"{path}: {value!r} not in {CHOICES[key]}")
        return value
    if isinstance(default, list):
        if not isinstance(value, list) or not value:
            raise ConfigError(f"{path}: expected a nonempty list")
        proto = default[0] if default else 0.0
        return [_check_value(path, proto, v) for v in value]
    if default is None:
        return value
    raise ConfigError(f"{path}: unsupported value")


def merge(defaults: dict, given: dict, prefix: str = "") -> dict:
    out = copy.deepcopy(defaults)
    for k, v in given.items():
        path = f"{prefix}.{k}" if prefix else k
        if k not in defaults:
            raise ConfigError(f"unknown key {path!r}")
        out[k] = _check_value(path, defaults[k], v)
    return out


def _parse_override(text: str) -> tuple[list, object]:
    if "=" not in text:
        raise ConfigError(f"override {text!r} must look like key=value")
    key, raw = text.split("=", 1)
    try:
        val = json.loads(raw)
    except json.JSONDecodeError:
        val = raw
    return key.strip().split("."), val


def _nest(keys: list, val) -> dict:
    d = val
    for k in reversed(keys):
        d = {k: d}
    return d


def _deep_update(dst: dict, src: dict) -> None:
    for k, v in src.items():
        if isinstance(v, dict) and isinstance(dst.get(k), dict):
            _deep_update(dst[k], v)
        else:
            dst[k] = v


def effective_config(command: str, file_cfg: Optional[dict], overrides: list, flags: dict) -> dict:
    given: dict = {}
    if file_cfg:
        if not isinstance(file_cfg, dict):
            raise ConfigError("config file must hold a JSON object")
        _deep_update(given, file_cfg)
    for text in overrides:
        keys, val = _parse_override(text)
        _deep_update(given, _nest(keys, val))
    for k, v in flags.items():
        if v is None:
            continue
        if k not in DEFAULTS[command]:
            raise ConfigError(f"--{k} does not apply to {command}")
        given[k] = v
    cfg = merge(DEFAULTS[command], given)
    _validate_ranges(cfg)
    return cfg


def _validate_ranges(cfg: dict) -> None:
    for key in ("p_s",):
        for v in cfg.get(key, []):
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{key} values must lie in [0, 1]")
    for key in ("lams", "obstruction"):
        for v in cfg.get(key, []):
            if v < 0:
                raise ConfigError(f"{key} values must be >= 0")
    for key in ("seeds", "disc_seeds", "points_per_seed", "trials", "jobs"):
        if key in cfg and cfg[key] < 1:
            raise ConfigError(f"{key} must be >= 1")
    for g in cfg.get("gammas", []):
        if g < 1:
            raise ConfigError("gammas must be >= 1")


# --- commands ---------------------------------------------------------------

def _freeway_cfg(cfg: dict, **kw) -> freeway.FreewayConfig:
    fw = dict(cfg["freeway"])
    return freeway.FreewayConfig(**fw, seed=Seed(cfg["seed"]), **kw)


def _disc_params(cfg: dict, lam: float, p_s: float = 1.0) -> analytics.DiscModelParams:
    d = cfg["disc"]
    return analytics.DiscModelParams(lam, p_s, d["r_obj"], d["r_sense"])


def _disc_roi(cfg: dict) -> analytics.DiscStripRoi:
    return analytics.DiscStripRoi(cfg["disc"]["roi_radius"], cfg["disc"]["roi_strip_halfwidth"])


def cmd_coverage_area(cfg: dict):
    fc = _freeway_cfg(cfg)
    recs = freeway.run_experiment(fc, {"target_density": cfg["lams"]}, "coverage_area_norm", cfg["seeds"],
                                  {"resolution": cfg["resolution"]}, jobs=cfg["jobs"])
    rows = []
    for lam, r in zip(cfg["lams"], recs):
        a = analytics.expected_coverage_area(_disc_params(cfg, lam), _disc_roi(cfg))["normalized"]
        rows.append({"lam": lam, "analytic_norm": a, "sim_mean": r["mean"], "sim_se": r["se"],
                     "n_seeds": r["n_seeds"], "n_samples": r["n_samples"], "error": r["error"]})
    return ["lam", "analytic_norm", "sim_mean", "sim_se", "n_seeds", "n_samples", "error"], rows


def cmd_redundancy(cfg: dict):
    rows = []
    cols = ["lam", "p_s", "model", "analytic", "sim_mean", "sim_se", "n_seeds", "n_samples", "error"]
    if cfg["model"] == "disc":
        for k, lam in enumerate(cfg["lams"]):
            mc = diskmodel.mc_void_redundancy(_disc_params(cfg, lam), cfg["p_s"], cfg["seeds"],
                                              cfg["points_per_seed"], Seed(cfg["seed"], k))
            for ps in cfg["p_s"]:
                m, se, n = mc[ps]
                rows.append({"lam": lam, "p_s": ps, "model": "disc",
                             "analytic": analytics.expected_void_redundancy(_disc_params(cfg, lam, ps)),
                             "sim_mean": m, "sim_se": se, "n_seeds": cfg["seeds"], "n_samples": n, "error": ""})
        return cols, rows
    recs = freeway.run_experiment(_freeway_cfg(cfg), {"target_density": cfg["lams"], "p_s": cfg["p_s"]},
                                  "void_redundancy", cfg["seeds"], {"void_points": cfg["points_per_seed"]},
                                  jobs=cfg["jobs"])
    for r in recs:
        lam, ps = r["target_density"], r["p_s"]
        rows.append({"lam": lam, "p_s": ps, "model": "freeway",
                     "analytic": analytics.expected_void_redundancy(_disc_params(cfg, lam, ps)),
                     "sim_mean": r["mean"], "sim_se": r["se"], "n_seeds": r["n_seeds"],
                     "n_samples": r["n_samples"], "error": r["error"]})
    return cols, rows


def cmd_gamma_coverage(cfg: dict):
    cols = ["lam", "p_s", "gamma", "metric", "model", "mean", "se", "n_seeds", "n_samples", "error"]
    rows = []
    roi = _disc_roi(cfg)
    g_rsu = cfg["gamma_rsu"]
    metrics = ["gamma_coverage"] + (["rsu_gain"] if g_rsu > 0 else [])
    models = cfg["models"]
    for k, lam in enumerate(cfg["lams"]):
        mc = {}
        if "disc" in models:
            mc = diskmodel.mc_gamma_coverage(_disc_params(cfg, lam), roi, cfg["gammas"], cfg["p_s"],
                                             cfg["disc_seeds"], cfg["points_per_seed"], Seed(cfg["seed"], k))
        fw = {}
        if "freeway" in models:
            for metric in metrics:
                name = "gamma_coverage_norm" if metric == "gamma_coverage" else "rsu_gain"
                gams = [g for g in cfg["gammas"] if metric == "gamma_coverage" or g > g_rsu]
                if not gams:
                    continue
                recs = freeway.run_experiment(_freeway_cfg(cfg, target_density=lam),
                                              {"p_s": cfg["p_s"], "gamma": gams}, name, cfg["seeds"],
                                              {"resolution": cfg["resolution"], "gamma_rsu": g_rsu},
                                              jobs=cfg["jobs"])
                for r in recs:
                    fw[(metric, r["p_s"], r["gamma"])] = r
        for metric in metrics:
            for ps in cfg["p_s"]:
                for g in cfg["gammas"]:
                    if metric == "rsu_gain" and g <= g_rsu:
                        continue
                    base = {"lam": lam, "p_s": ps, "gamma": g, "metric": metric}
                    if "approx" in models:
                        p = _disc_params(cfg, lam, ps)
                        v = analytics.gamma_coverage_approx(p, roi, g)["normalized"]
                        if metric == "rsu_gain":
                            v = analytics.gamma_coverage_approx(p, roi, g - g_rsu)["normalized"] - v
                        rows.append(dict(base, model="approx", mean=v, se=None, n_seeds=0, n_samples=0, error=""))
                    if "disc" in models:
                        m, se = mc[(ps, g)]
                        if metric == "rsu_gain":
                            m2, se2 = mc.get((ps, g - g_rsu), (None, None))
                            if m2 is None:
                                rows.append(dict(base, model="disc", mean=None, se=None, n_seeds=0, n_samples=0,
                                                 error=f"gamma {g - g_rsu} not simulated"))
                                continue
                            m, se = m2 - m, None
                        rows.append(dict(base, model="disc", mean=m, se=se, n_seeds=cfg["disc_seeds"],
                                         n_samples=cfg["disc_seeds"] * cfg["points_per_seed"], error=""))
                    if "freeway" in models:
                        r = fw[(metric, ps, g)]
                        rows.append(dict(base, model="freeway", mean=r["mean"], se=r["se"], n_seeds=r["n_seeds"],
                                         n_samples=r["n_samples"], error=r["error"]))
    return cols, rows


def cmd_obstruction_sweep(cfg: dict):
    cols = ["lam_s", "lam_obstruction", "gamma", "normalized"]
    rows = []
    lam_s = cfg["lam_s"]
    base = _disc_params(cfg, lam_s)
    for g in cfg["gammas"]:
        pts = analytics.coverage_vs_obstruction(lam_s, [lam_s + o for o in cfg["obstruction"]], _disc_roi(cfg), g,
                                                base)
        for o, (_, v) in zip(cfg["obstruction"], pts):
            rows.append({"lam_s": lam_s, "lam_obstruction": o, "gamma": g, "normalized": v})
    return cols, rows


def _lane(cfg: dict, p_s: float) -> v2i.LaneParams:
    return v2i.LaneParams(p_s, **cfg["lane"])


def cmd_v2i(cfg: dict):
    cols = ["p_s", "c_ul_norm", "c_dl_bcast_norm", "c_dl_uni_norm", "c_v2v_norm"]
    rows = []
    grid = cfg["mode"] == "grid"
    for k, ps in enumerate(cfg["p_s"]):
        p = _lane(cfg, ps)
        if grid:
            g = v2i.grid_capacity(p.eta, ps, "same_lane", p)
            full = v2i.grid_capacity(p.eta, 1.0, "same_lane")["e_v2v"]
            rows.append({"p_s": ps, "c_ul_norm": g["c_ul_norm"], "c_dl_bcast_norm": g["c_dl_bcast_norm"],
                         "c_dl_uni_norm": g["c_dl_uni_norm"], "c_v2v_norm": g["e_v2v"] / full})
        else:
            r = v2i.single_lane_capacity(p)
            v = v2i.v2v_throughput_proxy(p, "single_lane", cfg["trials"], Seed(cfg["seed"], k))
            rows.append({"p_s": ps, "c_ul_norm": r.c_ul_norm, "c_dl_bcast_norm": r.c_dl_bcast_norm,
                         "c_dl_uni_norm": r.c_dl_uni_norm, "c_v2v_norm": v})
    return cols, rows


def cmd_v2i_all_lanes(cfg: dict):
    cols = ["p_s", "p_v2i", "c_ul_norm", "c_dl_bcast_norm", "c_dl_uni_norm", "c_v2v_norm"]
    rows = []
    for ps in cfg["p_s"]:
        p = _lane(cfg, ps)
        g = v2i.grid_capacity(p.eta, ps, "all_lanes", p)
        full = v2i.grid_capacity(p.eta, 1.0, "all_lanes")["e_v2v"]
        rows.append({"p_s": ps, "p_v2i": g["p_v2i"], "c_ul_norm": g["c_ul_norm"],
                     "c_dl_bcast_norm": g["c_dl_bcast_norm"], "c_dl_uni_norm": g["c_dl_uni_norm"],
                     "c_v2v_norm": g["e_v2v"] / full})
    return cols, rows


def _dynamic_cfg(cfg: dict) -> temporal.DynamicConfig:
    fw = dict(cfg["freeway"])
    lam = fw.pop("target_density")
    base = freeway.FreewayConfig(**fw, target_density=lam, p_s=max(cfg["p_s"]))
    r = dict(cfg["rsu"])
    rsu = temporal.RsuConfig(**{k: v for k, v in r.items() if k != "enabled"}) if r["enabled"] else None
    return temporal.DynamicConfig(base=base, rsu=rsu, **cfg["dynamic"])


def _temporal_seed(args):
    dcfg, gamma, root, s, taus, schemes, p_s = args
    recs = temporal.simulate_grid(dcfg, gamma, Seed(root).child(s), taus, schemes, p_s)
    acc: dict = {}
    for r in recs:
        if r["n_refs"] == 0:
            continue
        key = (r["p_s"], r["scheme"], r["tau"], r["direction"])
        a = acc.setdefault(key, [0.0, 0])
        a[0] += r["coverage"] * r["n_refs"]
        a[1] += r["n_refs"]
    return acc


def cmd_temporal(cfg: dict):
    cols = ["p_s", "scheme", "tau", "direction", "mean", "se", "n_seeds", "n_samples"]
    dcfg = _dynamic_cfg(cfg)
    dcfg.base.check_feasible()
    taus, schemes, ps = cfg["taus"], cfg["schemes"], cfg["p_s"]
    if dcfg.duration < max(taus):
        raise ValueError("dynamic.duration must be at least the largest tau")
    jobs = [(dcfg, cfg["gamma"], cfg["seed"], s, taus, schemes, ps) for s in range(cfg["seeds"])]
    if cfg["jobs"] > 1:
        with ProcessPoolExecutor(max_workers=cfg["jobs"]) as ex:
            per_seed = list(ex.map(_temporal_seed, jobs))
    else:
        per_seed = [_temporal_seed(j) for j in jobs]
    rows = []
    for p in ps:
        for sc in schemes:
            for tau in taus:
                for d, label in ((1, "nearby"), (-1, "opposite")):
                    key = (p, sc, tau, d)
                    num = [a.get(key, [0.0, 0])[0] for a in per_seed]
                    den = [a.get(key, [0.0, 0])[1] for a in per_seed]
                    m, se = ratio_stats(num, den)
                    rows.append({"p_s": p, "scheme": sc, "tau": tau, "direction": label, "mean": m, "se": se,
                                 "n_seeds": len(per_seed), "n_samples": int(sum(den))})
    return cols, rows


def cmd_validate(cfg: dict):
    checks = validation.run_suite(cfg["checks"], seed=cfg["seed"] or None)
    return ["check", "item", "value", "reference", "tolerance", "passed"], validation.check_rows(checks)


COMMANDS = {
    "coverage-area": cmd_coverage_area,
    "redundancy": cmd_redundancy,
    "gamma-coverage": cmd_gamma_coverage,
    "obstruction-sweep": cmd_obstruction_sweep,
    "v2i": cmd_v2i,
    "v2i-all-lanes": cmd_v2i_all_lanes,
    "temporal": cmd_temporal,
    "validate": cmd_validate,
}


# --- output -----------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".12g") if math.isfinite(v) else ""
    return str(v)


def write_csv(path: str, columns: list, rows: list) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c)) for c in columns])


def _error_line(kind: str, message: str, code: int) -> None:
    print(json.dumps({"error": kind, "code": code, "message": message}), file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="collabsense", description="Collaborative sensing experiment presets.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="JSON config file")
    ap.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                    help="override a config value (dotted keys, JSON values)")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--trials", type=int)
    ap.add_argument("--jobs", type=int, default=None)
    ap.add_argument("--resolution", type=float)
    ap.add_argument("--out", help="CSV path (default: <command>.csv)")
    ap.add_argument("--show-defaults", action="store_true", help="print the command's default config and exit")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cmd = args.command
    if args.show_defaults:
        print(json.dumps(DEFAULTS[cmd], indent=2, sort_keys=True))
        return EXIT_OK
    jobs = args.jobs
    if jobs is None and os.environ.get(JOBS_ENV) and "jobs" in DEFAULTS[cmd]:
        try:
            jobs = int(os.environ[JOBS_ENV])
        except ValueError:
            _error_line("config", f"{JOBS_ENV} must be an integer", EXIT_CONFIG)
            return EXIT_CONFIG
    try:
        file_cfg = None
        if args.config:
            with open(args.config, encoding="utf-8") as fh:
                file_cfg = json.load(fh)
        flags = {"seed": args.seed, "trials": args.trials, "jobs": jobs, "resolution": args.resolution}
        cfg = effective_config(cmd, file_cfg, args.overrides, flags)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        _error_line("config", str(exc), EXIT_CONFIG)
        return EXIT_CONFIG
    try:
        columns, rows = COMMANDS[cmd](cfg)
    except ConfigError as exc:
        _error_line("config", str(exc), EXIT_CONFIG)
        return EXIT_CONFIG
    except (ValueError, TypeError) as exc:
        _error_line("infeasible", str(exc), EXIT_INFEASIBLE)
        return EXIT_INFEASIBLE
    out = args.out or f"{cmd}.csv"
    write_csv(out, columns, rows)
    with open(out + ".config.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump({"command": cmd, "config": cfg}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    failed = [r for r in rows if r.get("error")]
    if failed:
        _error_line("partial", f"{len(failed)} of {len(rows)} sweep points failed", EXIT_PARTIAL)
        return EXIT_PARTIAL
    if cmd == "validate" and not all(r["passed"] for r in rows):
        bad = [f"{r['check']}[{r['item']}]" for r in rows if not r["passed"]]
        _error_line("checks", "failed: " + ", ".join(bad), EXIT_CHECKS)
        return EXIT_CHECKS
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
