import csv
import json

import pytest

from collabsense import cli

# reduced configs so every preset runs in seconds; defaults are covered by the acceptance run
SMALL = {
    "coverage-area": ["--set", "seeds=1", "--set", "lams=[0.01]"],
    "redundancy": ["--set", "seeds=1", "--set", "points_per_seed=20", "--set", "lams=[0.01]"],
    "gamma-coverage": ["--set", "seeds=1", "--set", "disc_seeds=2", "--set", "points_per_seed=20",
                       "--set", "p_s=[0.3]", "--set", "gammas=[1,2]", "--set", "gamma_rsu=1",
                       "--resolution", "0.5"],
    "obstruction-sweep": [],
    "v2i": ["--trials", "2000", "--set", "p_s=[0.2,0.5]"],
    "v2i-all-lanes": [],
    "temporal": ["--set", "seeds=1", "--set", "p_s=[0.3]", "--set", "taus=[0,0.5]", "--set", "dynamic.duration=0.5",
                 "--set", "dynamic.dt=0.5", "--set", "freeway.road_length=300"],
    "validate": ["--set", 'checks=["grid"]'],
}


def run(tmp_path, name, *args, out="out.csv"):
    path = tmp_path / out
    code = cli.main([name, "--out", str(path), *args])
    return code, path


def error_line(capsys):
    lines = [l for l in capsys.readouterr().err.splitlines() if l.startswith("{")]
    assert lines, "no machine-readable error line"
    return json.loads(lines[-1])


@pytest.mark.parametrize("name", sorted(SMALL))
def test_presets_are_byte_identical(tmp_path, name):
    c1, p1 = run(tmp_path, name, *SMALL[name], out="a.csv")
    c2, p2 = run(tmp_path, name, *SMALL[name], out="b.csv")
    assert c1 == c2
    assert p1.read_bytes() == p2.read_bytes()
    raw = p1.read_bytes()
    assert b"\r" not in raw and raw.endswith(b"\n")
    side = json.loads((tmp_path / "a.csv.config.json").read_text())
    assert side["command"] == name


def test_v2i_schema(tmp_path):
    code, path = run(tmp_path, "v2i", *SMALL["v2i"])
    assert code == 0
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["p_s", "c_ul_norm", "c_dl_bcast_norm", "c_dl_uni_norm", "c_v2v_norm"]
    assert [r[0] for r in rows[1:]] == ["0.2", "0.5"]
    for r in rows[1:]:
        assert all(float(v) >= 0 for v in r)


def test_v2i_default_grid_is_figure_sweep():
    d = cli.DEFAULTS["v2i"]
    assert d["p_s"][0] == 0.05 and d["p_s"][-1] == 0.95 and len(d["p_s"]) == 19
    lane = d["lane"]
    assert int(lane["t_interest"] / lane["t_gap"]) == 5


def test_seed_changes_output(tmp_path):
    _, a = run(tmp_path, "v2i", *SMALL["v2i"], "--seed", "1", out="a.csv")
    _, b = run(tmp_path, "v2i", *SMALL["v2i"], "--seed", "2", out="b.csv")
    assert a.read_bytes() != b.read_bytes()


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"p_s": [0.3], "trials": 1000, "seed": 4}))
    code, path = run(tmp_path, "v2i", "--config", str(cfg), "--trials", "3000")
    assert code == 0
    side = json.loads((tmp_path / "out.csv.config.json").read_text())["config"]
    assert side["trials"] == 3000 and side["seed"] == 4 and side["p_s"] == [0.3]


@pytest.mark.parametrize("args", [
    ["--set", "bogus=1"],
    ["--set", "lane.bogus=1"],
    ["--set", "p_s=0.5"],
    ["--set", "p_s=[1.5]"],
    ["--set", "mode=quantum"],
    ["--set", "trials=0"],
    ["--resolution", "0.5"],
    ["--set", "noequals"],
])
def test_invalid_config_exit_2(tmp_path, capsys, args):
    code, path = run(tmp_path, "v2i", *args)
    assert code == cli.EXIT_CONFIG
    err = error_line(capsys)
    assert err["code"] == 2 and err["error"] == "config"
    assert not path.exists()


def test_bad_config_file_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _ = run(tmp_path, "v2i", "--config", str(bad))
    assert code == 2
    assert error_line(capsys)["error"] == "config"


def test_infeasible_exit_3(tmp_path, capsys):
    code, path = run(tmp_path, "temporal", *SMALL["temporal"], "--set", "freeway.target_density=0.05")
    assert code == cli.EXIT_INFEASIBLE
    assert error_line(capsys)["error"] == "infeasible"
    assert not path.exists()


def test_partial_failure_exit_4(tmp_path, capsys):
    code, path = run(tmp_path, "coverage-area", "--set", "seeds=1", "--set", "lams=[0.01,0.03]")
    assert code == cli.EXIT_PARTIAL
    assert error_line(capsys)["error"] == "partial"
    rows = list(csv.DictReader(path.open()))
    assert rows[0]["error"] == "" and float(rows[0]["sim_mean"]) > 0
    assert "infeasible" in rows[1]["error"] and rows[1]["sim_mean"] == ""
    # the analytic column is still filled for the failed simulation point
    assert float(rows[1]["analytic_norm"]) > 0


def test_validate_reports_failures(tmp_path, capsys):
    code, path = run(tmp_path, "validate", *SMALL["validate"])
    rows = list(csv.DictReader(path.open()))
    failed = [r for r in rows if r["passed"] == "0"]
    assert (code == 0) == (not failed)
    if failed:
        assert code == cli.EXIT_CHECKS and error_line(capsys)["error"] == "checks"


def test_jobs_env_default(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.JOBS_ENV, "2")
    code, _ = run(tmp_path, "coverage-area", *SMALL["coverage-area"])
    assert code == 0
    side = json.loads((tmp_path / "out.csv.config.json").read_text())["config"]
    assert side["jobs"] == 2


def test_jobs_do_not_change_output(tmp_path):
    args = ["--set", "seeds=2", "--set", "lams=[0.005,0.01]"]
    run(tmp_path, "coverage-area", *args, "--jobs", "1", out="a.csv")
    run(tmp_path, "coverage-area", *args, "--jobs", "2", out="b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_show_defaults(capsys):
    assert cli.main(["temporal", "--show-defaults"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["taus"] == [0.0, 0.5, 1.0, 2.0] and d["rsu"]["spacing"] == 400.0


def test_default_presets_match_reference_values():
    assert cli.DEFAULTS["coverage-area"]["disc"] == {"r_obj": 1.67, "r_sense": 100.0, "roi_radius": 100.0,
                                                     "roi_strip_halfwidth": 12.0}
    fw = cli.DEFAULTS["coverage-area"]["freeway"]
    assert (fw["lanes_per_direction"], fw["lane_width"], fw["min_gap"]) == (3, 4.0, 10.0)
    assert (fw["vehicle_length"], fw["vehicle_width"]) == (4.8, 1.8)
    assert cli.DEFAULTS["gamma-coverage"]["lams"] == [0.01]
    t = cli.DEFAULTS["temporal"]
    assert t["dynamic"]["speed_s"] == 20.0 and t["rsu"]["r_rsu"] == 200.0 and t["freeway"]["target_density"] == 0.0175
