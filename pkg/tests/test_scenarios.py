import csv
import io
import json
import math

import pytest

from catsim import cli
from catsim import scenarios as sc
from catsim.errors import ConfigError
from catsim.report import ExperimentReport, emit_report, summary_line


def cfg_text(**doc):
    return json.dumps(doc, indent=1)


def test_defaults_and_planned_rows():
    cfg = sc.parse_config(cfg_text(scenario="fig4_scan"))
    assert cfg.planned_rows() == 39
    assert cfg.seed == 0


def test_misspelled_param_names_nearest_key():
    text = '{"scenario": "purify",\n "params": {"alpah": 2.0}}'
    with pytest.raises(ConfigError, match=r"alpah.*line 2.*'alpha'"):
        sc.parse_config(text)


def test_misspelled_scenario():
    with pytest.raises(ConfigError, match="fig4_scan"):
        sc.parse_config(cfg_text(scenario="fig4scan"))


@pytest.mark.parametrize(
    "doc",
    [
        {"scenario": "purify", "params": {"rounds": 1.5}},
        {"scenario": "purify", "params": {"eta": 0.0}},
        {"scenario": "teleport", "params": {"alpha": -1.0}},
        {"scenario": "teleport", "seed": -3},
        {"scenario": "kerr", "params": {"N_values": [1]}},
        {"scenario": "bell", "extra": 1},
    ],
)
def test_invalid_configs(doc):
    with pytest.raises(ConfigError):
        sc.parse_config(json.dumps(doc))


def test_malformed_json_reports_line():
    with pytest.raises(ConfigError, match="line 2"):
        sc.parse_config('{"scenario": "bell",\n "params": }')


def test_int_accepted_for_float():
    cfg = sc.parse_config(cfg_text(scenario="teleport", params={"alpha": 2}))
    assert isinstance(cfg.params["alpha"], float)


def small(name, **params):
    return sc.parse_config(cfg_text(scenario=name, params=params, seed=5))


@pytest.mark.parametrize(
    "cfg",
    [
        small("readout", trials=5),
        small("bell"),
        small("teleport", trials=20),
        small("purify", rounds=1),
        small("decohere_sweep", alphas=[1.0]),
        small("fig4_scan", alpha_max=0.5),
        small("kerr", N_values=[2, 4]),
        small("cross_kerr"),
    ],
    ids=lambda c: c.scenario,
)
def test_closed_form_columns(cfg):
    rep = sc.run_scenario(cfg)
    assert rep.rows
    err = rep.max_abs_error()
    assert err is not None and err < 1e-8


def test_hr_resource_row():
    rep = sc.run_scenario(small("hr_resource", alphas=[2.0]))
    (row,) = rep.rows
    assert row["simulated"] == pytest.approx(0.9258, abs=1e-3)
    assert row["closed_form"] == pytest.approx(math.exp(-((math.pi / 16) ** 2) * 2), abs=1e-12)


def test_decohere_sweep_crosses_half_at_ln2():
    rep = sc.run_scenario(small("decohere_sweep", alphas=[1.0]))
    assert all(r["threshold"] == pytest.approx(math.log(2), abs=1e-9) for r in rep.rows)
    below = [r for r in rep.rows if r["gamma_tau"] < math.log(2)]
    above = [r for r in rep.rows if r["gamma_tau"] > math.log(2)]
    assert all(r["simulated"] > 0.5 for r in below) and all(r["simulated"] < 0.5 for r in above)


def test_fig4_scan_contains_point():
    rep = sc.run_scenario(small("fig4_scan"))
    row = min(rep.rows, key=lambda r: abs(r["alpha"] - 0.5))
    assert row["s_star"] == pytest.approx(0.083, abs=0.005)
    assert row["F_star"] == pytest.approx(0.99999, abs=1e-5)


def test_gates_scenario_rows():
    rep = sc.run_scenario(small("gates", trials=1))
    done = [r for r in rep.rows if r["simulated"] is not None]
    assert done and all(r["abs_error"] < 5e-4 for r in done)


def test_determinism_byte_identical():
    cfg = small("teleport", trials=30)
    a = emit_report(sc.run_scenario(cfg), "csv")
    b = emit_report(sc.run_scenario(cfg), "csv")
    assert a == b
    other = emit_report(sc.run_scenario(sc.ScenarioConfig("teleport", cfg.params, 6)), "csv")
    assert other != a


def test_csv_header_and_json_round_trip():
    rep = sc.run_scenario(small("bell", alphas=[1.0]))
    text = emit_report(rep, "csv").decode()
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == sc.COLUMNS["bell"]
    data = json.loads(emit_report(rep, "json"))
    assert [list(d) for d in data] == [sc.COLUMNS["bell"]] * len(data)
    assert data[0]["simulated"] == pytest.approx(rep.rows[0]["simulated"], rel=1e-11)


def test_report_formatting():
    rep = ExperimentReport("x", {}, ["a", "b", "c"])
    rep.add(a=1 / 3, b=None, c=True)
    assert emit_report(rep, "csv").decode() == "a,b,c\n0.333333333333,,true\n"
    with pytest.raises(KeyError):
        rep.add(d=1)
    with pytest.raises(ValueError):
        emit_report(rep, "xml")
    assert "rows=1" in summary_line(rep)


# ---------------------------------------------------------------- CLI


def write(tmp_path, doc):
    p = tmp_path / "cfg.json"
    p.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    return str(p)


def test_cli_run_csv(tmp_path, capsys):
    path = write(tmp_path, {"scenario": "bell", "params": {"alphas": [1.0]}})
    out = tmp_path / "r.csv"
    assert cli.main(["run", path, "--out", str(out), "--seed", "4"]) == 0
    assert out.read_text().startswith("alpha,input,")
    err = capsys.readouterr().err
    assert "scenario=bell" in err and "seed=4" in err and "max_abs_error=" in err


def test_cli_run_json_stdout(tmp_path, capsysbinary):
    path = write(tmp_path, {"scenario": "cross_kerr"})
    assert cli.main(["run", path, "--format", "json"]) == 0
    data = json.loads(capsysbinary.readouterr().out)
    assert len(data) == 6


def test_cli_figure(tmp_path):
    path = write(tmp_path, {"scenario": "decohere_sweep", "params": {"alphas": [1.0]}})
    fig = tmp_path / "f.png"
    assert cli.main(["run", path, "--out", str(tmp_path / "r.csv"), "--figure", str(fig)]) == 0
    assert fig.read_bytes()[:4] == b"\x89PNG"


def test_cli_config_error_exit_2(tmp_path, capsys):
    path = write(tmp_path, '{"scenario": "purify",\n "params": {"alpah": 2.0}}')
    assert cli.main(["run", path]) == 2
    assert "alpha" in capsys.readouterr().err
    assert cli.main(["run", str(tmp_path / "missing.json")]) == 2


def test_cli_unwritable_out(tmp_path):
    path = write(tmp_path, {"scenario": "bell", "params": {"alphas": [1.0]}})
    assert cli.main(["run", path, "--out", str(tmp_path / "no" / "such" / "dir.csv")]) == 2


def test_cli_list(capsys):
    assert cli.main(["list-scenarios"]) == 0
    out = capsys.readouterr().out
    for name in sc.DEFAULTS:
        assert name in out


def test_cli_selftest_exit_code(monkeypatch, capsys):
    from catsim import acceptance as ac

    ok = ac.Criterion(1, "x", True, "")
    bad = ac.Criterion(2, "y", False, "")
    monkeypatch.setattr(ac, "CHECKS", (lambda: ok,))
    assert cli.main(["selftest"]) == 0
    monkeypatch.setattr(ac, "CHECKS", (lambda: ok, lambda: bad))
    assert cli.main(["selftest"]) == 3
    assert "[FAIL]" in capsys.readouterr().out
