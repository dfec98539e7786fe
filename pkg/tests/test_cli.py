import json
import math
import os

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from photmol import __version__, cli
from photmol.cli import COMMANDS, RunConfig, config_from_dict, main, parse_config
from photmol.errors import ConfigError
from photmol.model import SystemParams
from photmol.solver import converged_g2
from photmol.sweep import PRESET_NAMES, Axis, SweepSpec
from photmol.validation import Check
from strategies import params


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


# -- configuration -----------------------------------------------------------------

def test_ghz_examples():
    cfg = parse_config({"command": "steady", "params": {"kappa_ghz": 16, "e_a_ghz": 1}})
    assert cfg.params.e_a == 0.0625
    cfg = parse_config({"command": "steady", "params": {"gamma_ghz": 1, "kappa_ghz": 16}})
    assert cfg.params.gamma == 0.0625
    cfg = parse_config({"command": "steady", "params": {"units": "ghz_over_2pi", "kappa_ghz": 16, "j_ghz": 48, "g": 1.1}})
    assert cfg.params.j == 3.0 and cfg.params.g == 1.1


@pytest.mark.parametrize(
    "data",
    [
        {},
        {"params": {"g": 1}},
        {"command": "dance"},
        {"command": "steady", "colour": "red"},
        {"command": "steady", "params": {"omega": 1}},
        {"command": "steady", "params": {"units": "ghz_over_2pi", "e_a_ghz": 1}},
        {"command": "steady", "params": {"kappa_ghz": 0, "e_a_ghz": 1}},
        {"command": "steady", "params": {"units": "MHz", "kappa_ghz": 16}},
        {"command": "steady", "params": {"g": -1}},
        {"command": "steady", "engine": "exact"},
        {"command": "figure", "output": "x"},
        {"command": "figure", "figure": "fig2a"},
        {"command": "optimize", "var": "g"},
        {"command": "sweep", "output": "x.csv"},
        {"command": "validate", "suite": "everything"},
        {"command": "steady", "workers": 0},
    ],
)
def test_bad_configs(data):
    with pytest.raises(ConfigError):
        parse_config(data)


def test_malformed_file_reports_line(tmp_path):
    path = write(tmp_path, "bad.json", '{"command": "steady",\n "params": {"g": 1,}\n}')
    with pytest.raises(ConfigError, match=r"bad.json:2:\d+"):
        parse_config(["steady", "--config", path])
    with pytest.raises(ConfigError):
        parse_config(["steady", "--config", str(tmp_path / "missing.json")])
    with pytest.raises(ConfigError):
        parse_config(["steady", "--config", write(tmp_path, "list.json", "[1, 2]")])


def test_flags_override_file(tmp_path):
    path = write(tmp_path, "c.json", json.dumps({"command": "steady", "params": {"g": 2.0, "j": 1.0}, "engine": "weakdrive"}))
    cfg = parse_config(["steady", "--config", path, "--g", "0.5", "--delta", "0.3", "--e", "0.01"])
    assert cfg.params.g == 0.5 and cfg.params.j == 1.0
    assert cfg.params.delta_a == cfg.params.delta_b == 0.3
    assert cfg.params.e_a == cfg.params.e_b == 0.01
    assert cfg.engine == "weakdrive"
    assert parse_config(["steady", "--config", path, "--engine", "full"]).engine == "full"


def test_flags_in_ghz():
    cfg = parse_config(["steady", "--kappa-ghz", "16", "--e-a", "1", "--gamma", "2", "--theta", "3.0", "--n-max", "4"])
    assert cfg.params.e_a == 0.0625 and cfg.params.gamma == 0.125
    assert cfg.params.theta == 3.0
    assert (cfg.params.n_max_a, cfg.params.n_max_b) == (4, 4)


def test_command_line_requires_command():
    with pytest.raises(ConfigError):
        parse_config([])
    with pytest.raises(ConfigError):
        parse_config(["steady", "--g", "abc"])


def test_sweep_config_file_forms(tmp_path):
    spec = {"base": {"g": 1.0}, "axes": [{"param": "delta", "from": -1, "to": 1, "points": 3}]}
    bare = write(tmp_path, "spec.json", json.dumps(spec))
    cfg = parse_config(["sweep", "--config", bare, "--out", "r.csv", "--j", "2", "--engine", "weakdrive"])
    assert cfg.sweep.base.j == 2.0 and cfg.sweep.base.g == 1.0
    assert cfg.sweep.engine == "weakdrive"
    wrapped = write(tmp_path, "run.json", json.dumps({"command": "sweep", "sweep": spec, "output": "r.csv", "workers": 2}))
    cfg = parse_config(["sweep", "--config", wrapped])
    assert cfg.workers == 2 and cfg.output == "r.csv"
    bad = write(tmp_path, "bad.json", json.dumps({"axes": [{"param": "kappa", "from": 0, "to": 1, "points": 2}]}))
    with pytest.raises(ConfigError):
        parse_config(["sweep", "--config", bad, "--out", "r.csv"])


@st.composite
def run_configs(draw):
    command = draw(st.sampled_from(COMMANDS))
    kw = dict(
        command=command,
        params=draw(params(cutoff=st.integers(1, 12))),
        engine=draw(st.sampled_from(["full", "weakdrive"])),
        output=draw(st.one_of(st.none(), st.text("abcxyz/._-", min_size=1, max_size=12))),
        verbosity=draw(st.integers(0, 3)),
        workers=draw(st.integers(1, 8)),
        rel_tol=draw(st.one_of(st.none(), st.floats(1e-6, 0.1))),
        tol=draw(st.floats(1e-8, 1e-1)),
        suite=draw(st.sampled_from(["invariants", "acceptance", "all"])),
    )
    if command == "figure":
        kw["figure"] = draw(st.sampled_from(PRESET_NAMES))
        kw["output"] = "out"
    if command == "optimize":
        lo = draw(st.floats(0, 2))
        kw["var"] = draw(st.sampled_from(["g", "j", "theta", "delta", "e"]))
        kw["bounds"] = (lo, lo + draw(st.floats(0.1, 3)))
    if command == "sweep":
        kw["output"] = "r.csv"
        kw["sweep"] = SweepSpec(kw["params"], (Axis("g", 0.0, draw(st.floats(0.5, 3)), draw(st.integers(2, 9))),))
    return RunConfig(**kw)


@settings(max_examples=100)
@given(run_configs())
def test_config_round_trip(cfg):
    again = config_from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg


# -- running -------------------------------------------------------------------------

def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_steady_default_is_baseline(capsys):
    assert main(["steady"]) == 0
    out = json.loads(capsys.readouterr().out)
    ref = converged_g2(SystemParams())
    assert out["g2_a"] == ref.g2_a and out["n_a"] == ref.n_a
    assert out["cutoff_used"] == list(ref.cutoff_used) and out["converged"] is True
    assert SystemParams.from_dict(out["params"]) == SystemParams()


def test_steady_weakdrive_and_fixed_cutoff(capsys):
    assert main(["steady", "--engine", "weakdrive", "--e-a", "0.01"]) == 0
    weak = json.loads(capsys.readouterr().out)
    assert main(["steady", "--fixed-cutoff", "--n-max", "4", "--e-a", "0.01"]) == 0
    full = json.loads(capsys.readouterr().out)
    assert full["cutoff_used"] == [4, 4] and full["converged"] is False
    assert abs(weak["g2_a"] - full["g2_a"]) / full["g2_a"] < 0.05


def test_exit_codes(capsys, tmp_path):
    assert main([]) == 2
    assert main(["steady", "--e-a", "0"]) == 1
    assert "NoPhotons" in capsys.readouterr().err
    assert main(["steady", "--config", write(tmp_path, "e.json", "{,}")]) == 2
    assert main(["figure", "fig99", "--out", str(tmp_path)]) == 2
    assert main(["steady", "--g=-1"]) == 2


def test_failed_run_leaves_no_output(tmp_path):
    out = tmp_path / "opt.json"
    assert main(["optimize", "--var", "j", "--from", "0.5", "--to", "1", "--e", "0", "--out", str(out)]) == 1
    assert not out.exists() and os.listdir(tmp_path) == []


def test_optimize(capsys):
    code = main(["optimize", "--var", "theta", "--from", "0", "--to", "6.2832", "--j", "1", "--e", "0.0625",
                 "--engine", "weakdrive"])
    assert code == 0
    out = json.loads(capsys.readouterr().out)
    assert out["var"] == "theta" and abs(out["argmin_over_pi"] - 1.5) < 0.02


def test_paths(capsys):
    assert main(["paths", "--e", "0.0625", "--theta", "4.71238898", "--j", "0.9"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert len(out["amplitudes"]) == 9 and len(out["C20g_contributions"]) == 6


def test_sweep_command(tmp_path):
    spec = {"base": {"n_max_a": 3, "n_max_b": 3}, "axes": [{"param": "delta", "from": -1, "to": 1, "points": 3}],
            "convergence_tol": None}
    cfg = write(tmp_path, "spec.json", json.dumps(spec))
    out = tmp_path / "res" / "r.csv"
    assert main(["sweep", "--config", cfg, "--out", str(out), "--workers", "2"]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("delta,g2,n_a") and len(lines) == 4
    meta = json.loads((tmp_path / "res" / "r.meta.json").read_text())
    assert meta["version"] == __version__ and meta["rows"] == 3


def test_figure_command(tmp_path):
    assert main(["figure", "fig6a", "--out", str(tmp_path / "figs"), "--engine", "weakdrive"]) == 0
    names = sorted(os.listdir(tmp_path / "figs"))
    assert names == ["fig6a.csv", "fig6a.meta.json"]
    assert len((tmp_path / "figs" / "fig6a.csv").read_text().splitlines()) == 1 + 101 * 101
    meta = json.loads((tmp_path / "figs" / "fig6a.meta.json").read_text())
    assert meta["engine"] == "weakdrive" and meta["base"]["theta"] == pytest.approx(1.5 * math.pi)


def test_validate_exit_code(monkeypatch, capsys):
    import photmol.validation as v

    monkeypatch.setattr(v, "run_suite", lambda name, echo=None: [Check("a", True, "ok")])
    assert main(["validate"]) == 0
    monkeypatch.setattr(v, "run_suite", lambda name, echo=None: [Check("a", True, "ok"), Check("b", False, "bad")])
    assert main(["validate", "--suite", "invariants"]) == 1
    assert "1/2 checks passed" in capsys.readouterr().out


@pytest.mark.slow
def test_validate_runs_suite(capsys):
    code = main(["validate", "--suite", "invariants"])
    lines = capsys.readouterr().out.splitlines()
    checks = [line for line in lines if line.startswith(("PASS", "FAIL"))]
    assert len(checks) >= 10
    failed = any(line.startswith("FAIL") for line in checks)
    assert code == (1 if failed else 0)
