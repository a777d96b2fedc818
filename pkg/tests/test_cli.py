import csv
import json

import pytest

from hwlab.acceptance import load_recipe, recipe_names
from hwlab.cli import main, run
from hwlab.config import ConfigError, Experiment, parse_config
from hwlab.snapshot import read_snapshot

MINIMAL = {
    "experiment": "evolve",
    "grid": {"nx": 32, "ny": 16, "lx": 20.0},
    "run": {"T": 0.1, "dt": 0.01},
}


def cfg_text(**over):
    d = json.loads(json.dumps(MINIMAL))
    for k, v in over.items():
        d[k] = {**d.get(k, {}), **v} if isinstance(v, dict) else v
    return json.dumps(d)


def test_minimal_config():
    cfg = parse_config(cfg_text())
    assert cfg.experiment is Experiment.EVOLVE and cfg.equation.p == 2.0


@pytest.mark.parametrize(
    "over,field",
    [
        ({"equation": {"p": 0.5}}, "equation.p"),
        ({"equation": {"s": 0.3}}, "equation.s"),
        ({"grid": {"nx": 30}}, "grid"),
        ({"run": {"dt": 0.5}}, "run"),
        ({"bogus": 1}, "bogus"),
        ({"grid": {"colour": "red"}}, "grid.colour"),
        ({"experiment": "nonsense"}, "experiment"),
    ],
)
def test_violations_name_the_field(over, field):
    with pytest.raises(ConfigError) as exc:
        parse_config(cfg_text(**over))
    assert any(v.startswith(field) for v in exc.value.violations), exc.value.violations


def test_cross_field_rules():
    with pytest.raises(ConfigError):
        parse_config(cfg_text(experiment="scaling"))
    with pytest.raises(ConfigError):
        parse_config(cfg_text(experiment="stability", equation={"sign": "defocusing"}))
    with pytest.raises(ConfigError):
        parse_config("[1, 2]")
    with pytest.raises(ConfigError):
        parse_config("{not json")


def test_t_zero_run(tmp_path):
    cfg = parse_config(cfg_text(run={"T": 0.0, "dt": 0.01}))
    assert run(cfg, tmp_path) == 0
    rows = list(csv.reader(open(tmp_path / "ledger.csv")))
    assert rows[0] == ["t", "mass", "energy", "l2hs", "h1l2", "linf", "N"]
    assert len(rows) == 2
    snap = read_snapshot(tmp_path / "snap_0.hwsfld")
    assert snap.t == 0.0 and snap.p == 2.0


def test_blowup_exit_code(tmp_path):
    cfg = parse_config(cfg_text(run={"blowup_ceiling": 1e-30}))
    assert run(cfg, tmp_path) == 3
    assert json.loads((tmp_path / "summary.json").read_text())["result"]["blowup_suspected"] is True


def test_main_run_and_validation(tmp_path, capsys):
    good = tmp_path / "good.json"
    good.write_text(cfg_text(run={"snapshot_every": 5}))
    assert main(["run", str(good), "--output", str(tmp_path / "o"), "--threads", "1"]) == 0
    assert sorted(p.name for p in (tmp_path / "o").iterdir()) == [
        "ledger.csv", "snap_0.hwsfld", "snap_1.hwsfld", "snap_2.hwsfld", "summary.json"]
    bad = tmp_path / "bad.json"
    bad.write_text(cfg_text(equation={"p": 0.5}))
    assert main(["run", str(bad)]) == 2
    assert "equation.p" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "missing.json")]) == 2
    assert main(["verify", "no-such-suite"]) == 2


def test_threads_env(monkeypatch, tmp_path):
    from hwlab import grid

    monkeypatch.setenv("HWLAB_THREADS", "2")
    good = tmp_path / "good.json"
    good.write_text(cfg_text())
    assert main(["run", str(good), "--output", str(tmp_path / "o")]) == 0
    assert grid._FFT_WORKERS == 2
    grid.set_fft_workers(1)


def test_verify_quick_suite_member(capsys):
    assert main(["verify", "soliton-residual"]) == 0
    assert capsys.readouterr().out.startswith("PASS  4")


def test_recipes_parse():
    names = recipe_names()
    assert {"gaussian", "soliton", "groundstate", "picard", "scaling", "stability", "inequalities"} <= set(names)
    for n in names:
        load_recipe(n)


@pytest.mark.parametrize("name", ["soliton", "picard", "groundstate", "scaling"])
def test_recipe_summary_deterministic(tmp_path, name):
    cfg = load_recipe(name)
    run(cfg, tmp_path / "a")
    run(cfg, tmp_path / "b")
    a = (tmp_path / "a" / "summary.json").read_bytes()
    assert a == (tmp_path / "b" / "summary.json").read_bytes()
    assert b"output_dir" not in a


def test_soliton_recipe_standing_wave(tmp_path):
    assert run(load_recipe("soliton"), tmp_path) == 0
    s = json.loads((tmp_path / "summary.json").read_text())
    assert s["result"]["max_standing_wave_error"] <= 1e-4
