import json
from pathlib import Path

import pytest

from cavitylattice import cli, config
from cavitylattice.io import read_csv

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"


def run(tmp_path, command, cfg, *extra, name="out"):
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(cfg) if isinstance(cfg, dict) else cfg)
    out = tmp_path / name
    code = cli.main([command, "--config", str(path), "--out", str(out), *extra])
    return code, out


def small_sweep():
    return {"command": "sweep", "mu": 1.0, "cap": 8,
            "lambda1": {"start": 0, "stop": 1.0, "step": 0.25},
            "lambda2": {"start": 0, "stop": 1.0, "step": 0.25}}


def test_spectrum_empty_cavity_two_sites(tmp_path):
    cfg = json.loads((CONFIGS / "two_site_empty_cavity.json").read_text())
    code, out = run(tmp_path, "spectrum", cfg)
    assert code == 0
    meta, header, rows = read_csv(out / "spectrum.csv")
    assert header == ["index", "energy", "residual"]
    assert [float(r[1]) for r in rows] == pytest.approx([-1.0, 1.0])
    assert meta["tool"] == "cavitylattice" and len(meta["config_sha256"]) == 64


def test_zeno_fig4_survival(tmp_path):
    cfg = json.loads((CONFIGS / "fig4_zeno.json").read_text())
    code, out = run(tmp_path, "zeno", cfg)
    assert code == 0
    _, _, rows = read_csv(out / "survival.csv")
    by_kind = {}
    for label, kind, alive in rows:
        by_kind.setdefault(kind, set()).add(alive)
    assert by_kind["single_hop"] == {"false"}
    assert by_kind["pair_exchange"] == {"true"}
    assert by_kind["single_hop_extra"] == {"true"}


@pytest.mark.parametrize("command,cfg", [
    ("sweep", small_sweep()),
    ("trajectory", {**json.loads((CONFIGS / "trajectory.json").read_text()), "trajectories": 30}),
    ("zeno", json.loads((CONFIGS / "gauge_field.json").read_text())),
    ("couplings", json.loads((CONFIGS / "couplings_crossed.json").read_text())),
])
def test_reruns_are_byte_identical(tmp_path, command, cfg):
    code_a, a = run(tmp_path, command, cfg, name="a")
    code_b, b = run(tmp_path, command, cfg, name="b")
    assert code_a == code_b == 0
    files = sorted(p.name for p in a.iterdir())
    assert files == sorted(p.name for p in b.iterdir())
    for f in files:
        assert (a / f).read_bytes() == (b / f).read_bytes(), f


def test_jobs_do_not_change_sweep_output(tmp_path):
    _, a = run(tmp_path, "sweep", small_sweep(), name="a")
    _, b = run(tmp_path, "sweep", small_sweep(), "--jobs", "2", name="b")
    assert (a / "sweep.csv").read_bytes() == (b / "sweep.csv").read_bytes()


def test_seed_override_changes_trajectories(tmp_path):
    cfg = {**json.loads((CONFIGS / "trajectory.json").read_text()), "trajectories": 5}
    _, a = run(tmp_path, "trajectory", cfg, "--seed", "1", name="a")
    _, b = run(tmp_path, "trajectory", cfg, "--seed", "2", name="b")
    resolved_a = json.loads((a / "resolved_config.json").read_text())["config"]
    assert resolved_a["seed"] == 1
    assert (a / "trajectories.csv").read_bytes() != (b / "trajectories.csv").read_bytes()


def test_seed_rejected_where_unused(tmp_path):
    code, _ = run(tmp_path, "sweep", small_sweep(), "--seed", "3")
    assert code == cli.EXIT_SCHEMA


def test_resolved_config_round_trip(tmp_path):
    code, out = run(tmp_path, "sweep", small_sweep())
    resolved = json.loads((out / "resolved_config.json").read_text())["config"]
    again = config.load_config(json.dumps(resolved), "sweep")
    assert config.resolved(again) == resolved
    assert resolved["threshold"] == 1.0   # default expanded


def test_schema_errors_exit_2(tmp_path, capsys):
    assert run(tmp_path, "sweep", {**small_sweep(), "surprise": 1})[0] == cli.EXIT_SCHEMA
    assert "surprise" in capsys.readouterr().err
    assert run(tmp_path, "sweep", "{not json")[0] == cli.EXIT_SCHEMA
    assert run(tmp_path, "spectrum", small_sweep())[0] == cli.EXIT_SCHEMA
    bad_model = {"model": {"preset": "effective", "lattice": {"shape": [2]}, "basis": {"num_sites": 3, "cap": 1}}}
    assert run(tmp_path, "spectrum", bad_model)[0] == cli.EXIT_SCHEMA


def test_compute_error_exit_3(tmp_path, capsys):
    cfg = {"model": {"preset": "effective", "lattice": {"shape": [2]}, "basis": {"num_sites": 2, "cap": 1},
                     "modes": {"0": {"kind": "uniform"}, "1": {"kind": "uniform"}},
                     "cavities": [{"label": 1, "detuning": 0.0, "kappa": 0.0}]}}
    assert run(tmp_path, "spectrum", cfg)[0] == cli.EXIT_COMPUTE
    assert "spectrum" in capsys.readouterr().err


def test_io_errors_exit_4(tmp_path):
    assert cli.main(["sweep", "--config", str(tmp_path / "missing.json")]) == cli.EXIT_IO
    blocker = tmp_path / "file"
    blocker.write_text("x")
    path = tmp_path / "c.json"
    path.write_text(json.dumps(small_sweep()))
    assert cli.main(["sweep", "--config", str(path), "--out", str(blocker / "sub")]) == cli.EXIT_IO


def test_checked_in_configs_validate():
    for p in CONFIGS.glob("*.json"):
        doc = json.loads(p.read_text())
        config.load_config(p.read_text(), doc["command"])


def test_published_schemas_are_current(tmp_path):
    assert cli.main(["schema", "--out", str(tmp_path)]) == 0
    for p in tmp_path.iterdir():
        assert (ROOT / "schemas" / p.name).read_text() == p.read_text(), p.name
