import json
import math
import subprocess
import sys

import pytest

from yamabe_volume.cli import (ConfigError, RunConfig, UsageError, load_config, run,
                               save_config, thread_count)
from yamabe_volume.geometry.models import model_catalog
from yamabe_volume.geometry.surfaces import save_surface


def call(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), err


def test_classify_single(capsys):
    code, out, _ = call(capsys, "classify", "--n", "2", "--k", "4")
    assert code == 0
    assert out["classification"] == "LogObstructed" and out["nu"] == 2 and out["log_power"] == 1


def test_classify_table(capsys):
    code, out, _ = call(capsys, "classify", "--table", "--nmax", "2")
    rows = {r["n"]: r for r in out["table"]}
    assert code == 0 and rows[2]["E"] == [4] and rows[2]["O"] == [5]


def test_volume_equatorial(capsys, tmp_path):
    csv_path = tmp_path / "curve.csv"
    code, out, _ = call(capsys, "volume", "--model", "equatorial", "--n", "2", "--k", "2",
                        "--csv", str(csv_path))
    assert code == 0
    assert out["energy"] == pytest.approx(-4 * math.pi ** 2, rel=1e-4)
    assert out["closed_form"]["energy"] == pytest.approx(-39.4784176044, rel=1e-10)
    assert csv_path.read_text().startswith("eps,volume")


def test_expand_symmetric_and_obstruction(capsys):
    code, out, _ = call(capsys, "expand", "--model", "equatorial", "--n", "2", "--k", "3",
                        "--order", "4")
    assert code == 0 and out["coefficients"][2] == pytest.approx(-1 / 6)
    args = ["expand", "--model", "warped", "--n", "2", "--k", "4", "--order", "2",
            "--param", "phi=1 + t**2/3", "--param", "R_sigma=2"]
    code, out, err = call(capsys, *args)
    assert code == 2 and out is None and "--allow-log" in err
    code, out, _ = call(capsys, *args, "--allow-log")
    assert code == 0 and out["series"]["log_terms"]


def test_expand_random_jet_and_surface(capsys):
    code, out, _ = call(capsys, "expand", "--model", "random_jet", "--k", "3", "--seed", "5")
    assert code == 0 and out["source"] == "random_jet"
    code, out, _ = call(capsys, "expand", "--model", "clifford_torus", "--param", "nu=8",
                        "--param", "nv=8", "--param", "i=2", "--param", "j=3")
    assert code == 0 and out["point"] == [2, 3]


def test_energy_subcommand(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("YAMABE_THREADS", "2")
    code, out, _ = call(capsys, "energy", "--model", "equatorial_sphere", "--k", "2",
                        "--param", "nu=12", "--param", "nv=24", "--via-theta")
    assert code == 0 and out["energy_via_theta"] == pytest.approx(out["energy"], rel=1e-9)
    code, out, _ = call(capsys, "energy", "--model", "clifford_torus", "--param", "nu=16",
                        "--param", "nv=16")
    assert out["energy_codim1"] == pytest.approx(2 * math.pi ** 2, rel=1e-9)
    code, out, _ = call(capsys, "energy", "--model", "equatorial_sphere", "--k", "4",
                        "--param", "nu=8", "--param", "nv=16")
    assert code == 0 and "anomaly" in out and "energy" not in out


def test_energy_from_surface_file(capsys, tmp_path):
    path = tmp_path / "torus.json"
    save_surface(model_catalog("clifford_torus", {"nu": 16, "nv": 16, "k": 2}), path)
    out_path, csv_path = tmp_path / "out.json", tmp_path / "inv.csv"
    code, out, _ = call(capsys, "energy", "--surface", str(path), "--output", str(out_path),
                        "--csv", str(csv_path))
    assert code == 0 and out is None
    data = json.loads(out_path.read_text())
    assert data["k"] == 2 and csv_path.exists()


def test_eikonal_subcommand(capsys):
    code, out, _ = call(capsys, "eikonal", "--omega", "0,1", "--order", "2")
    assert code == 0 and out["psi_averages"] == pytest.approx([1.0, 0.5, 1 / 6])
    assert out["residual"] < 1e-14


def test_verify_subset(capsys):
    code, out, err = call(capsys, "verify", "--criteria", "1,2,9")
    assert code == 0 and out["passed"]
    assert [r["criterion"] for r in out["results"]] == [1, 2, 9]
    assert err.count("[PASS]") == 3


@pytest.mark.parametrize("argv", [
    [],
    ["nonsense"],
    ["classify", "--n", "two"],
    ["eikonal", "--omega", "a,b"],
])
def test_usage_errors_exit_1(capsys, argv):
    code, out, err = call(capsys, *argv)
    assert code == 1 and out is None and err


@pytest.mark.parametrize("argv", [
    ["classify", "--n", "2"],
    ["classify", "--n", "0", "--k", "2"],
    ["volume", "--model", "nope", "--n", "2", "--k", "2"],
    ["volume", "--model", "equatorial", "--n", "2", "--k", "2", "--eps-min", "0.5",
     "--eps-max", "0.1"],
    ["energy", "--model", "equatorial_sphere", "--k", "4", "--via-theta", "--param", "nu=8",
     "--param", "nv=16", "--surface", "/nonexistent.json"],
    ["eikonal", "--omega", "0", "--order", "9"],
])
def test_invalid_input_exit_2(capsys, argv):
    code, out, err = call(capsys, *argv)
    assert code == 2 and out is None and "invalid input" in err


def test_numerical_guard_exit_3(capsys):
    code, out, err = call(capsys, "volume", "--model", "equatorial", "--n", "2", "--k", "2",
                          "--eps-min", "0.05", "--eps-max", "0.0501")
    assert code == 3 and "numerical guard" in err


def test_threads_env_validation(monkeypatch, capsys):
    monkeypatch.setenv("YAMABE_THREADS", "many")
    with pytest.raises(UsageError):
        thread_count()
    code, _, _ = call(capsys, "energy", "--model", "equatorial_sphere", "--k", "2",
                      "--param", "nu=8", "--param", "nv=16", "--via-theta")
    assert code == 1
    monkeypatch.setenv("YAMABE_THREADS", "0")
    with pytest.raises(UsageError):
        thread_count()
    monkeypatch.delenv("YAMABE_THREADS")
    assert thread_count() == 1


def test_config_round_trip(tmp_path):
    cfg = RunConfig(command="volume", n=3, k=2, model="warped", params={"phi": "cos(t)"},
                    eps_min=2e-3, samples=30, criteria=[1, 2]).validate()
    path = tmp_path / "run.toml"
    save_config(cfg, path)
    assert load_config(path) == cfg


def test_config_validation(tmp_path):
    with pytest.raises(ConfigError):
        RunConfig(tol=0.0).validate()
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"bogus": 1})
    bad = tmp_path / "bad.toml"
    bad.write_text("n = [")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_flags_override_config(tmp_path, capsys):
    path = tmp_path / "run.toml"
    save_config(RunConfig(command="classify", n=2, k=2), path)
    code, out, _ = call(capsys, "classify", "--config", str(path))
    assert out["k"] == 2
    code, out, _ = call(capsys, "classify", "--config", str(path), "--k", "4")
    assert out["k"] == 4 and out["classification"] == "LogObstructed"


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "yamabe_volume.cli", "classify", "--n", "2",
                           "--k", "2"], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["n"] == 2
