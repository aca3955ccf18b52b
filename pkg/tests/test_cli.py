import csv
import json
import math

import pytest

from ioncosmo.cli import main
from ioncosmo.config import load_config, parse_config
from ioncosmo.runner import ScenarioError, run_scenario, run_sweep

CONSTANT = """
[scenario]
kind = trap_single_ion
[ramp]
omega_initial = 1
omega_final = 1
rise_time = 3
"""


def _rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def test_constant_trap_creates_nothing(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(CONSTANT)
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o"), "--no-figures"]) == 0
    rows = _rows(tmp_path / "o" / "bogoliubov.csv")
    assert len(rows) == 1 and float(rows[0]["n_created"]) < 1e-20


def test_csv_format(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(CONSTANT)
    main(["run", "--config", str(cfg), "--out", str(tmp_path), "--no-figures"])
    raw = (tmp_path / "populations.csv").read_bytes()
    assert b"\r" not in raw
    header, first = raw.decode("utf-8").split("\n")[:2]
    assert header == "n,p_initial,p_final"
    value = first.split(",")[1]
    assert value == "1"
    evo = (tmp_path / "evolution.csv").read_text().split("\n")[2].split(",")
    assert len(evo[0].replace(".", "").replace("e-", "").lstrip("0")) >= 15


def test_paper_config_populations(tmp_path, configs_dir):
    out = tmp_path / "paper"
    assert main(["run", "--config", str(configs_dir / "paper_envisioned.cfg"),
                 "--out", str(out)]) == 0
    pops = {int(r["n"]): float(r["p_final"]) for r in _rows(out / "populations.csv")}
    assert 0.12 <= pops[2] <= 0.25
    assert pops[1] < 0.08
    readout = {r["sequence"]: r for r in _rows(out / "readout.csv")}
    assert int(readout["acd"]["trials"]) == 1000
    assert int(readout["acd"]["brights"]) > int(readout["bcd"]["brights"])
    for name in ("evolution.png", "populations.png", "modes.png", "manifest.txt"):
        assert (out / name).exists()


def test_manifest_contents(tmp_path, configs_dir):
    cfg = configs_dir / "paper_envisioned.cfg"
    main(["--seed", "5", "run", "--config", str(cfg), "--out", str(tmp_path), "--no-figures"])
    entries = dict(line.split(" = ", 1) for line in
                   (tmp_path / "manifest.txt").read_text().splitlines())
    assert entries["seed"] == "5"
    assert entries["config_sha256"] == load_config(cfg).sha256
    assert entries["version"] == "0.1.0"
    assert float(entries["nu_ref_hz"]) == 2e6
    assert "readout.csv" in entries["outputs"]
    assert "png" not in entries["outputs"]


def test_repeated_runs_are_identical(tmp_path, configs_dir):
    cfg = str(configs_dir / "paper_envisioned.cfg")
    for name in ("a", "b"):
        main(["run", "--config", cfg, "--out", str(tmp_path / name), "--seed", "3"])
    for f in sorted((tmp_path / "a").glob("*.csv")):
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_seed_changes_only_sampled_counts(tmp_path, configs_dir):
    cfg = str(configs_dir / "paper_envisioned.cfg")
    main(["run", "--config", cfg, "--out", str(tmp_path / "a"), "--seed", "1", "--no-figures"])
    main(["run", "--config", cfg, "--out", str(tmp_path / "b"), "--seed", "2", "--no-figures"])
    assert (tmp_path / "a" / "populations.csv").read_bytes() == \
        (tmp_path / "b" / "populations.csv").read_bytes()
    assert (tmp_path / "a" / "readout.csv").read_bytes() != \
        (tmp_path / "b" / "readout.csv").read_bytes()


def test_modes_command(tmp_path):
    assert main(["modes", "--n-ions", "3", "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "modes.csv")
    assert [float(r["omega_kappa_sq"]) for r in rows] == pytest.approx([0, 2, 4.8], abs=1e-10)
    assert (tmp_path / "modes.png").exists()


def test_cosmo_command(tmp_path, configs_dir):
    assert main(["cosmo", "--config", str(configs_dir / "de_sitter.cfg"),
                 "--out", str(tmp_path)]) == 0
    n = [float(r["n_created"]) for r in _rows(tmp_path / "cosmo_spectrum.csv")]
    assert len(n) == 20 and all(x > y for x, y in zip(n, n[1:]))
    assert (tmp_path / "cosmo_spectrum.png").exists()


def test_cosmo_command_rejects_trap_config(tmp_path, configs_dir, capsys):
    code = main(["cosmo", "--config", str(configs_dir / "paper_envisioned.cfg"), "--out", str(tmp_path)])
    assert code == 2 and "cosmology" in capsys.readouterr().err


def test_sweep_parallel_matches_serial(tmp_path, configs_dir):
    cfg = str(configs_dir / "rise_time_sweep.cfg")
    main(["sweep", "--config", cfg, "--out", str(tmp_path / "s"), "--no-figures"])
    main(["sweep", "--config", cfg, "--out", str(tmp_path / "p"), "--workers", "3"])
    assert (tmp_path / "s" / "sweep.csv").read_bytes() == (tmp_path / "p" / "sweep.csv").read_bytes()
    rows = _rows(tmp_path / "p" / "sweep.csv")
    assert len(rows) == 12
    assert float(rows[-1]["ramp.rise_time_si"]) == pytest.approx(3e-6)
    assert (tmp_path / "p" / "sweep.png").exists()


def test_sweep_records_point_failures():
    text = CONSTANT.replace("rise_time = 3", "rise_time = 0\nshape = step\nhead_hold = 1\ntail_hold = 1")
    cfg = parse_config(text + "[sweep]\nparameter = ramp.omega_final\nstart = 1\nstop = 40\n"
                              "count = 2\n[state]\nn_max = 32\n")
    table = run_sweep(cfg)
    assert table.column("verdict") == ["classical-compatible", "TruncationTooSmall"]
    assert math.isnan(table.column("n_created")[1])


def test_chain_run_reports_mode_status(configs_dir):
    result = run_scenario(load_config(configs_dir / "chain_three_ions.cfg"))
    status = result.tables["bogoliubov"].column("status")
    assert status[0] == "ok" and len(status) == 3


def test_errors_exit_with_code_two(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text(CONSTANT + "omega_axial = 2\n")
    assert main(["run", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert "omega_axial" in capsys.readouterr().err
    assert main(["run", "--config", str(tmp_path / "missing.cfg")]) == 2
    assert main(["run"]) == 2
    assert main(["--tol", "0", "validate"]) == 2


def test_scenario_error_carries_context():
    cfg = parse_config(CONSTANT.replace("omega_final = 1", "omega_final = 40")
                       .replace("rise_time = 3", "rise_time = 0\nshape = step")
                       + "[state]\nn_max = 32\n")
    with pytest.raises(ScenarioError) as err:
        run_scenario(cfg)
    assert err.value.stage == "populations"


def test_validate_command(capsys, tmp_path):
    assert main(["validate", "--out", str(tmp_path)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["passed"] and len(report["checks"]) >= 15
    assert json.loads((tmp_path / "validation.json").read_text()) == report


def test_validate_negative_control(capsys):
    assert main(["validate", "--inject-fault", "hessian_sign"]) == 1
    report = json.loads(capsys.readouterr().out)
    failed = {c["name"] for c in report["checks"] if not c["passed"]}
    assert "chain_breathing_eigenvalue" in failed
    assert "thermal_closed_form" not in failed


def test_validate_tolerance_knob(capsys):
    main(["validate", "--only", "wronskian_sweep"])
    loose = json.loads(capsys.readouterr().out)["checks"][0]
    main(["--tol", "1e-12", "validate", "--only", "wronskian_sweep"])
    tight = json.loads(capsys.readouterr().out)["checks"][0]
    assert tight["threshold"] == pytest.approx(loose["threshold"] / 100)
    assert tight["observed"] != loose["observed"] or tight["margin"] != loose["margin"]
