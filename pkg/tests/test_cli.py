import json
import os

import numpy as np
import pytest

from chirppdc.cli import main
from chirppdc.config import (ConfigError, DEFAULTS, apply_overrides,
                             load_config, validate)

SMALL_SPECTRUM = [
    "--set", "solver.grid.min_thz=70", "--set", "solver.grid.max_thz=80",
    "--set", "solver.grid.points=40",
]


def run_cli(*argv):
    return main(list(argv))


def read_csv(path):
    return np.genfromtxt(path, delimiter=",", names=True)


def test_design_artifact(tmp_path, capsys):
    assert run_cli("design", "--out", str(tmp_path)) == 0
    out = capsys.readouterr().out
    assert "k_start=855.0625" in out
    assert "phi_total=4045.625" in out
    table = read_csv(tmp_path / "design.csv")
    assert table.dtype.names == ("z_mm", "K_rad_per_mm", "phi_rad")
    assert table["K_rad_per_mm"][0] == 855.0625
    assert table["z_mm"][-1] == 5.0
    meta = json.loads((tmp_path / "design.json").read_text())
    assert meta["version"].startswith("chirppdc")
    assert meta["config"]["grating"]["alpha"] == 735.0
    assert "timestamp" in meta


def test_spectrum_artifact_and_summary(tmp_path, capsys):
    assert run_cli("spectrum", "--out", str(tmp_path), *SMALL_SPECTRUM) == 0
    out = capsys.readouterr().out
    summary = dict(kv.split("=", 1) for kv in out.split())
    assert float(summary["peak_photons_per_mode"]) > 1.0
    assert float(summary["symplectic_defect"]) < 1e-8
    table = read_csv(tmp_path / "spectrum.csv")
    assert table.dtype.names == ("detuning_THz", "wavelength_nm",
                                 "photons_per_mode")
    assert table.size == 80  # mirrored 40-point band
    assert np.all(table["photons_per_mode"] >= 0)


def test_spectrum_reruns_byte_identical(tmp_path):
    run_cli("spectrum", "--out", str(tmp_path / "a"), *SMALL_SPECTRUM)
    run_cli("spectrum", "--out", str(tmp_path / "b"), *SMALL_SPECTRUM)
    a = (tmp_path / "a" / "spectrum.csv").read_bytes()
    b = (tmp_path / "b" / "spectrum.csv").read_bytes()
    assert a == b


def test_spectrum_worker_count_invariance(tmp_path):
    run_cli("spectrum", "--out", str(tmp_path / "w1"), "--workers", "1",
            *SMALL_SPECTRUM)
    run_cli("spectrum", "--out", str(tmp_path / "w4"), "--workers", "4",
            *SMALL_SPECTRUM)
    assert ((tmp_path / "w1" / "spectrum.csv").read_bytes()
            == (tmp_path / "w4" / "spectrum.csv").read_bytes())


def test_trajectory_dump(tmp_path):
    assert run_cli("spectrum", "--out", str(tmp_path), "--dump-trajectory",
                   "75.0", *SMALL_SPECTRUM) == 0
    table = read_csv(tmp_path / "trajectory.csv")
    assert table.dtype.names == ("z_mm", "re_A", "im_A", "re_B", "im_B")
    assert table["z_mm"][0] == 0.0 and table["z_mm"][-1] == 5.0
    assert table["re_A"][0] == 1.0


def test_covariance_artifact(tmp_path, capsys):
    assert run_cli(
        "covariance", "--out", str(tmp_path),
        "--set", "observables.covariance_grid={min_thz: 72, max_thz: 80, "
                 "points: 80, mirror: true}",
        "--set", "observables.ensemble=60",
        "--set", "observables.bin_width_thz=0.5",
    ) == 0
    out = capsys.readouterr().out
    summary = dict(kv.split("=", 1) for kv in out.split())
    assert float(summary["mode_ratio"]) > 1.0
    assert summary["lower_bound"] in ("true", "false")
    table = read_csv(tmp_path / "covariance.csv")
    assert table.dtype.names == ("signal_THz", "idler_THz", "cov",
                                 "mean_s", "mean_i")
    meta = json.loads((tmp_path / "covariance.json").read_text())
    assert meta["seed"] == 12345
    assert meta["ensemble_size"] == 60


def test_sfg_artifacts(tmp_path, capsys):
    assert run_cli(
        "sfg", "--out", str(tmp_path),
        "--set", "observables.sfg_grid={min_thz: 60, max_thz: 150, "
                 "points: 300, mirror: false}",
        "--set", "observables.tau_coarse_ps=[-1.2, 1.2, 0.1]",
        "--set", "observables.tau_fine_fs=[-1150, -500, 5.0]",
    ) == 0
    out = capsys.readouterr().out
    summary = dict(kv.split("=", 1) for kv in out.split())
    assert float(summary["peak_fwhm_fs"]) > 0
    coarse = read_csv(tmp_path / "sfg_coarse.csv")
    fine = read_csv(tmp_path / "sfg_fine.csv")
    for table in (coarse, fine):
        assert table.dtype.names == ("tau_fs", "intensity", "background")
        assert np.all(table["intensity"] >= table["background"] * (1 - 1e-12))


def test_gain_scan_and_fit_roundtrip(tmp_path, capsys):
    assert run_cli("gain-scan", "--out", str(tmp_path),
                   "--set", "gain.powers_mw=[6, 8, 10, 12, 14, 15]") == 0
    first = dict(kv.split("=", 1)
                 for kv in capsys.readouterr().out.split())
    table = read_csv(tmp_path / "gain_curve.csv")
    assert table.dtype.names == ("power_mW", "flux")
    fits = read_csv(tmp_path / "gain_fits.csv")
    assert fits.dtype.names == ("power_mW", "rosenbluth_flux",
                                "homogeneous_flux")
    meta = json.loads((tmp_path / "gain_fits.json").read_text())
    assert set(meta["fits"]) == {"rosenbluth", "homogeneous"}

    # feed the emitted curve back through the standalone fitter
    assert run_cli("fit", "--out", str(tmp_path), "--data",
                   str(tmp_path / "gain_curve.csv")) == 0
    second = dict(kv.split("=", 1)
                  for kv in capsys.readouterr().out.split())
    assert (float(second["rosenbluth_B"])
            == pytest.approx(float(first["rosenbluth_B"]), rel=1e-9))


def test_missing_config_exits_2(tmp_path, capsys):
    assert run_cli("spectrum", "--config", "/does/not/exist.yaml",
                   "--out", str(tmp_path)) == 2
    assert "config error" in capsys.readouterr().err
    assert not os.path.exists(tmp_path / "spectrum.csv")


def test_unknown_key_exits_2(tmp_path, capsys):
    assert run_cli("spectrum", "--out", str(tmp_path),
                   "--set", "solver.typo=1") == 2
    assert "solver.typo" in capsys.readouterr().err


def test_conflicting_coupling_exits_2(tmp_path):
    assert run_cli("spectrum", "--out", str(tmp_path),
                   "--set", "solver.coupling_g=1.0") == 2  # nu0 also set


def test_numerical_failure_exits_3(tmp_path, capsys):
    assert run_cli("gain-scan", "--out", str(tmp_path),
                   "--set", "gain.band_nm=[100.0, 101.0]") == 3
    assert "numerical failure" in capsys.readouterr().err


def test_shipped_config_validates():
    cfg = load_config(os.path.join(os.path.dirname(__file__), os.pardir,
                                   "paper.yaml"))
    assert cfg["grating"]["alpha"] == 735.0
    assert cfg["solver"]["nu0"] == 0.1


def test_validate_defaults_and_overrides():
    cfg = validate({})
    assert cfg == DEFAULTS or cfg["solver"]["workers"] == DEFAULTS["solver"]["workers"]
    over = apply_overrides(cfg, ["solver.nu0=0.25", "grating.kind=constant"])
    assert over["solver"]["nu0"] == 0.25
    assert over["grating"]["kind"] == "constant"
    with pytest.raises(ConfigError):
        apply_overrides(cfg, ["nonsense"])
    with pytest.raises(ConfigError):
        apply_overrides(cfg, ["solver.bogus=1"])
    with pytest.raises(ConfigError):
        validate({"solver": {"rtol": "tight"}})


def test_output_directory_env(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("CHIRPPDC_OUTDIR", str(tmp_path / "envdir"))
    assert run_cli("design") == 0
    assert (tmp_path / "envdir" / "design.csv").exists()
