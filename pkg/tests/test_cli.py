import csv
import json

import numpy as np
import pytest

from cavityspdc.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_cluster(tmp_path, capsys):
    code, out, _ = run(capsys, "cluster", "--preset", "paper", "--out", str(tmp_path))
    assert code == 0
    rep = json.loads((tmp_path / "cluster.json").read_text())
    assert rep["cluster_spacing_hz"] == pytest.approx(1997.75e9, abs=0.5e9)
    assert rep["N_s"] == pytest.approx(21.34, abs=0.01)
    assert rep["N_i"] == pytest.approx(22.34, abs=0.01)
    assert rep["delta_nu_hz"] == pytest.approx(1.425e9, abs=0.02e9)
    assert rep["single_mode"] is True
    assert "single mode" in out


def test_cluster_degenerate_exit_2(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"cavity": {"signal": {"fsr_hz": 90e9}, "idler": {"fsr_hz": 90e9}}}))
    code, _, err = run(capsys, "cluster", "--preset", "paper", "--config", str(cfg), "--out", str(tmp_path))
    assert code == 2
    assert "equal" in err


def test_cluster_scaled_fsrs(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"cavity": {"signal": {"fsr_hz": 2 * 93.61e9}, "idler": {"fsr_hz": 2 * 89.42e9}}}))
    assert run(capsys, "cluster", "--preset", "paper", "--config", str(cfg), "--out", str(tmp_path))[0] == 0
    rep = json.loads((tmp_path / "cluster.json").read_text())
    assert rep["N_s"] == pytest.approx(21.3413, abs=1e-4)


def test_bad_config_exit_2(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text("{not json")
    assert run(capsys, "cluster", "--config", str(cfg), "--out", str(tmp_path))[0] == 2


def test_g2_analytic(tmp_path, capsys):
    code, out, _ = run(capsys, "g2", "--analytic", "--preset", "paper", "--out", str(tmp_path))
    assert code == 0
    rep = json.loads((tmp_path / "g2_report.json").read_text())
    assert rep["t_fwhm_analytic_s"] == pytest.approx(0.349e-9, abs=0.002e-9)
    assert rep["detected_fwhm_s"] == pytest.approx(0.412e-9, abs=0.005e-9)
    assert rows(tmp_path / "g2_analytic.csv")[0] == ["tau_s", "g2", "detected"]
    assert "0.349" in out


def test_g2_simulate_is_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run(capsys, "g2", "--simulate", "--preset", "paper", "--seed", "5", "--out", str(d))[0] == 0
    for name in ("g2_histogram.csv", "g2_report.json", "g2_analytic.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    c = tmp_path / "c"
    run(capsys, "g2", "--simulate", "--preset", "paper", "--seed", "6", "--out", str(c))
    assert (a / "g2_histogram.csv").read_bytes() != (c / "g2_histogram.csv").read_bytes()


def test_g2_simulate_fit(tmp_path, capsys):
    code, _, _ = run(capsys, "g2", "--simulate", "--fit", "--preset", "paper", "--out", str(tmp_path))
    assert code == 0
    fit = json.loads((tmp_path / "g2_fit.json").read_text())
    assert fit["params"]["gamma_s"]["value"] == pytest.approx(546e6, rel=0.1)
    assert fit["params"]["gamma_i"]["value"] == pytest.approx(735e6, rel=0.1)


def test_counts_expectation(tmp_path, capsys):
    code, _, _ = run(capsys, "counts", "--expectation", "--preset", "paper", "--out", str(tmp_path))
    assert code == 0
    table = rows(tmp_path / "counts.csv")
    assert table[0] == ["power_mw", "singles_s", "singles_i", "coincidences", "car"]
    data = np.array(table[1:], dtype=float)
    p, s = data[:, 0], data[:, 1]
    r2 = np.corrcoef(p, s)[0, 1] ** 2
    assert r2 > 0.999
    assert np.all(np.diff(data[:, 4]) < 0)


def test_counts_zero_darks_gives_empty_car(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({
        "detection": {"signal": {"dark_rate_hz": 0}, "idler": {"dark_rate_hz": 0}},
        "source": {"pair_rate_per_mw": 50.0},
    }))
    code, _, err = run(capsys, "counts", "--preset", "paper", "--config", str(cfg), "--powers", "1",
                       "--out", str(tmp_path))
    assert code == 0
    table = rows(tmp_path / "counts.csv")
    assert float(table[1][3]) > 0
    assert table[1][4] == ""
    assert "warning" in err


def test_michelson(tmp_path, capsys):
    code, out, _ = run(capsys, "michelson", "--fit", "--preset", "paper", "--out", str(tmp_path))
    assert code == 0
    fit = json.loads((tmp_path / "michelson_fit.json").read_text())
    assert fit["params"]["linewidth"]["value"] == pytest.approx(568.9e6, rel=1e-3)
    assert fit["relative_deviation"] == pytest.approx(0.0419, abs=5e-5)
    assert "4.19 %" in out


def test_michelson_single_point(tmp_path, capsys):
    code, _, _ = run(capsys, "michelson", "--fit", "--L", "0.1", "--preset", "paper", "--out", str(tmp_path))
    assert code == 3
    assert (tmp_path / "michelson.csv").exists()
    code, _, _ = run(capsys, "michelson", "--L", "0", "--preset", "paper", "--out", str(tmp_path))
    assert code == 0
    assert float(rows(tmp_path / "michelson.csv")[1][1]) == pytest.approx(60 / 61, rel=1e-12)


def test_qpm(tmp_path, capsys):
    assert run(capsys, "qpm", "--preset", "paper", "--out", str(tmp_path))[0] == 0
    rep = json.loads((tmp_path / "qpm.json").read_text())
    assert rep["poling_period_m"] == pytest.approx(46.2e-6, rel=0.03)
    data = np.array(rows(tmp_path / "qpm_gain.csv")[1:], dtype=float)
    zero = np.argmin(np.abs(data[:, 0]))
    assert data[zero, 0] == 0.0 and data[zero, 1] == pytest.approx(1.0, abs=1e-12)
    one = rep["poling_period_m"]
    assert run(capsys, "qpm", "--order", "3", "--preset", "paper", "--out", str(tmp_path))[0] == 0
    assert json.loads((tmp_path / "qpm.json").read_text())["poling_period_m"] == pytest.approx(3 * one, rel=1e-9)


def test_qpm_no_solution_exit_3(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"crystal": {"wavelength_m": 3.0e-6, "pump_wavelength_m": 1.5e-6}}))
    assert run(capsys, "qpm", "--preset", "paper", "--config", str(cfg), "--out", str(tmp_path))[0] == 3


def test_out_env_and_flag_precedence(tmp_path, capsys, monkeypatch):
    env_dir, flag_dir = tmp_path / "env", tmp_path / "flag"
    monkeypatch.setenv("CAVITYSPDC_OUT", str(env_dir))
    run(capsys, "cluster", "--preset", "paper")
    assert (env_dir / "cluster.json").exists()
    run(capsys, "cluster", "--preset", "paper", "--out", str(flag_dir))
    assert (flag_dir / "cluster.json").exists()


def test_all_commands_idempotent(tmp_path, capsys):
    for cmd in (["cluster"], ["g2"], ["counts", "--expectation"], ["michelson", "--fit"], ["qpm"]):
        a, b = tmp_path / "a", tmp_path / "b"
        run(capsys, *cmd, "--preset", "paper", "--out", str(a))
        run(capsys, *cmd, "--preset", "paper", "--out", str(b))
        for f in a.iterdir():
            assert f.read_bytes() == (b / f.name).read_bytes(), f.name
