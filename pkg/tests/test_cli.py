import re
import subprocess
import sys

import numpy as np
import pytest

from epsdyn import cli, pipeline
from epsdyn.config import sample_config_path

SAMPLE_TEXT = sample_config_path().read_text()


def config(tmp_path, **edits):
    text = SAMPLE_TEXT
    for key, value in edits.items():
        text, n = re.subn(rf"(?m)^{key}\s*=.*$", f"{key} = {value}", text, count=1)
        assert n == 1, key
    path = tmp_path / "cfg.toml"
    path.write_text(text)
    return str(path)


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def key_values(text):
    return dict(line.split("=", 1) for line in text.splitlines() if "=" in line and not line.startswith("#"))


def read_csv(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    return header, np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


class TestExitCodes:
    def test_validate_ok(self, capsys):
        code, out, _ = run(capsys, "validate")
        assert code == 0
        assert "resonances_rad_s" in out or "resonance" in out

    def test_bad_config_is_usage_error(self, capsys, tmp_path):
        code, _, err = run(capsys, "validate", "--config", config(tmp_path, j_h="-1.0"))
        assert code == 1
        assert "J_h" in err

    def test_unknown_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["bode", "--subject", "A_t", "--bogus"])
        assert exc.value.code == 1

    def test_compute_failure(self, capsys, monkeypatch):
        def boom(*a, **k):
            raise ArithmeticError("forced")
        monkeypatch.setattr(pipeline, "response", boom)
        code, _, err = run(capsys, "bode", "--subject", "A_t")
        assert code == 2
        assert "forced" in err

    def test_unstable_loop(self, capsys, tmp_path):
        code, out, _ = run(capsys, "margins", "--arch", "ff", "--config", config(tmp_path, gain="-30.0"))
        assert code == 3
        assert key_values(out)["unstable"] == "true"

    def test_unstable_sim_subject(self, capsys, tmp_path):
        # Proportional gain far beyond what 250 us of loop delay tolerates.
        code, _, err = run(capsys, "sim", "--subject", "A_t", "--arch", "fb", "--excitation", "step",
                           "--config", config(tmp_path, k_pq="50.0"))
        assert code == 3
        assert "unstable" in err

    def test_feedback_without_gains(self, capsys, tmp_path):
        text = re.sub(r"(?ms)^\[pi_gains\].*?(?=^\[)", "", SAMPLE_TEXT)
        path = tmp_path / "nogains.toml"
        path.write_text(text)
        assert run(capsys, "margins", "--arch", "fb", "--config", str(path))[0] == 1
        assert run(capsys, "margins", "--arch", "ff", "--config", str(path))[0] == 0

    def test_bad_sim_frequency(self, capsys):
        assert run(capsys, "sim", "--subject", "A_t", "--excitation", "sine", "--omega", "-5")[0] == 1

    def test_bad_pade(self, capsys):
        assert run(capsys, "bode", "--subject", "A_t", "--pade", "11")[0] == 1


class TestBode:
    def test_rows_match_grid(self, capsys, tmp_path, sample_cfg):
        code, out, _ = run(capsys, "bode", "--subject", "Z_t", "--out", str(tmp_path))
        assert code == 0
        header, data = read_csv(tmp_path / "bode_Z_t_fb.csv")
        assert header == ["omega_rad_s", "mag_db", "phase_deg"]
        assert data.shape[0] == sample_cfg.grid.build().omegas.size

    def test_round_trip_precision(self, capsys, tmp_path, sample_cfg):
        run(capsys, "bode", "--subject", "A_t", "--arch", "ff", "--out", str(tmp_path))
        _, data = read_csv(tmp_path / "bode_A_t_ff.csv")
        grid = sample_cfg.grid.build()
        fr = pipeline.response(sample_cfg, "A_t", "ff", grid)
        _, mag, ph = pipeline.bode_columns(fr)
        np.testing.assert_allclose(data[:, 0], grid.omegas, rtol=1e-15)
        np.testing.assert_allclose(data[:, 1], mag, rtol=1e-9, atol=1e-12)
        np.testing.assert_allclose(data[:, 2], ph, rtol=1e-9, atol=1e-12)

    def test_stdout_without_out(self, capsys):
        code, out, _ = run(capsys, "bode", "--subject", "A_t", "--grid", "1:100:20")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "omega_rad_s,mag_db,phase_deg"
        assert len(lines) == 1 + 41

    def test_perfect_feedforward_is_flat(self, capsys, tmp_path):
        cfg = config(tmp_path, lambda_m_hat="0.012", tau_c="0.0", tau_p="0.0")
        run(capsys, "bode", "--subject", "A_t", "--arch", "ff", "--config", cfg, "--out", str(tmp_path))
        _, data = read_csv(tmp_path / "bode_A_t_ff.csv")
        assert np.max(np.abs(data[:, 1])) < 1e-9

    def test_ratio_flat_without_velocity_feedback(self, capsys, tmp_path):
        cfg = config(tmp_path, lambda_m_hat="0.012", tau_c="0.0", tau_p="0.0", tau_omega="0.0")
        run(capsys, "bode", "--subject", "ratio", "--arch", "ff", "--config", cfg, "--out", str(tmp_path))
        _, data = read_csv(tmp_path / "bode_ratio_ff.csv")
        assert np.max(np.abs(data[:, 1])) < 1e-9
        assert np.max(np.abs(data[:, 2])) < 1e-9


class TestMargins:
    def test_sample_ordering(self, capsys):
        ff = key_values(run(capsys, "margins", "--arch", "ff")[1])
        fb = key_values(run(capsys, "margins", "--arch", "fb")[1])
        assert float(ff["gain_margin_db"]) < float(fb["gain_margin_db"])
        assert float(ff["phase_margin_deg"]) < float(fb["phase_margin_deg"])

    def test_zero_gain(self, capsys, tmp_path):
        code, out, _ = run(capsys, "margins", "--config", config(tmp_path, gain="0.0"))
        assert code == 0
        assert key_values(out)["phase_margin_deg"] == "undefined"

    def test_doubling_gain(self, capsys, tmp_path):
        a = key_values(run(capsys, "margins", "--config", config(tmp_path, gain="-3.0"))[1])
        b = key_values(run(capsys, "margins", "--config", config(tmp_path, gain="-6.0"))[1])
        assert float(a["gain_margin_db"]) - float(b["gain_margin_db"]) == pytest.approx(6.0206, abs=1e-4)


class TestCompare:
    FILES = ["panel_a_ratio_ff.csv", "panel_a_ratio_fb.csv", "panel_b_mechanical.csv",
             "panel_b_eoltf.csv", "margins.txt"]

    def test_bundle(self, capsys, tmp_path):
        code, _, _ = run(capsys, "compare", "--out", str(tmp_path))
        assert code == 0
        for name in self.FILES:
            assert (tmp_path / name).exists()
        _, a = read_csv(tmp_path / "panel_a_ratio_ff.csv")
        _, b = read_csv(tmp_path / "panel_a_ratio_fb.csv")
        header, e = read_csv(tmp_path / "panel_b_eoltf.csv")
        np.testing.assert_array_equal(a[:, 0], b[:, 0])
        np.testing.assert_array_equal(a[:, 0], e[:, 0])
        assert header == ["omega_rad_s", "mag_db_ff", "phase_deg_ff", "mag_db_fb", "phase_deg_fb"]
        summary = key_values((tmp_path / "margins.txt").read_text())
        assert summary["ff_below_fb_gain"] == "true"
        assert summary["ff_below_fb_phase"] == "true"

    def test_deterministic(self, capsys, tmp_path):
        run(capsys, "compare", "--out", str(tmp_path / "a"))
        run(capsys, "compare", "--out", str(tmp_path / "b"))
        for name in self.FILES:
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_requires_out(self, capsys):
        assert run(capsys, "compare")[0] == 1

    def test_fb_ratio_low_frequency_null(self, capsys, tmp_path):
        cfg = config(tmp_path, lambda_m_hat="0.012", tau_c="0.0", tau_p="0.0", tau_omega="0.0")
        run(capsys, "compare", "--config", cfg, "--out", str(tmp_path / "o"))
        _, data = read_csv(tmp_path / "o" / "panel_a_ratio_fb.csv")
        assert np.max(np.abs(data[data[:, 0] < 1.0, 1])) < 1e-9


class TestSim:
    def test_step_settles(self, capsys, tmp_path):
        cfg = config(tmp_path, lambda_m_hat="0.012", tau_c="0.0", tau_p="0.0")
        code, out, _ = run(capsys, "sim", "--subject", "A_t", "--arch", "fb", "--excitation", "step",
                           "--config", cfg, "--out", str(tmp_path))
        assert code == 0
        assert abs(float(key_values(out)["final_value"]) - 1.0) < 1e-3
        header, data = read_csv(tmp_path / "sim_A_t_fb_step.csv")
        assert header == ["t", "u", "y"]
        assert abs(data[-1, 2] - 1.0) < 1e-3

    def test_sine_delta(self, capsys):
        code, out, _ = run(capsys, "sim", "--subject", "A_t", "--excitation", "sine", "--omega", "200")
        kv = key_values(out)
        assert code == 0
        assert abs(float(kv["delta_mag_pct"])) < 2.0
        assert abs(float(kv["delta_phase_deg"])) < 2.0


def test_entry_point_subprocess(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "epsdyn.cli", "margins", "--arch", "fb"],
        capture_output=True, text=True, timeout=120,
    )
    assert proc.returncode == 0, proc.stderr
    assert "gain_margin_db=" in proc.stdout
