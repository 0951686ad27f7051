"""End-to-end command-line tests (in-process via main())."""

import json

import numpy as np
import pytest

from cavicool.cli import main
from cavicool.ensemble import EnsembleConfig, InitialConditions
from cavicool.params import SystemParams
from cavicool.scan import GridAxis, GridSpec, run_scan

SYSTEM = """\
[system]
kappa = 5
gamma = 1
g0 = 3
delta_a = -3
delta_c = -5
eta_l = 1
omega = 0
"""

QUICK_ENSEMBLE = """\
[initial]
kbt0 = 5

[ensemble]
n_traj = 16
t_final = 0.5
sample_stride = 50
steady_window = 0.2
seed = 0
dt = 1e-3
"""


def write_cfg(tmp_path, text, name="c.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def run_cfg(tmp_path):
    return "[run]\nmode = run\n\n" + SYSTEM + "\n" + QUICK_ENSEMBLE


class TestRunMode:
    def test_writes_csv_and_summary(self, tmp_path):
        cfg = write_cfg(tmp_path, run_cfg(tmp_path))
        out = tmp_path / "out"
        assert main(["run", "--config", cfg, "--out", str(out)]) == 0
        lines = (out / "timeseries.csv").read_text().splitlines()
        assert lines[0] == "t,mean_intensity,e_kin,bunching"
        assert len(lines) == 1 + 11            # 500 steps / stride 50 + t=0
        doc = json.loads((out / "summary.json").read_text())
        assert doc["mode"] == "run"
        assert doc["seed"] == 0
        assert doc["summary"]["n_traj"] == 16
        assert doc["summary"]["n_excluded"] == 0
        assert doc["config"]["ensemble"]["dt"] == 1e-3
        assert doc["config"]["system"]["kappa"] == 5.0
        assert doc["config"]["initial"]["x_sigma"] > 0

    def test_byte_identical_reruns(self, tmp_path):
        cfg = write_cfg(tmp_path, run_cfg(tmp_path))
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["run", "--config", cfg, "--out", str(a)]) == 0
        assert main(["run", "--config", cfg, "--out", str(b)]) == 0
        assert (a / "timeseries.csv").read_bytes() == \
            (b / "timeseries.csv").read_bytes()

    def test_seed_flag_overrides_config(self, tmp_path):
        cfg = write_cfg(tmp_path, run_cfg(tmp_path))
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["run", "--config", cfg, "--out", str(a),
                     "--seed", "9"]) == 0
        assert main(["run", "--config", cfg, "--out", str(b)]) == 0
        assert (a / "timeseries.csv").read_bytes() != \
            (b / "timeseries.csv").read_bytes()
        assert json.loads((a / "summary.json").read_text())["seed"] == 9

    def test_threads_do_not_change_output(self, tmp_path, monkeypatch):
        text = run_cfg(tmp_path).replace("n_traj = 16", "n_traj = 300")
        cfg = write_cfg(tmp_path, text)
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["run", "--config", cfg, "--out", str(a)]) == 0
        monkeypatch.setenv("CAVICOOL_THREADS", "2")
        assert main(["run", "--config", cfg, "--out", str(b)]) == 0
        assert (a / "timeseries.csv").read_bytes() == \
            (b / "timeseries.csv").read_bytes()


class TestScanMode:
    def scan_cfg(self):
        return ("[run]\nmode = scan\n\n" + SYSTEM + "\n" + QUICK_ENSEMBLE +
                "\n[grid]\n"
                "axis1 = delta_a\naxis1_start = -4\naxis1_stop = -3\n"
                "axis1_step = 1\n"
                "axis2 = eta_l\naxis2_start = 0.5\naxis2_stop = 1\n"
                "axis2_step = 0.5\n")

    def test_two_by_two_grid_gives_four_rows(self, tmp_path):
        cfg = write_cfg(tmp_path, self.scan_cfg())
        out = tmp_path / "out"
        assert main(["scan", "--config", cfg, "--out", str(out)]) == 0
        lines = (out / "scan.csv").read_text().splitlines()
        assert lines[0].startswith("delta_a,eta_l,intensity,e_kin")
        assert len(lines) == 1 + 4

    def test_csv_matches_monolithic_scan(self, tmp_path):
        # the row-by-row progress loop must not change any value
        cfg = write_cfg(tmp_path, self.scan_cfg())
        out = tmp_path / "out"
        assert main(["scan", "--config", cfg, "--out", str(out)]) == 0
        body = np.genfromtxt(out / "scan.csv", delimiter=",", names=True)

        g = GridSpec(GridAxis("delta_a", -4.0, -3.0, 1.0),
                     GridAxis("eta_l", 0.5, 1.0, 0.5))
        base = SystemParams(kappa=5.0, gamma=1.0, g0=3.0, delta_a=-3.0,
                            delta_c=-5.0, eta_l=1.0, omega=0.0)
        r = run_scan(g, base, InitialConditions(kbt0=5.0),
                     EnsembleConfig(n_traj=16, t_final=0.5, sample_stride=50,
                                    steady_window=0.2, seed=0, dt=1e-3))
        np.testing.assert_array_equal(body["e_kin"], r.e_kin.ravel())
        np.testing.assert_array_equal(body["intensity"], r.intensity.ravel())


class TestFrictionMode:
    def test_map_csv(self, tmp_path):
        text = ("[run]\nmode = friction\n\n" + SYSTEM +
                "\n[grid]\n"
                "axis1 = delta_a\naxis1_start = -3\naxis1_stop = 1\n"
                "axis1_step = 4\n"
                "axis2 = delta_c\naxis2_start = -2\naxis2_stop = -1\n"
                "axis2_step = 1\n"
                "\n[friction]\nv = 0.2\nn_transient_periods = 3\n"
                "n_average_periods = 2\ndt = 5e-3\ncheck_linearity = false\n")
        text = text.replace("kappa = 5", "kappa = 1")
        cfg = write_cfg(tmp_path, text)
        out = tmp_path / "out"
        assert main(["friction", "--config", cfg, "--out", str(out)]) == 0
        body = np.genfromtxt(out / "friction_map.csv", delimiter=",",
                             names=True)
        assert body.shape == (4,)
        assert set(np.unique(body["converged"])) <= {0.0, 1.0}
        # red detuning cools, blue heats
        assert body["f1"][body["delta_a"] == -3].max() > 0
        assert body["f1"][body["delta_a"] == 1].max() < 0
        doc = json.loads((out / "summary.json").read_text())
        assert doc["summary"]["n_converged"] == 4
        assert doc["seed"] is None


class TestHistMode:
    def test_histogram_csv(self, tmp_path):
        text = ("[run]\nmode = hist\n\n" + SYSTEM + "\n" + QUICK_ENSEMBLE +
                "\n[hist]\nt_snapshot = 0.5\nn_bins = 16\n")
        cfg = write_cfg(tmp_path, text)
        out = tmp_path / "out"
        assert main(["hist", "--config", cfg, "--out", str(out)]) == 0
        body = np.genfromtxt(out / "histogram.csv", delimiter=",", names=True)
        assert body.shape == (16,)
        assert body["count"].sum() == 16
        doc = json.loads((out / "summary.json").read_text())
        assert doc["summary"]["n_excluded"] == 0
        assert len(doc["summary"]["mean_alpha_plus"]) == 2


class TestFailures:
    def test_existing_output_refused(self, tmp_path):
        cfg = write_cfg(tmp_path, run_cfg(tmp_path))
        out = tmp_path / "out"
        assert main(["run", "--config", cfg, "--out", str(out)]) == 0
        assert main(["run", "--config", cfg, "--out", str(out)]) == 3
        assert main(["run", "--config", cfg, "--out", str(out),
                     "--overwrite"]) == 0

    def test_config_error_exit(self, tmp_path):
        cfg = write_cfg(tmp_path, "[run]\nmode = run\n")
        assert main(["run", "--config", cfg, "--out", str(tmp_path)]) == 2

    def test_missing_config_file_exit(self, tmp_path):
        assert main(["run", "--config", str(tmp_path / "nope.cfg"),
                     "--out", str(tmp_path)]) == 2

    def test_mode_mismatch_exit(self, tmp_path):
        cfg = write_cfg(tmp_path, run_cfg(tmp_path))
        assert main(["scan", "--config", cfg, "--out", str(tmp_path)]) == 2

    def test_missing_out_dir_exit(self, tmp_path):
        cfg = write_cfg(tmp_path, run_cfg(tmp_path))
        assert main(["run", "--config", cfg]) == 2

    def test_runtime_failure_exit(self, tmp_path):
        text = run_cfg(tmp_path).replace(
            "[initial]\nkbt0 = 5",
            "[initial]\nkbt0 = 0\nalpha0_re = 1e160")
        cfg = write_cfg(tmp_path, text)
        assert main(["run", "--config", cfg,
                     "--out", str(tmp_path / "o")]) == 4

    def test_bad_threads_exit(self, tmp_path):
        cfg = write_cfg(tmp_path, run_cfg(tmp_path))
        assert main(["run", "--config", cfg, "--out", str(tmp_path / "o"),
                     "--threads", "0"]) == 2


def test_progress_goes_to_stderr(tmp_path, capsys):
    cfg = write_cfg(tmp_path, run_cfg(tmp_path))
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    captured = capsys.readouterr()
    assert captured.out == ""
    assert "running ensemble" in captured.err
    assert "wrote" in captured.err
