import numpy as np
import pytest

from delaycomp import cli
from delaycomp.cli import (
    CSV_HEADER,
    EXIT_DIVERGED,
    EXIT_IO,
    EXIT_OK,
    EXIT_USAGE,
    ConfigError,
    parse_config,
)

MINIMAL = """\
mass = 1
inertia = 1
friction_v = 1
friction_w = 2
wheel_base = 0.5
gain_force = 2
gain_torque = 4
delay = 0.3
v_ref = 1
w_ref = 0.5
"""


def write_config(tmp_path, text=MINIMAL, extra=""):
    path = tmp_path / "robot.cfg"
    path.write_text(text + extra)
    return path


class TestParseConfig:
    def test_minimal_defaults(self):
        cfg = parse_config(MINIMAL)
        assert cfg.dt == 0.01
        assert cfg.horizon == 10.0
        assert cfg.poles == (-5.0, -5.0)
        assert cfg.controller == "predictor-window"
        assert cfg.v0 == 0.0 and cfg.w0 == 0.0
        assert cfg.e_max is None
        assert cfg.params.m == 1.0 and cfg.params.k_d == 4.0
        assert cfg.delay == 0.3 and cfg.v_ref == 1.0 and cfg.w_ref == 0.5

    def test_comments_and_blank_lines(self):
        cfg = parse_config("# heading\n\n" + MINIMAL + "dt = 0.02  # fast\n")
        assert cfg.dt == 0.02

    @pytest.mark.parametrize("extra,key", [
        ("unknown_thing = 3\n", "unknown_thing"),
        ("dt = fast\n", "dt"),
        ("dt = 0.1\ndelay2 = 1\n", "delay2"),
        ("poles = -5,1\n", "poles"),
        ("poles = -5\n", "poles"),
        ("controller = magic\n", "controller"),
        ("e_max = -2\n", "e_max"),
        ("dt = -0.01\n", "dt"),
        ("horizon = 0.001\n", "horizon"),
    ])
    def test_errors_name_the_key(self, extra, key):
        with pytest.raises(ConfigError) as err:
            parse_config(MINIMAL + extra)
        assert err.value.key == key
        assert key in str(err.value)

    def test_delay_integrality(self):
        with pytest.raises(ConfigError) as err:
            parse_config(MINIMAL.replace("delay = 0.3", "delay = 0.25") + "dt = 0.1\n")
        assert err.value.key == "delay"

    def test_missing_required(self):
        with pytest.raises(ConfigError) as err:
            parse_config(MINIMAL.replace("mass = 1\n", ""))
        assert err.value.key == "mass"

    def test_physical_invariant_named(self):
        with pytest.raises(ConfigError) as err:
            parse_config(MINIMAL.replace("mass = 1", "mass = -1"))
        assert err.value.key == "mass"

    def test_parse_is_total_on_garbage(self):
        for text in ("= 5\n", "mass\n", "mass = \n", "mass = 1\nmass = 2\n"):
            with pytest.raises(ConfigError):
                parse_config(text)


class TestRunCommand:
    def test_run_writes_csv_and_metrics(self, tmp_path):
        cfg = write_config(tmp_path)
        out = tmp_path / "out"
        code = cli.main(["run", "--config", str(cfg), "--out-dir", str(out)])
        assert code == EXIT_OK
        csv_path = out / "predictor-window.csv"
        lines = csv_path.read_text().splitlines()
        assert lines[0] == CSV_HEADER
        metrics = (out / "predictor-window.metrics.txt").read_text()
        assert "settled = true" in metrics
        assert "diverged = false" in metrics

    def test_csv_round_trip_full_precision(self, tmp_path):
        from delaycomp.cli import build_scenario
        from delaycomp.sim import run as sim_run

        cfg_path = write_config(tmp_path, extra="horizon = 1\n")
        out = tmp_path / "out"
        assert cli.main(["run", "--config", str(cfg_path), "--out-dir", str(out)]) == EXIT_OK
        loaded = np.genfromtxt(out / "predictor-window.csv", delimiter=",", names=True)

        config = parse_config((tmp_path / "robot.cfg").read_text())
        traj, _ = sim_run(build_scenario(config))
        np.testing.assert_array_equal(loaded["t"], traj.t)
        np.testing.assert_array_equal(loaded["v"], traj.states[:, 0])
        np.testing.assert_array_equal(loaded["omega"], traj.states[:, 1])
        np.testing.assert_array_equal(loaded["e_m"], traj.controls[:, 0])
        np.testing.assert_array_equal(loaded["v_pred"], traj.predictions[:, 0])
        np.testing.assert_array_equal(loaded["heading"], traj.poses[:, 2])

    def test_nonpredictor_leaves_prediction_columns_empty(self, tmp_path):
        cfg = write_config(tmp_path, extra="controller = naive\nhorizon = 1\n")
        out = tmp_path / "out"
        assert cli.main(["run", "--config", str(cfg), "--out-dir", str(out)]) == EXIT_OK
        row = (out / "naive.csv").read_text().splitlines()[1].split(",")
        assert row[5] == "" and row[6] == ""

    def test_divergence_exit_code(self, tmp_path):
        # frictionless plant with aggressive poles and a large delay destabilizes
        # the naive controller
        text = MINIMAL.replace("friction_v = 1", "friction_v = 0").replace("friction_w = 2", "friction_w = 0")
        cfg = write_config(tmp_path, text=text,
                           extra="controller = naive\npoles = -8,-8\nhorizon = 30\n")
        out = tmp_path / "out"
        code = cli.main(["run", "--config", str(cfg), "--out-dir", str(out)])
        assert code == EXIT_DIVERGED
        metrics = (out / "naive.metrics.txt").read_text()
        assert "diverged = true" in metrics
        assert (out / "naive.csv").exists()  # trajectory still written

    def test_missing_config_file(self, tmp_path):
        assert cli.main(["run", "--config", str(tmp_path / "nope.cfg")]) == EXIT_IO

    def test_bad_config_usage_code(self, tmp_path, capsys):
        cfg = write_config(tmp_path, extra="poles = -5,1\n")
        assert cli.main(["run", "--config", str(cfg)]) == EXIT_USAGE
        assert "poles" in capsys.readouterr().err

    def test_unknown_flag(self):
        assert cli.main(["run", "--bogus"]) == EXIT_USAGE

    def test_controller_override(self, tmp_path):
        cfg = write_config(tmp_path, extra="horizon = 1\n")
        out = tmp_path / "out"
        assert cli.main(["run", "--config", str(cfg), "--controller", "nodelay",
                         "--out-dir", str(out)]) == EXIT_OK
        assert (out / "nodelay.csv").exists()


class TestCompareCommand:
    def test_zero_delay_identical(self, tmp_path, capsys):
        cfg = write_config(tmp_path.joinpath(), text=MINIMAL.replace("delay = 0.3", "delay = 0"),
                           extra="horizon = 3\n")
        out = tmp_path / "out"
        assert cli.main(["compare", "--config", str(cfg), "--out-dir", str(out)]) == EXIT_OK
        naive = np.genfromtxt(out / "naive.csv", delimiter=",", names=True)
        pred = np.genfromtxt(out / "predictor-window.csv", delimiter=",", names=True)
        np.testing.assert_allclose(pred["v"], naive["v"], atol=1e-9)
        np.testing.assert_allclose(pred["omega"], naive["omega"], atol=1e-9)
        assert (out / "compare.txt").exists()

    def test_setpoint_equals_initial_state(self, tmp_path):
        cfg = write_config(tmp_path, extra="v0 = 1\nw0 = 0.5\nhorizon = 1\n")
        out = tmp_path / "out"
        assert cli.main(["compare", "--config", str(cfg), "--out-dir", str(out)]) == EXIT_OK
        for name in ("naive", "predictor-window"):
            report = (out / "compare.txt").read_text()
            assert "yes" in report  # both settled
            data = np.genfromtxt(out / f"{name}.csv", delimiter=",", names=True)
            np.testing.assert_allclose(data["v"], 1.0, atol=1e-12)


class TestSweepCommand:
    def test_single_zero_delay(self, tmp_path):
        cfg = write_config(tmp_path, text=MINIMAL.replace("delay = 0.3", "delay = 0"),
                           extra="horizon = 3\n")
        out = tmp_path / "out"
        assert cli.main(["sweep", "--config", str(cfg), "--h-min", "0", "--h-max", "0",
                         "--steps", "1", "--out-dir", str(out)]) == EXIT_OK
        lines = (out / "sweep.csv").read_text().splitlines()
        assert lines[0] == cli.SWEEP_HEADER
        assert len(lines) == 2
        fields = lines[1].split(",")
        assert fields[1] == fields[3] == "true"
        assert fields[2] == fields[4]

    def test_invalid_range(self, tmp_path):
        cfg = write_config(tmp_path)
        assert cli.main(["sweep", "--config", str(cfg), "--h-min", "0.3", "--h-max", "0.1",
                         "--steps", "3"]) == EXIT_USAGE
        assert cli.main(["sweep", "--config", str(cfg), "--h-min", "0", "--h-max", "0.1",
                         "--steps", "0"]) == EXIT_USAGE

    def test_grid_rounded_and_deduplicated(self, tmp_path):
        cfg = write_config(tmp_path, extra="horizon = 2\n")
        out = tmp_path / "out"
        assert cli.main(["sweep", "--config", str(cfg), "--h-min", "0.004", "--h-max", "0.016",
                         "--steps", "4", "--out-dir", str(out)]) == EXIT_OK
        lines = (out / "sweep.csv").read_text().splitlines()[1:]
        hs = [float(line.split(",")[0]) for line in lines]
        assert hs == sorted(set(hs))
        for h in hs:
            assert abs(round(h / 0.01) * 0.01 - h) < 1e-12
