import math

import pandas as pd
import pytest

from config.config import DEFAULT_CAPACITY
from src import __version__
from src.cli import CSV_COLUMNS, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, main, meta_path


def read_meta(path):
    lines = meta_path(path).read_text(encoding="utf-8").splitlines()
    return dict(line.split("=", 1) for line in lines)


def test_stability_chart(tmp_path):
    out = tmp_path / "chart.csv"
    code = main(["stability-chart", "--resolution", "11", "--a-max", "2.0", "--b-max", "2.0",
                 "--out", str(out), "--no-progress"])
    assert code == EXIT_OK
    frame = pd.read_csv(out)
    assert list(frame.columns) == CSV_COLUMNS["stability-chart"]
    grid = frame[frame["kind"] == "grid"]
    assert len(grid) == 121
    boundary = frame[frame["kind"] == "boundary"]
    assert boundary.loc[boundary["b"] == 0.0, "a"].iloc[0] == pytest.approx(math.pi / 4)

    meta = read_meta(out)
    assert meta["command"] == "stability-chart"
    assert meta["version"] == __version__
    assert meta["resolution"] == "11"


def test_stability_chart_is_deterministic(tmp_path):
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (first, second):
        assert main(["stability-chart", "--resolution", "5", "--out", str(out)]) == EXIT_OK
    assert first.read_bytes() == second.read_bytes()


def test_hopf_classify_flags(tmp_path):
    out = tmp_path / "hopf.csv"
    code = main(["hopf-classify", "--a", "2.16", "--b", "0.0222", "--tau1", "10",
                 "--tau2", "70", "--capacity", "100", "--out", str(out)])
    assert code == EXIT_OK
    frame = pd.read_csv(out)
    assert list(frame.columns) == CSV_COLUMNS["hopf-classify"]
    row = frame.iloc[0]
    assert row["kappa_c"] == pytest.approx(1.0, abs=0.005)
    assert row["criticality"] == "Supercritical"
    assert row["beta2"] < 0


def test_hopf_classify_reference_sets(tmp_path):
    out = tmp_path / "reference.csv"
    assert main(["hopf-classify", "--reference", "--out", str(out)]) == EXIT_OK
    frame = pd.read_csv(out).set_index("label")
    assert frame.loc["queue-rho0.9-short-long", "criticality"] == "Supercritical"
    assert frame.loc["queue-rho0.9-10-15", "criticality"] == "Subcritical"
    assert frame.loc["queue-rho0.55-10-20", "criticality"] == "Supercritical"
    assert frame.loc["queue-rho0.9-10-20", "criticality"] == "Subcritical"
    assert frame.loc["packet-with-queue-100-150", "criticality"] == "Subcritical"
    assert frame.loc["packet-without-queue-100-150", "criticality"] == "Supercritical"
    for label in ("queue-rho0.9-short-long", "queue-rho0.9-10-15", "queue-rho0.55-10-20"):
        assert frame.loc[label, "kappa_c"] == pytest.approx(1.0, abs=0.005)


def test_ftilde_curve(tmp_path):
    out = tmp_path / "ftilde.csv"
    assert main(["ftilde-curve", "--points", "1000", "--out", str(out)]) == EXIT_OK
    frame = pd.read_csv(out)
    assert list(frame.columns) == ["theta", "f_tilde"]
    assert len(frame) == 1000
    assert (frame["f_tilde"] < 0).all()


@pytest.mark.parametrize("mode, fixed", [("theta-sweep", "0.9"), ("rho-sweep", "1.0471975511965976")])
def test_mu2_curves(tmp_path, mode, fixed):
    out = tmp_path / "mu2.csv"
    assert main(["mu2-curves", "--mode", mode, "--fixed", fixed, "--points", "25",
                 "--out", str(out), "--no-progress"]) == EXIT_OK
    frame = pd.read_csv(out)
    assert list(frame.columns) == CSV_COLUMNS["mu2-curves"]
    assert len(frame) == 25
    assert set(frame["criticality"]) <= {"Supercritical", "Subcritical", "Degenerate"}


def test_simulate_fluid_with_sampling(tmp_path):
    out = tmp_path / "fluid.csv"
    code = main(["simulate-fluid", "--a", "0.5", "--b", "0.0222", "--tau1", "10", "--tau2", "20",
                 "--sample-every", "10", "--out", str(out)])
    assert code == EXIT_OK
    frame = pd.read_csv(out)
    assert list(frame.columns) == ["t", "R", "p"]
    assert frame["t"].iloc[1] == pytest.approx(10 * 0.2)
    meta = read_meta(out)
    assert meta["outcome"] == "ConvergedToEquilibrium"


def test_simulate_fluid_without_queue_has_two_columns(tmp_path):
    out = tmp_path / "fluid.csv"
    assert main(["simulate-fluid", "--a", "0.5", "--b", "0", "--tau1", "10", "--tau2", "20",
                 "--out", str(out)]) == EXIT_OK
    assert list(pd.read_csv(out).columns) == ["t", "R"]


def test_bifurcation_sweep(tmp_path):
    out = tmp_path / "sweep.csv"
    code = main(["bifurcation-sweep", "--a", "2.16", "--b", "0.0222", "--tau1", "10",
                 "--tau2", "70", "--points", "3", "--t-end", "4000", "--out", str(out),
                 "--no-progress"])
    assert code == EXIT_OK
    frame = pd.read_csv(out)
    assert list(frame.columns) == CSV_COLUMNS["bifurcation-sweep"]
    assert len(frame) == 3
    assert frame["kappa"].is_monotonic_increasing
    assert math.isnan(frame["predicted_amplitude"].iloc[0])
    assert frame["predicted_amplitude"].iloc[-1] > 0
    assert float(read_meta(out)["kappa_c"]) == pytest.approx(1.0, abs=0.005)


def test_simulate_packets(tmp_path):
    out = tmp_path / "packets.csv"
    code = main(["simulate-packets", "--a", "0.3", "--rho-star", "0.9", "--tau1", "10",
                 "--tau2", "20", "--capacity", "10", "--n-sources", "10", "--duration", "1500",
                 "--seed", "4", "--out", str(out)])
    assert code == EXIT_OK
    frame = pd.read_csv(out)
    assert list(frame.columns) == CSV_COLUMNS["simulate-packets"]
    assert read_meta(out)["rng_seed"] == "4"


def test_config_file_with_flag_override(tmp_path):
    config = tmp_path / "run.conf"
    config.write_text("a=2.16\nb=0.0222\ntau1=10\ntau2=70\ncapacity=100\n", encoding="utf-8")
    out = tmp_path / "hopf.csv"
    assert main(["hopf-classify", "--config", str(config), "--a", "0.87", "--tau2", "15",
                 "--out", str(out)]) == EXIT_OK
    row = pd.read_csv(out).iloc[0]
    assert row["a"] == pytest.approx(0.87)
    assert row["tau2"] == pytest.approx(15.0)
    assert row["criticality"] == "Subcritical"


def test_unknown_config_key_is_usage_error(tmp_path):
    config = tmp_path / "bad.conf"
    config.write_text("a=1\nwarp_factor=9\n", encoding="utf-8")
    assert main(["hopf-classify", "--config", str(config)]) == EXIT_USAGE


@pytest.mark.parametrize("argv", [
    ["hopf-classify", "--a", "-1", "--tau1", "10", "--tau2", "20"],
    ["hopf-classify", "--tau1", "10", "--tau2", "20"],
    ["simulate-fluid", "--a", "1", "--tau1", "10", "--tau2", "20", "--dt", "5"],
    ["mu2-curves", "--mode", "rho-sweep", "--fixed", "0"],
    ["no-such-command"],
    ["ftilde-curve", "--points", "many"],
])
def test_invalid_parameters_exit_with_usage_code(tmp_path, argv):
    assert main(argv + ["--out", str(tmp_path / "x.csv")]) == EXIT_USAGE


def test_numerical_failure_exit_code(tmp_path, monkeypatch):
    from src import cli
    from src.errors import IntegrationError

    def explode(config):
        raise IntegrationError("non-finite log-rate", step=3, time=0.6, value=float("nan"))

    monkeypatch.setattr(cli, "integrate", explode)
    code = main(["simulate-fluid", "--a", "0.5", "--b", "0.0222", "--tau1", "10",
                 "--tau2", "20", "--out", str(tmp_path / "x.csv")])
    assert code == EXIT_NUMERICAL


def test_mu2_curves_default_capacity_only_rescales(tmp_path):
    default, unit = tmp_path / "default.csv", tmp_path / "unit.csv"
    argv = ["mu2-curves", "--mode", "rho-sweep", "--points", "15", "--no-progress"]
    assert main(argv + ["--out", str(default)]) == EXIT_OK
    assert main(argv + ["--capacity", "1", "--out", str(unit)]) == EXIT_OK
    first, second = pd.read_csv(default), pd.read_csv(unit)
    assert list(first["criticality"]) == list(second["criticality"])
    assert first["mu2"].to_numpy() == pytest.approx(second["mu2"].to_numpy() / DEFAULT_CAPACITY ** 2,
                                                    rel=1e-8)
