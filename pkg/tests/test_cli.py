import os

import pytest

from daqwear.cli import main, tree_digest
from helpers import config_text, find_file


def write_config(tmp_path, **overrides):
    path = tmp_path / "config.txt"
    path.write_text(config_text(**overrides))
    return str(path)


def run_cli(*argv):
    return main(list(argv))


def test_clean_requires_three_force_flags(capsys):
    assert run_cli("clean") == 2
    assert run_cli("clean", "--force") == 2
    assert run_cli("clean", "--force", "--force") == 2
    err = capsys.readouterr().err
    assert "three times" in err


def test_usage_error_exits_two():
    with pytest.raises(SystemExit) as exc:
        run_cli("estimate", "--hours", "12")  # missing required flags
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        run_cli("no-such-command")
    assert exc.value.code == 2


def test_estimate_reports_fit(tmp_path, capsys):
    config = write_config(tmp_path, accel_interval_ms=20, linear_accel_interval_ms=0,
                          gyro_interval_ms=0, baro_interval_ms=0, gps_interval_s=0)
    assert run_cli("estimate", "--hours", "12", "--days", "7", "--row-bytes", "33",
                   "--config", config) == 0
    out = capsys.readouterr().out
    assert "498960000 bytes (499.0 MB)" in out
    assert "fits in 500 MB: yes" in out


def test_estimate_reports_overflow(tmp_path, capsys):
    config = write_config(tmp_path, accel_interval_ms=10, linear_accel_interval_ms=10,
                          gyro_interval_ms=10, baro_interval_ms=0, gps_interval_s=0)
    assert run_cli("estimate", "--hours", "12", "--days", "7", "--row-bytes", "33",
                   "--config", config) == 0
    assert "fits in 500 MB: no" in capsys.readouterr().out


def test_sim_run_twice_is_byte_identical(tmp_path, capsys):
    for sub in ("one", "two"):
        assert run_cli("sim", "run", "--scenario", "walk", "--seed", "3",
                       "--duration", "5", "--out", str(tmp_path / sub)) == 0
    assert tree_digest(str(tmp_path / "one" / "data")) == \
        tree_digest(str(tmp_path / "two" / "data"))
    out = capsys.readouterr().out
    assert out.count("tree sha256:") == 2


def test_sim_run_honors_config_and_person(tmp_path, capsys):
    config = write_config(tmp_path, watch_id="AA11")
    assert run_cli("sim", "run", "--scenario", "rest", "--seed", "1", "--duration", "2",
                   "--out", str(tmp_path / "dev"), "--config", config, "--person", "12") == 0
    files = find_file(str(tmp_path / "dev" / "data"), ".csv")
    assert files and all("AA11" in os.path.basename(f) for f in files)
    assert all(os.path.basename(f).startswith("P012_") for f in files)


def test_sim_run_is_silent_without_debug(tmp_path, capsys):
    assert run_cli("sim", "run", "--scenario", "rest", "--seed", "1", "--duration", "1",
                   "--out", str(tmp_path / "dev")) == 0
    assert capsys.readouterr().err == ""


def test_sim_run_debug_logs_to_stderr(tmp_path, capsys):
    assert run_cli("--debug", "sim", "run", "--scenario", "rest", "--seed", "1",
                   "--duration", "1", "--out", str(tmp_path / "dev")) == 0
    assert "session" in capsys.readouterr().err
    from daqwear.service import configure_logging

    configure_logging(False)


def test_scrub_and_density_cli(tmp_path, capsys):
    assert run_cli("sim", "run", "--scenario", "walk", "--seed", "2", "--duration", "10",
                   "--out", str(tmp_path / "dev")) == 0
    data = str(tmp_path / "dev" / "data")
    assert run_cli("scrub", "--in", data, "--out", str(tmp_path / "clean")) == 0
    out = capsys.readouterr().out
    assert "removed" in out
    assert run_cli("density", str(tmp_path / "clean")) == 0
    out = capsys.readouterr().out
    assert "density=" in out


def test_density_cli_fails_cleanly_on_empty_dir(tmp_path, capsys):
    os.makedirs(tmp_path / "empty", exist_ok=True)
    assert run_cli("density", str(tmp_path / "empty")) == 1
    assert "no measurement files" in capsys.readouterr().err


def test_gstats_cli(tmp_path, capsys):
    assert run_cli("sim", "run", "--scenario", "rest", "--seed", "4", "--duration", "10",
                   "--out", str(tmp_path / "dev")) == 0
    (motion,) = find_file(str(tmp_path / "dev"), "accel-linearaccel-gyro")
    assert run_cli("gstats", motion) == 0
    assert "mean_G=" in capsys.readouterr().out


def test_status_against_unreachable_device_fails_with_one(tmp_path, capsys):
    assert run_cli("status", "--endpoint", "127.0.0.1:1") == 1
    assert "error:" in capsys.readouterr().err


def test_pull_and_clean_against_live_device(tmp_path, capsys):
    from daqwear.bridge import BridgeServer
    from daqwear.sensorsim import Scenario
    from daqwear.service import DeviceRuntime, Restart
    from helpers import make_home

    home = make_home(tmp_path, config_text())
    runtime = DeviceRuntime(home, Scenario(name="rest", seed=1))
    runtime.post(Restart(3), at_ms=0)
    runtime.advance_to(3_000)
    server = BridgeServer(runtime, port=0, ws_port=0)
    server.start()
    try:
        endpoint = f"127.0.0.1:{server.port}"
        assert run_cli("status", "--endpoint", endpoint) == 0
        assert "state=Measuring" in capsys.readouterr().out
        out_dir = str(tmp_path / "pulled")
        assert run_cli("pull", "--out", out_dir, "--endpoint", endpoint) == 0
        assert os.path.isdir(os.path.join(out_dir, "P003"))
        assert run_cli("clean", "--force", "--force", "--force", "--endpoint", endpoint) == 0
        assert "removed" in capsys.readouterr().out
        assert runtime.data_files() == []
    finally:
        server.stop()


def test_pull_with_scrub_composes_both_operations(tmp_path, capsys):
    from daqwear.bridge import BridgeServer
    from daqwear.sensorsim import Scenario
    from daqwear.service import DeviceRuntime, Restart
    from helpers import make_home

    home = make_home(tmp_path, config_text())
    runtime = DeviceRuntime(home, Scenario(name="walk", seed=8))  # leaves the fence: P rows
    runtime.run_schedule([(0, Restart(1))], 12_000)
    server = BridgeServer(runtime, port=0, ws_port=0)
    server.start()
    try:
        out_dir = str(tmp_path / "public")
        assert run_cli("pull", "--out", out_dir, "--scrub",
                       "--endpoint", f"127.0.0.1:{server.port}") == 0
        out = capsys.readouterr().out
        assert "scrubbed" in out and "private rows" in out
        for path in find_file(out_dir, ".csv"):
            with open(path) as fh:
                assert not any(line.startswith("P,") for line in fh)
        assert find_file(out_dir, "_meta.txt")  # metafiles ride along
    finally:
        server.stop()


def test_push_config_cli_reports_corrections(tmp_path, capsys):
    from daqwear.bridge import BridgeServer
    from daqwear.sensorsim import Scenario
    from daqwear.service import DeviceRuntime
    from helpers import make_home

    home = make_home(tmp_path, config_text())
    runtime = DeviceRuntime(home, Scenario(name="rest"))
    server = BridgeServer(runtime, port=0, ws_port=0)
    server.start()
    try:
        bad = tmp_path / "bad.txt"
        bad.write_text(config_text(accel_interval_ms=5000) + "mystery=1\n")
        assert run_cli("push-config", str(bad), "--endpoint",
                       f"127.0.0.1:{server.port}") == 0
        out = capsys.readouterr().out
        assert "corrected accel_interval_ms" in out
        assert "mystery" in out
    finally:
        server.stop()


def test_endpoint_env_variable_is_honored(tmp_path, capsys, monkeypatch):
    from daqwear.bridge import BridgeServer
    from daqwear.sensorsim import Scenario
    from daqwear.service import DeviceRuntime
    from helpers import make_home

    home = make_home(tmp_path, config_text())
    runtime = DeviceRuntime(home, Scenario(name="rest"))
    server = BridgeServer(runtime, port=0, ws_port=0)
    server.start()
    try:
        monkeypatch.setenv("DAQWEAR_ENDPOINT", f"127.0.0.1:{server.port}")
        assert run_cli("status") == 0
        assert "state=BootedIdle" in capsys.readouterr().out
    finally:
        server.stop()
