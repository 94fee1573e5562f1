import random
from datetime import datetime

from hypothesis import given, settings, strategies as st

from daqwear.config import (
    BATTERY_INTERVAL_MS,
    CONFIG_FIELDS,
    Config,
    REASON_MISSING,
    REASON_OUT_OF_RANGE,
    REASON_UNPARSABLE,
    parse_config,
    sensor_groups,
    serialize_config,
    serialize_metafile,
)
from helpers import config_text

# the configuration schema restated independently: (lo, hi, zero allowed)
RANGES = {
    "accel_interval_ms": (10, 1000, True),
    "linear_accel_interval_ms": (10, 1000, True),
    "gyro_interval_ms": (10, 1000, True),
    "baro_interval_ms": (10, 1000, True),
    "gps_interval_s": (1, 10, True),
    "privacy_lat_deg": (-90.0, 90.0, False),
    "privacy_lon_deg": (-180.0, 180.0, False),
    "privacy_radius_m": (10, 1000, True),
    "write_interval_s": (0.01, 10.0, False),
}

EXPECTED_DEFAULTS = {
    "watch_id": "0000",
    "accel_interval_ms": 25,
    "linear_accel_interval_ms": 25,
    "gyro_interval_ms": 25,
    "baro_interval_ms": 100,
    "gps_interval_s": 1,
    "privacy_lat_deg": 52.169311,
    "privacy_lon_deg": 4.456711,
    "privacy_radius_m": 100,
    "write_interval_s": 0.05,
}


def assert_in_range(config):
    for name, (lo, hi, zero_ok) in RANGES.items():
        v = getattr(config, name)
        assert (zero_ok and v == 0) or lo <= v <= hi, f"{name}={v}"
    assert 0 < len(config.watch_id) <= 16 and config.watch_id.isalnum()


def test_defaults_match_schema():
    for name, want in EXPECTED_DEFAULTS.items():
        assert getattr(Config(), name) == want


def test_valid_value_passes_through_unchanged():
    config, report = parse_config(config_text(accel_interval_ms=25))
    assert config.accel_interval_ms == 25
    assert report.clean()


def test_out_of_range_is_replaced_by_default_not_clamped():
    config, report = parse_config(config_text(accel_interval_ms=2000))
    assert config.accel_interval_ms == 25
    (entry,) = report.entries
    assert (entry.field_name, entry.raw_text, entry.corrected_value, entry.reason) == (
        "accel_interval_ms", "2000", 25, REASON_OUT_OF_RANGE)


def test_latitude_out_of_range():
    config, report = parse_config(config_text(privacy_lat_deg=100.0))
    assert config.privacy_lat_deg == 52.169311
    assert report.entries[0].reason == REASON_OUT_OF_RANGE


def test_empty_file_gives_all_defaults_with_missing_entries():
    config, report = parse_config(b"")
    assert config == Config()
    assert len(report.entries) == len(CONFIG_FIELDS)
    assert all(e.reason == REASON_MISSING for e in report.entries)


def test_unparsable_values_fall_back_to_defaults():
    config, report = parse_config(config_text(gyro_interval_ms="soon", write_interval_s="x"))
    assert config.gyro_interval_ms == 25
    assert config.write_interval_s == 0.05
    assert {e.reason for e in report.entries} == {REASON_UNPARSABLE}


def test_nan_and_inf_rejected():
    config, _ = parse_config(config_text(privacy_lat_deg="nan", write_interval_s="inf"))
    assert config.privacy_lat_deg == 52.169311
    assert config.write_interval_s == 0.05


def test_watch_id_rules():
    assert parse_config(config_text(watch_id="D8F8"))[0].watch_id == "D8F8"
    assert parse_config(config_text(watch_id=""))[0].watch_id == "0000"
    assert parse_config(config_text(watch_id="x" * 17))[0].watch_id == "0000"
    assert parse_config(config_text(watch_id="bad token"))[0].watch_id == "0000"
    cfg, report = parse_config(config_text(watch_id="Ab3"))
    assert cfg.watch_id == "Ab3" and report.clean()


def test_unknown_keys_reported_but_ignored():
    config, report = parse_config(config_text() + "mystery_key=1\n")
    assert report.clean()
    assert report.unknown_keys == ["mystery_key"]
    assert config == parse_config(config_text())[0]


def test_comments_blank_lines_and_duplicates():
    text = "# comment\n\n" + config_text() + "accel_interval_ms=50\n"
    config, report = parse_config(text)
    assert config.accel_interval_ms == 50  # last duplicate wins
    assert report.clean()


def test_off_sentinels_accepted():
    config, report = parse_config(config_text(gps_interval_s=0, privacy_radius_m=0, accel_interval_ms=0))
    assert config.gps_interval_s == 0
    assert config.privacy_radius_m == 0
    assert config.accel_interval_ms == 0
    assert report.clean()


def test_fuzz_totality_seeded():
    rng = random.Random(20220601)
    for _ in range(2000):
        blob = bytes(rng.randrange(256) for _ in range(rng.randrange(0, 200)))
        config, _ = parse_config(blob)
        assert_in_range(config)


@given(st.binary(max_size=400))
@settings(max_examples=300)
def test_fuzz_totality_property(blob):
    config, _ = parse_config(blob)
    assert_in_range(config)


def interval_strategy(lo, hi):
    return st.one_of(st.just(0), st.integers(lo, hi))


valid_configs = st.builds(
    Config,
    watch_id=st.from_regex(r"[0-9A-Za-z]{1,16}", fullmatch=True),
    accel_interval_ms=interval_strategy(10, 1000),
    linear_accel_interval_ms=interval_strategy(10, 1000),
    gyro_interval_ms=interval_strategy(10, 1000),
    baro_interval_ms=interval_strategy(10, 1000),
    gps_interval_s=interval_strategy(1, 10),
    privacy_lat_deg=st.floats(-90.0, 90.0, allow_nan=False),
    privacy_lon_deg=st.floats(-180.0, 180.0, allow_nan=False),
    privacy_radius_m=interval_strategy(10, 1000),
    write_interval_s=st.floats(0.01, 10.0, allow_nan=False),
)


@given(valid_configs)
@settings(max_examples=200)
def test_metafile_roundtrip_lossless(config):
    text = serialize_metafile(config, "1.2.3", 42, datetime(2022, 6, 1, 9, 30))
    parsed, report = parse_config(text)
    assert parsed == config
    assert report.clean()
    assert report.unknown_keys == []


def test_metafile_contents():
    text = serialize_metafile(Config(watch_id="D8F8"), "1.0.0", 1, datetime(2022, 6, 1, 9, 30))
    assert "write_interval_s=0.05" in text
    assert "package_version=1.0.0" in text
    assert "person_id=001" in text
    assert "start_time=2022-06-01T09:30:00" in text


def test_metafile_preserves_off_sentinel():
    config, _ = parse_config(config_text(gps_interval_s=0))
    text = serialize_metafile(config, "1.0.0", 1, datetime(2022, 6, 1, 9, 30))
    assert "gps_interval_s=0" in text.splitlines()
    assert parse_config(text)[0].gps_interval_s == 0


@given(st.binary(max_size=300))
@settings(max_examples=200)
def test_parse_is_idempotent_through_serialization(blob):
    config, _ = parse_config(blob)
    again, report = parse_config(serialize_config(config))
    assert again == config
    assert report.clean()


def brute_force_groups(config):
    """Independent grouping oracle: a dict keyed by interval, canonical order."""
    order = ("accel", "linear_accel", "gyro", "baro", "gps", "battery")
    intervals = {}
    for kind in ("accel", "linear_accel", "gyro", "baro"):
        v = getattr(config, f"{kind}_interval_ms")
        if v:
            intervals[kind] = v
    if config.gps_interval_s:
        intervals["gps"] = config.gps_interval_s * 1000
    intervals["battery"] = BATTERY_INTERVAL_MS
    out = {}
    for kind in order:
        if kind in intervals:
            out.setdefault(intervals[kind], []).append(kind)
    return [(iv, tuple(out[iv])) for iv in sorted(out)]


def test_groups_default_partition():
    groups = sensor_groups(Config())
    assert [(g.interval_ms, g.members) for g in groups] == [
        (25, ("accel", "linear_accel", "gyro")),
        (100, ("baro",)),
        (1000, ("gps", "battery")),
    ]


def test_groups_mixed_intervals_against_oracle():
    config, _ = parse_config(config_text(
        accel_interval_ms=25, gyro_interval_ms=50, linear_accel_interval_ms=0,
        baro_interval_ms=0, gps_interval_s=0))
    groups = sensor_groups(config)
    assert [(g.interval_ms, g.members) for g in groups] == [
        (25, ("accel",)), (50, ("gyro",)), (1000, ("battery",))]
    assert [(g.interval_ms, g.members) for g in groups] == brute_force_groups(config)


def test_groups_all_sensors_off_leaves_battery():
    config, _ = parse_config(config_text(
        accel_interval_ms=0, linear_accel_interval_ms=0, gyro_interval_ms=0,
        baro_interval_ms=0, gps_interval_s=0))
    groups = sensor_groups(config)
    assert [(g.interval_ms, g.members) for g in groups] == [(1000, ("battery",))]


@given(valid_configs)
@settings(max_examples=200)
def test_groups_match_oracle_and_partition_properties(config):
    groups = sensor_groups(config)
    assert [(g.interval_ms, g.members) for g in groups] == brute_force_groups(config)
    seen = [k for g in groups for k in g.members]
    assert len(seen) == len(set(seen))  # each sensor in exactly one group
    intervals = [g.interval_ms for g in groups]
    assert len(intervals) == len(set(intervals)) and intervals == sorted(intervals)
