"""CSV parsing, cleaning rules, and hourly power extraction."""

import math
from datetime import date, datetime, timezone
from zoneinfo import ZoneInfo

import pytest

from ntlscan.ingest import (
    CleaningRules,
    EnergyReading,
    IngestError,
    VoltageReading,
    clean,
    hourly_power,
    local_day,
    parse_energy_csv,
    parse_rfc3339,
    parse_voltage_csv,
)

UTC = timezone.utc


def test_rfc3339_parses_z_suffix_and_offsets():
    assert parse_rfc3339("2021-03-01T05:00:00Z") == datetime(2021, 3, 1, 5, tzinfo=UTC)
    assert parse_rfc3339("2021-03-01T06:00:00+02:00") == datetime(2021, 3, 1, 4, tzinfo=UTC)
    # naive timestamps are taken as UTC rather than rejected
    assert parse_rfc3339("2021-03-01T05:00:00") == datetime(2021, 3, 1, 5, tzinfo=UTC)


def test_rfc3339_rejects_garbage():
    with pytest.raises(IngestError, match="bad timestamp"):
        parse_rfc3339("yesterday-ish")


def test_local_day_follows_the_configured_timezone():
    ts = datetime(2021, 1, 10, 23, 30, tzinfo=UTC)
    assert local_day(ts) == date(2021, 1, 10)
    assert local_day(ts, ZoneInfo("Europe/Madrid")) == date(2021, 1, 11)


def test_energy_csv_parses_both_header_variants():
    basic = "meter_id,hour_start,energy_kwh\nm1,2021-01-01T00:00:00Z,1.25\n"
    readings, errors = parse_energy_csv(basic)
    assert errors == []
    assert readings[0].energy_kwh == 1.25 and readings[0].reactive_kvarh is None

    extended = (
        "meter_id,hour_start,energy_kwh,reactive_kvarh\n"
        "m1,2021-01-01T00:00:00Z,1.25,0.41\n"
        "m1,2021-01-01T01:00:00Z,1.5,\n"
    )
    readings, errors = parse_energy_csv(extended)
    assert errors == []
    assert readings[0].reactive_kvarh == 0.41
    assert readings[1].reactive_kvarh is None  # blank cell, not zero


def test_energy_csv_collects_row_errors_with_line_numbers():
    content = (
        "meter_id,hour_start,energy_kwh\n"
        "m1,2021-01-01T00:00:00Z,1.0\n"
        "m1,not-a-time,1.0\n"
        "m1,2021-01-01T02:00:00Z,-3\n"
        "m1,2021-01-01T03:00:00Z,nan\n"
        "m1,2021-01-01T04:00:00Z\n"
        "\n"
        "m1,2021-01-01T05:00:00Z,2.0\n"
    )
    readings, errors = parse_energy_csv(content)
    assert [r.energy_kwh for r in readings] == [1.0, 2.0]
    assert [e.line for e in errors] == [3, 4, 5, 6]


def test_energy_csv_rejects_wrong_header():
    with pytest.raises(IngestError, match="malformed header"):
        parse_energy_csv("meter,when,kwh\nm1,2021-01-01T00:00:00Z,1\n")
    with pytest.raises(IngestError, match="header required"):
        parse_energy_csv("")


def test_voltage_csv_rejects_non_physical_readings():
    content = (
        "meter_id,timestamp,voltage_v\n"
        "m1,2021-01-01T00:10:00Z,231.5\n"
        "m1,2021-01-01T00:20:00Z,0\n"
        "m1,2021-01-01T00:30:00Z,-5\n"
        "m1,2021-01-01T00:40:00Z,inf\n"
    )
    readings, errors = parse_voltage_csv(content)
    assert [r.voltage_v for r in readings] == [231.5]
    assert len(errors) == 3


def test_voltage_csv_optional_phase_column():
    content = (
        "meter_id,timestamp,voltage_v,phase\n"
        "m1,2021-01-01T00:10:00Z,231.5,B\n"
        "m1,2021-01-01T00:20:00Z,229.0,\n"
    )
    readings, errors = parse_voltage_csv(content)
    assert errors == []
    assert readings[0].phase == "B" and readings[1].phase is None


def _e(meter, h, kwh=1.0, minute=0):
    return EnergyReading(meter, datetime(2021, 1, 1 + h // 24, h % 24, minute, tzinfo=UTC), kwh)


def _v(meter, h, volts=230.0, day=1):
    return VoltageReading(meter, datetime(2021, 1, day, h, 30, tzinfo=UTC), volts)


def test_clean_drops_duplicates_keep_first():
    series, report = clean([_e("m1", 0, 1.0), _e("m1", 0, 9.0)], [])
    assert report.duplicates_dropped == 1
    assert series["m1"].energy[0].energy_kwh == 1.0


def test_clean_drops_misaligned_energy_hours():
    series, report = clean([_e("m1", 0), _e("m1", 1, minute=30)], [])
    assert report.misaligned_dropped == 1
    assert len(series["m1"].energy) == 1


def test_clean_applies_the_voltage_plausibility_window():
    rules = CleaningRules()  # 0.7 .. 1.3 of 230 V
    readings = [
        _v("m1", 0, 230.0),
        _v("m1", 1, 230.0 * 0.7),  # boundary survives
        _v("m1", 2, 230.0 * 0.69),
        _v("m1", 3, 230.0 * 1.31),
    ]
    series, report = clean([], readings, rules)
    assert report.out_of_range_dropped == 2
    assert len(series["m1"].voltage) == 2


def test_clean_records_day_gaps():
    readings = [_v("m1", 12, day=1), _v("m1", 12, day=5)]  # days 2-4 missing
    _, report = clean([], readings)
    assert len(report.gaps) == 1
    gap = report.gaps[0]
    assert (gap.start, gap.end) == (date(2021, 1, 2), date(2021, 1, 5))
    assert gap.stream == "voltage"


def test_clean_is_idempotent():
    energy = [_e("m1", h) for h in range(48)]
    voltage = [_v("m1", h) for h in range(8)]
    series, report = clean(energy, voltage)
    assert report.rows_dropped == 0
    again, report2 = clean(
        [r for s in series.values() for r in s.energy],
        [r for s in series.values() for r in s.voltage],
    )
    assert report2.rows_dropped == 0
    assert report2.rows_kept == report.rows_kept


def test_coverage_fractions():
    energy = [_e("m1", h) for h in range(12)]  # 12 of a 12-hour span
    voltage = [_v("m1", h, day=1) for h in range(6)] + [_v("m1", 0, day=2)]
    series, _ = clean(energy, voltage, CleaningRules(min_voltage_samples_per_day=4))
    cov = series["m1"].coverage
    assert cov.energy_hour_fraction == 1.0
    assert cov.voltage_day_fraction == 0.5  # day 1 has 6 samples, day 2 only 1


def test_hourly_power_uses_reactive_when_recorded():
    readings = [
        EnergyReading("m1", datetime(2021, 1, 1, 0, tzinfo=UTC), 2.0, 0.5),
        EnergyReading("m1", datetime(2021, 1, 1, 1, tzinfo=UTC), 2.0, None),
    ]
    series, _ = clean(readings, [])
    power = hourly_power(series["m1"], default_power_factor=0.95)
    p0, q0 = power[datetime(2021, 1, 1, 0, tzinfo=UTC)]
    p1, q1 = power[datetime(2021, 1, 1, 1, tzinfo=UTC)]
    assert (p0, q0) == (2.0, 0.5)
    assert q1 == pytest.approx(2.0 * math.tan(math.acos(0.95)))
    assert len(power) == 2
