"""Smart-meter data ingest: CSV parsing, cleaning, hourly power.

Energy CSV header:  ``meter_id,hour_start,energy_kwh[,reactive_kvarh]``
Voltage CSV header: ``meter_id,timestamp,voltage_v[,phase]``
Timestamps are RFC 3339; everything is normalized to UTC at ingest.
Parsing collects per-row failures instead of failing the file; cleaning
never invents readings, it only drops and reports.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone
from zoneinfo import ZoneInfo

ENERGY_HEADER = ("meter_id", "hour_start", "energy_kwh")
ENERGY_HEADER_Q = ENERGY_HEADER + ("reactive_kvarh",)
VOLTAGE_HEADER = ("meter_id", "timestamp", "voltage_v")
VOLTAGE_HEADER_PHASE = VOLTAGE_HEADER + ("phase",)


class IngestError(ValueError):
    pass


def parse_rfc3339(text: str) -> datetime:
    """Parse an RFC 3339 timestamp to an aware UTC datetime."""
    raw = text.strip()
    if raw.endswith(("Z", "z")):
        raw = raw[:-1] + "+00:00"
    try:
        ts = datetime.fromisoformat(raw)
    except ValueError:
        raise IngestError(f"bad timestamp: {text!r}") from None
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def local_day(ts: datetime, tz: ZoneInfo | timezone = timezone.utc) -> date:
    """Calendar day of a timestamp in the configured day-boundary timezone."""
    return ts.astimezone(tz).date()


@dataclass
class EnergyReading:
    meter_id: str
    hour_start: datetime
    energy_kwh: float
    reactive_kvarh: float | None = None


@dataclass
class VoltageReading:
    meter_id: str
    timestamp: datetime
    voltage_v: float
    phase: str | None = None


@dataclass
class RowError:
    line: int
    message: str


@dataclass
class Gap:
    meter_id: str
    stream: str  # "energy" | "voltage"
    start: date  # first fully missing day
    end: date  # first day with data again (half-open)


@dataclass
class Coverage:
    energy_hour_fraction: float = 0.0
    voltage_day_fraction: float = 0.0


@dataclass
class MeterSeries:
    meter_id: str
    energy: list[EnergyReading] = field(default_factory=list)
    voltage: list[VoltageReading] = field(default_factory=list)
    coverage: Coverage = field(default_factory=Coverage)


@dataclass
class CleaningRules:
    nominal_voltage: float = 230.0
    voltage_low_pu: float = 0.7  # plausibility window, wider than the
    voltage_high_pu: float = 1.3  # analysis band so anomalies survive
    min_gap_days: int = 2
    min_voltage_samples_per_day: int = 4
    day_timezone: str = "UTC"

    @property
    def tz(self) -> ZoneInfo:
        return ZoneInfo(self.day_timezone)


@dataclass
class CleaningReport:
    rows_in: int = 0
    rows_kept: int = 0
    duplicates_dropped: int = 0
    out_of_range_dropped: int = 0
    misaligned_dropped: int = 0
    gaps: list[Gap] = field(default_factory=list)

    @property
    def rows_dropped(self) -> int:
        return self.duplicates_dropped + self.out_of_range_dropped + self.misaligned_dropped


def _read_rows(content: str, base: tuple[str, ...], extended: tuple[str, ...], kind: str):
    reader = csv.reader(io.StringIO(content))
    try:
        header = tuple(h.strip() for h in next(reader))
    except StopIteration:
        raise IngestError(f"{kind} csv: empty document, header required") from None
    if header not in (base, extended):
        raise IngestError(
            f"{kind} csv: malformed header {','.join(header)!r}, "
            f"expected {','.join(base)!r} or {','.join(extended)!r}"
        )
    has_extra = header == extended
    for line_no, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        yield line_no, row, has_extra


def parse_energy_csv(content: str) -> tuple[list[EnergyReading], list[RowError]]:
    """Parse hourly energy rows; per-row failures are collected, not fatal."""
    readings: list[EnergyReading] = []
    errors: list[RowError] = []
    for line_no, row, has_q in _read_rows(content, ENERGY_HEADER, ENERGY_HEADER_Q, "energy"):
        try:
            if len(row) != (4 if has_q else 3):
                raise IngestError(f"expected {4 if has_q else 3} fields, got {len(row)}")
            hour_start = parse_rfc3339(row[1])
            energy = float(row[2])
            if not math.isfinite(energy):
                raise IngestError("energy not finite")
            if energy < 0:
                raise IngestError(f"negative energy {energy}")
            reactive = None
            if has_q and row[3].strip() != "":
                reactive = float(row[3])
                if not math.isfinite(reactive):
                    raise IngestError("reactive energy not finite")
            readings.append(EnergyReading(row[0].strip(), hour_start, energy, reactive))
        except (IngestError, ValueError) as exc:
            errors.append(RowError(line_no, str(exc)))
    return readings, errors


def parse_voltage_csv(content: str) -> tuple[list[VoltageReading], list[RowError]]:
    """Parse instantaneous voltage rows; non-physical values are rejected."""
    readings: list[VoltageReading] = []
    errors: list[RowError] = []
    for line_no, row, has_phase in _read_rows(
        content, VOLTAGE_HEADER, VOLTAGE_HEADER_PHASE, "voltage"
    ):
        try:
            if len(row) != (4 if has_phase else 3):
                raise IngestError(f"expected {4 if has_phase else 3} fields, got {len(row)}")
            ts = parse_rfc3339(row[1])
            volts = float(row[2])
            if not math.isfinite(volts) or volts <= 0:
                raise IngestError(f"non-physical voltage {row[2]!r}")
            phase = row[3].strip() or None if has_phase else None
            readings.append(VoltageReading(row[0].strip(), ts, volts, phase))
        except (IngestError, ValueError) as exc:
            errors.append(RowError(line_no, str(exc)))
    return readings, errors


def _dedup_keep_first(items, key):
    seen: set = set()
    kept = []
    dropped = 0
    for item in items:
        k = key(item)
        if k in seen:
            dropped += 1
            continue
        seen.add(k)
        kept.append(item)
    return kept, dropped


def _day_gaps(meter_id: str, stream: str, days: list[date], min_gap_days: int) -> list[Gap]:
    gaps: list[Gap] = []
    present = sorted(set(days))
    for prev, nxt in zip(present, present[1:]):
        missing = (nxt - prev).days - 1
        if missing >= min_gap_days:
            gaps.append(Gap(meter_id, stream, prev + timedelta(days=1), nxt))
    return gaps


def clean(
    energy: list[EnergyReading],
    voltage: list[VoltageReading],
    rules: CleaningRules | None = None,
) -> tuple[dict[str, MeterSeries], CleaningReport]:
    """Apply the cleaning rules and split readings into per-meter series.

    Duplicates (same meter + timestamp) collapse keep-first; voltages
    outside the plausibility window and energy rows off the hour are
    dropped; day-level gaps longer than the threshold are recorded.
    Idempotent: cleaning already-clean data drops nothing.
    """
    rules = rules or CleaningRules()
    report = CleaningReport(rows_in=len(energy) + len(voltage))
    tz = rules.tz

    energy_kept, dup_e = _dedup_keep_first(energy, lambda r: (r.meter_id, r.hour_start))
    voltage_kept, dup_v = _dedup_keep_first(voltage, lambda r: (r.meter_id, r.timestamp))
    report.duplicates_dropped = dup_e + dup_v

    aligned: list[EnergyReading] = []
    for r in energy_kept:
        if r.hour_start.minute or r.hour_start.second or r.hour_start.microsecond:
            report.misaligned_dropped += 1
        else:
            aligned.append(r)

    v_low = rules.voltage_low_pu * rules.nominal_voltage
    v_high = rules.voltage_high_pu * rules.nominal_voltage
    in_range: list[VoltageReading] = []
    for r in voltage_kept:
        if v_low <= r.voltage_v <= v_high:
            in_range.append(r)
        else:
            report.out_of_range_dropped += 1

    series: dict[str, MeterSeries] = {}
    for r in aligned:
        series.setdefault(r.meter_id, MeterSeries(r.meter_id)).energy.append(r)
    for r in in_range:
        series.setdefault(r.meter_id, MeterSeries(r.meter_id)).voltage.append(r)

    for s in series.values():
        s.energy.sort(key=lambda r: r.hour_start)
        s.voltage.sort(key=lambda r: r.timestamp)
        report.gaps.extend(
            _day_gaps(
                s.meter_id,
                "energy",
                [local_day(r.hour_start, tz) for r in s.energy],
                rules.min_gap_days,
            )
        )
        report.gaps.extend(
            _day_gaps(
                s.meter_id,
                "voltage",
                [local_day(r.timestamp, tz) for r in s.voltage],
                rules.min_gap_days,
            )
        )
        s.coverage = _coverage(s, rules)

    report.rows_kept = sum(len(s.energy) + len(s.voltage) for s in series.values())
    return series, report


def _coverage(series: MeterSeries, rules: CleaningRules) -> Coverage:
    cov = Coverage()
    if series.energy:
        first, last = series.energy[0].hour_start, series.energy[-1].hour_start
        span_hours = int((last - first) / timedelta(hours=1)) + 1
        cov.energy_hour_fraction = len(series.energy) / span_hours
    if series.voltage:
        tz = rules.tz
        per_day: dict[date, int] = {}
        for r in series.voltage:
            d = local_day(r.timestamp, tz)
            per_day[d] = per_day.get(d, 0) + 1
        first_d, last_d = min(per_day), max(per_day)
        n_days = (last_d - first_d).days + 1
        good = sum(1 for n in per_day.values() if n >= rules.min_voltage_samples_per_day)
        cov.voltage_day_fraction = good / n_days
    return cov


def hourly_power(
    series: MeterSeries, default_power_factor: float = 0.95
) -> dict[datetime, tuple[float, float]]:
    """Hourly (P kW, Q kvar) from energy readings.

    P is the hourly mean power (kWh over one hour); Q comes from recorded
    reactive energy when present, otherwise from the configured power
    factor.  Hours without a reading are simply absent.
    """
    tan_phi = math.tan(math.acos(default_power_factor))
    out: dict[datetime, tuple[float, float]] = {}
    for r in series.energy:
        p_kw = r.energy_kwh  # kWh over exactly one hour
        q_kvar = r.reactive_kvarh if r.reactive_kvarh is not None else p_kw * tan_phi
        out[r.hour_start] = (p_kw, q_kvar)
    return out
