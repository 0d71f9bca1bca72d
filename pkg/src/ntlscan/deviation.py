"""Daily voltage statistics and the three deviation indicators.

For every meter and day, each indicator is the simulated minus the
measured daily statistic (min / mean / max) of the meter voltage in p.u.
A cell exists only when both sides have a valid daily statistic; nothing
is ever imputed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date, timedelta, timezone
from typing import Iterable, Mapping, Sequence

import numpy as np

from .grid_model import Network
from .ingest import MeterSeries, local_day
from .powerflow import VoltageSolution, meter_voltage

INDICATORS = ("dv_mean", "dv_min", "dv_max")

DEFAULT_BIN_WIDTH = 0.005  # resolves the p.u. spreads seen in practice


@dataclass
class DailyVoltageStats:
    meter_id: str
    day: date
    v_min: float
    v_mean: float
    v_max: float
    sample_count: int
    source: str  # "simulated" | "measured"


StatsMap = dict[tuple[str, date], DailyVoltageStats]


def daily_stats_simulated(
    solutions: Sequence[VoltageSolution],
    network: Network,
    tz: timezone | object = timezone.utc,
) -> StatsMap:
    """Per meter and day: min/mean/max over converged hourly meter voltages."""
    acc: dict[tuple[str, date], list[float]] = {}
    meter_ids = [m.meter_id for m in network.meters]
    for sol in solutions:
        if not sol.converged:
            continue
        day = local_day(sol.timestamp, tz)
        for meter_id in meter_ids:
            acc.setdefault((meter_id, day), []).append(
                meter_voltage(sol, network, meter_id)
            )
    return {
        key: DailyVoltageStats(
            meter_id=key[0],
            day=key[1],
            v_min=min(vals),
            v_mean=sum(vals) / len(vals),
            v_max=max(vals),
            sample_count=len(vals),
            source="simulated",
        )
        for key, vals in acc.items()
    }


def daily_stats_measured(
    series: MeterSeries,
    min_samples: int = 4,
    nominal_voltage: float = 230.0,
    tz: timezone | object = timezone.utc,
) -> StatsMap:
    """Per day: min/mean/max over the day's instantaneous samples in p.u.

    Days with fewer than ``min_samples`` readings produce no entry; a
    handful of spread samples still brackets the daily extremes crudely,
    fewer makes them meaningless.
    """
    acc: dict[date, list[float]] = {}
    for r in series.voltage:
        acc.setdefault(local_day(r.timestamp, tz), []).append(r.voltage_v / nominal_voltage)
    out: StatsMap = {}
    for day, vals in acc.items():
        if len(vals) < min_samples:
            continue
        out[(series.meter_id, day)] = DailyVoltageStats(
            meter_id=series.meter_id,
            day=day,
            v_min=min(vals),
            v_mean=sum(vals) / len(vals),
            v_max=max(vals),
            sample_count=len(vals),
            source="measured",
        )
    return out


@dataclass
class IndicatorMatrix:
    """Dense meter x day layers for the three indicators; NaN marks missing."""

    meters: list[str]
    days: list[date]
    layers: dict[str, np.ndarray]

    def __post_init__(self) -> None:
        for name, layer in self.layers.items():
            if layer.shape != (len(self.meters), len(self.days)):
                raise ValueError(f"layer {name}: shape {layer.shape} does not match axes")

    @property
    def meter_pos(self) -> dict[str, int]:
        return {m: i for i, m in enumerate(self.meters)}

    def present_count(self, indicator: str) -> int:
        return int(np.sum(~np.isnan(self.layers[indicator])))

    def row(self, indicator: str, meter_id: str) -> np.ndarray:
        return self.layers[indicator][self.meter_pos[meter_id]]


def _day_axis(keys: Iterable[tuple[str, date]]) -> list[date]:
    days = [d for _, d in keys]
    if not days:
        return []
    first, last = min(days), max(days)
    return [first + timedelta(days=i) for i in range((last - first).days + 1)]


def compute_indicators(
    sim: StatsMap, meas: StatsMap, meters: Sequence[str] | None = None
) -> IndicatorMatrix:
    """Simulated minus measured daily stats wherever both sides are present.

    The day axis is the contiguous calendar range covering both inputs;
    rows follow ``meters`` when given, otherwise the sorted union of
    meters seen on either side.
    """
    all_keys = list(sim.keys()) + list(meas.keys())
    days = _day_axis(all_keys)
    if meters is None:
        meters = sorted({m for m, _ in all_keys})
    meters = list(meters)
    day_pos = {d: j for j, d in enumerate(days)}
    meter_pos = {m: i for i, m in enumerate(meters)}
    shape = (len(meters), len(days))
    layers = {name: np.full(shape, np.nan) for name in INDICATORS}
    for key, s in sim.items():
        m = meas.get(key)
        if m is None:
            continue
        meter_id, day = key
        if meter_id not in meter_pos:
            continue
        i, j = meter_pos[meter_id], day_pos[day]
        layers["dv_mean"][i, j] = s.v_mean - m.v_mean
        layers["dv_min"][i, j] = s.v_min - m.v_min
        layers["dv_max"][i, j] = s.v_max - m.v_max
    return IndicatorMatrix(meters=meters, days=days, layers=layers)


@dataclass
class IndicatorSummary:
    average: float
    std: float  # population
    count: int


@dataclass
class SummaryStats:
    per_indicator: dict[str, IndicatorSummary] = field(default_factory=dict)


def summary_statistics(matrix: IndicatorMatrix) -> SummaryStats:
    """Average and population standard deviation over present cells."""
    out = SummaryStats()
    for name in INDICATORS:
        layer = matrix.layers[name]
        present = layer[~np.isnan(layer)]
        if present.size == 0:
            out.per_indicator[name] = IndicatorSummary(math.nan, math.nan, 0)
        else:
            out.per_indicator[name] = IndicatorSummary(
                average=float(present.mean()),
                std=float(present.std()),  # ddof=0
                count=int(present.size),
            )
    return out


@dataclass
class Histogram:
    indicator: str
    bin_width: float
    edges: np.ndarray  # len(counts) + 1, integer multiples of bin_width
    counts: np.ndarray


def histogram(
    matrix: IndicatorMatrix, indicator: str, bin_width: float = DEFAULT_BIN_WIDTH
) -> Histogram:
    """Counts over symmetric bins whose edges are multiples of bin_width.

    A value exactly on an edge falls into the upper bin.
    """
    if not bin_width > 0:
        raise ValueError("bin_width must be > 0")
    layer = matrix.layers[indicator]
    values = layer[~np.isnan(layer)]
    if values.size == 0:
        edges = np.array([-bin_width, 0.0, bin_width])
        return Histogram(indicator, bin_width, edges, np.zeros(2, dtype=int))
    q = values / bin_width
    idx = np.floor(q).astype(int)
    # nudge values that only miss the upper bin through float error
    idx[q - idx > 1 - 1e-9] += 1
    half_span = int(max(idx.max() + 1, -idx.min(), 1))
    counts = np.zeros(2 * half_span, dtype=int)
    np.add.at(counts, idx + half_span, 1)
    edges = np.arange(-half_span, half_span + 1) * bin_width
    return Histogram(indicator, bin_width, edges, counts)


# --- serialization ---------------------------------------------------------


def layer_to_csv(matrix: IndicatorMatrix, indicator: str) -> str:
    """One layer as CSV: rows = meters, columns = ISO dates, empty = missing.

    Values are written with full float precision so the file round-trips
    losslessly.
    """
    layer = matrix.layers[indicator]
    lines = ["meter_id," + ",".join(d.isoformat() for d in matrix.days)]
    for i, meter_id in enumerate(matrix.meters):
        cells = ["" if np.isnan(v) else repr(float(v)) for v in layer[i]]
        lines.append(meter_id + "," + ",".join(cells))
    return "\n".join(lines) + "\n"


def layer_from_csv(content: str) -> tuple[list[str], list[date], np.ndarray]:
    lines = [ln for ln in content.splitlines() if ln]
    header = lines[0].split(",")
    if header[0] != "meter_id":
        raise ValueError("matrix csv: first column must be meter_id")
    days = [date.fromisoformat(d) for d in header[1:]]
    meters: list[str] = []
    rows: list[list[float]] = []
    for ln in lines[1:]:
        cells = ln.split(",")
        meters.append(cells[0])
        rows.append([math.nan if c == "" else float(c) for c in cells[1:]])
    return meters, days, np.asarray(rows).reshape(len(meters), len(days))


def matrix_from_csv_layers(by_indicator: Mapping[str, str]) -> IndicatorMatrix:
    """Rebuild an IndicatorMatrix from per-indicator CSV documents."""
    meters: list[str] | None = None
    days: list[date] | None = None
    layers: dict[str, np.ndarray] = {}
    for name in INDICATORS:
        m, d, values = layer_from_csv(by_indicator[name])
        if meters is None:
            meters, days = m, d
        elif m != meters or d != days:
            raise ValueError("matrix csv layers disagree on axes")
        layers[name] = values
    assert meters is not None and days is not None
    return IndicatorMatrix(meters=meters, days=days, layers=layers)


def matrix_to_document(matrix: IndicatorMatrix) -> dict:
    """JSON-able form of the matrix for the service layer."""
    return {
        "meters": list(matrix.meters),
        "days": [d.isoformat() for d in matrix.days],
        "layers": {
            name: [
                [None if np.isnan(v) else float(v) for v in row]
                for row in matrix.layers[name]
            ]
            for name in INDICATORS
        },
    }
