"""Synthetic networks, loads, fraud injection, and measurement emission.

Everything here exists to give the pipeline a ground truth it can be
scored against: generated networks pass validation, generated
measurements use the exact ingest CSV schemas, and fraud injections are
recorded in a manifest so a test can check who should have been caught.

The measurement model separates two time scales on purpose.  Energy is
reported as hourly means (what the simulation will consume), while
voltage readings are instantaneous: each hour is split into sub-intervals
with independently perturbed loads, a ground-truth load flow runs per
sub-interval, and each emitted sample reads one sub-interval plus meter
noise.  That gap between hourly-mean simulation and instantaneous
reality is what creates the positive bias of the min-voltage indicator
on honest meters.

All generators are pure functions of their arguments and a seed
(numpy's PCG64 generator; the algorithm name is recorded in manifests,
since streams are only reproducible with the same generator).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from datetime import date, datetime, timedelta, timezone
from pathlib import Path
from typing import Sequence

import numpy as np

from .grid_model import (
    DEFAULT_NOMINAL_VOLTAGE,
    Branch,
    Bus,
    Connection,
    Meter,
    Network,
    PhaseConfig,
    assign_feeders,
    dump_network,
    to_per_unit,
)
from .powerflow import SolverConfig, SweepPlan, meter_voltages_array, sweep_solve

RNG_ALGORITHM = "numpy-pcg64"

START_DAY = date(2021, 1, 1)  # dataset epoch; arbitrary but fixed for reproducibility

# Per-segment impedance bounds (ohms); service drops sit at the stiff end
# so that a service-point injection is distinguishable from its upstream
# neighbourhood.
MAINS_R_RANGE = (0.020, 0.050)
SERVICE_R_RANGE = (0.020, 0.050)
X_OVER_R_RANGE = (0.3, 1.0)
_OHM_PER_M = 3.2e-4  # 95 mm2 Al overhead bundle, for cosmetic lengths

_CHAIN_BIAS = 0.8  # probability a mains bus extends the previous one
_TAIL_GUARD = 0.72  # max shared-path fraction another stub may have with the deep one
_SINGLE_PHASE_SHARE = 0.7
_CONTRACTS_1P = (3.45, 4.6, 5.75, 6.9, 9.2)  # kW, common LV contract steps
_CONTRACTS_3P = (10.39, 13.86, 17.32)

_SOLVE_CHUNK = 256  # ground-truth snapshots per sweep batch

NIGHT_HOURS = frozenset((22, 23, 0, 1, 2, 3, 4, 5))

SCHEDULES = ("continuous", "nightly", "random_hours")

UTC = timezone.utc


@dataclass(frozen=True)
class FraudScenario:
    """One unmetered-consumption injection on one meter.

    The injected demand is either a constant ``unreported_kw`` or a
    fraction of the actual load (``unreported_fraction`` f means actual
    consumption is actual/(1-f) while the meter keeps reporting the
    unscaled series).  ``schedule`` restricts injection to a subset of
    hours inside the [start_day, end_day) window.
    """

    meter_id: str
    start_day: date
    end_day: date
    unreported_kw: float | None = None
    unreported_fraction: float | None = None
    schedule: str = "continuous"
    hour_probability: float | None = None  # random_hours only
    seed: int | None = None  # random_hours only

    def __post_init__(self) -> None:
        if not self.start_day < self.end_day:
            raise ValueError("start_day must precede end_day")
        if (self.unreported_kw is None) == (self.unreported_fraction is None):
            raise ValueError("exactly one of unreported_kw / unreported_fraction")
        if self.unreported_kw is not None and not self.unreported_kw > 0:
            raise ValueError("unreported_kw must be > 0")
        if self.unreported_fraction is not None and not 0 < self.unreported_fraction < 1:
            raise ValueError("unreported_fraction must be in (0, 1)")
        if self.schedule not in SCHEDULES:
            raise ValueError(f"unknown schedule: {self.schedule}")
        if self.schedule == "random_hours":
            if self.hour_probability is None or not 0 < self.hour_probability <= 1:
                raise ValueError("random_hours needs hour_probability in (0, 1]")
            if self.seed is None:
                raise ValueError("random_hours needs a seed")


@dataclass(frozen=True)
class SamplingModel:
    """When voltage readings happen.

    One reading per meter and hour on average; a reading is dropped with
    ``dropout_probability`` and otherwise lands at a uniformly jittered
    instant inside its hour (or exactly on the hour with jitter off).
    """

    reads_per_hour_mean: float = 1.0
    dropout_probability: float = 0.3
    jitter: bool = True

    def __post_init__(self) -> None:
        if not 0 <= self.dropout_probability <= 1:
            raise ValueError("dropout_probability must be in [0, 1]")
        if not self.reads_per_hour_mean >= 0:
            raise ValueError("reads_per_hour_mean must be >= 0")


@dataclass(frozen=True)
class NoiseModel:
    """How far instantaneous reality strays from hourly bookkeeping."""

    intra_hour_load_cv: float = 0.15
    meter_voltage_noise_sd: float = 0.002  # p.u.

    def __post_init__(self) -> None:
        if self.intra_hour_load_cv < 0 or self.meter_voltage_noise_sd < 0:
            raise ValueError("noise parameters must be nonnegative")


@dataclass
class LoadSeries:
    """Hourly per-meter load arrays, row order matching ``meters``.

    ``start`` is the UTC midnight of the first day; column h covers
    [start + h hours, start + h+1 hours).
    """

    meters: tuple[str, ...]
    start: datetime
    p_kw: np.ndarray  # [meter, hour]
    q_kvar: np.ndarray  # [meter, hour]

    def __post_init__(self) -> None:
        if self.p_kw.shape != self.q_kvar.shape:
            raise ValueError("p/q shape mismatch")
        if self.p_kw.shape[0] != len(self.meters):
            raise ValueError("row count must match meter count")
        if self.start.utcoffset() != timedelta(0):
            raise ValueError("series start must be UTC")
        if self.start.hour or self.start.minute or self.start.second:
            raise ValueError("series must start at midnight")

    @property
    def n_hours(self) -> int:
        return self.p_kw.shape[1]

    @property
    def n_days(self) -> int:
        return self.n_hours // 24

    @property
    def start_day(self) -> date:
        return self.start.date()

    def hour_start(self, h: int) -> datetime:
        return self.start + timedelta(hours=h)

    def day_hour_range(self, start_day: date, end_day: date) -> tuple[int, int]:
        """Column range [h0, h1) covering the [start_day, end_day) window."""
        h0 = (start_day - self.start_day).days * 24
        h1 = (end_day - self.start_day).days * 24
        if h0 < 0 or h1 > self.n_hours:
            raise ValueError(
                f"window [{start_day}, {end_day}) outside series "
                f"[{self.start_day}, {self.start_day + timedelta(days=self.n_days)})"
            )
        return h0, h1

    def row(self, meter_id: str) -> int:
        try:
            return self.meters.index(meter_id)
        except ValueError:
            raise ValueError(f"unknown meter: {meter_id}") from None

    def copy(self) -> "LoadSeries":
        return LoadSeries(self.meters, self.start, self.p_kw.copy(), self.q_kvar.copy())


@dataclass
class ScenarioLoads:
    """What actually flowed versus what the meters reported."""

    actual: LoadSeries
    metered: LoadSeries


def _split_counts(total: int, weights: Sequence[float]) -> list[int]:
    """Integer split of ``total`` proportional to weights (largest remainder)."""
    quotas = [total * w / sum(weights) for w in weights]
    counts = [math.floor(q) for q in quotas]
    remainders = sorted(
        range(len(weights)), key=lambda i: (quotas[i] - counts[i], -i), reverse=True
    )
    for i in remainders[: total - sum(counts)]:
        counts[i] += 1
    return counts


def _isolate_deep_stub(
    rng: np.random.Generator,
    attach: list[int],
    single_phase: Sequence[bool],
    parent: Sequence[int],
    r_path: Sequence[float],
    guard: float = _TAIL_GUARD,
) -> None:
    """Clear the tail behind the deepest single-phase service stub, in place.

    A service drop hung near the end of a long run shares almost the
    whole run's voltage drop with everything else on that run, which
    makes service points electrically indistinguishable from each other.
    Every other stub whose mains path overlaps the deepest single-phase
    stub's path by more than ``guard`` (as a resistance fraction) is
    moved to an attachment bus outside that overlap, so each feeder
    keeps one terminal whose deep tail is its own.  Rural feeders look
    like this anyway: the remotest farm is alone on its spur.
    """
    owners = [s for s, sp in enumerate(single_phase) if sp]
    if not owners:
        return
    deepest = max(owners, key=lambda s: r_path[attach[s]])
    cut = guard * r_path[attach[deepest]]
    top = attach[deepest]
    while parent[top] >= 0 and r_path[parent[top]] >= cut:
        top = parent[top]
    children: dict[int, list[int]] = {}
    for i, p in enumerate(parent):
        children.setdefault(p, []).append(i)
    guarded: set[int] = set()
    frontier = [top]
    while frontier:
        b = frontier.pop()
        guarded.add(b)
        frontier.extend(children.get(b, ()))
    outside = [i for i in range(len(parent)) if i not in guarded]
    if not outside:
        return
    for s, b in enumerate(attach):
        if s != deepest and b in guarded:
            attach[s] = outside[int(rng.integers(0, len(outside)))]


def generate_network(
    n_feeders: int,
    buses_per_feeder: float,
    meter_fraction: float,
    seed: int,
    nominal_phase_voltage: float = DEFAULT_NOMINAL_VOLTAGE,
) -> Network:
    """Random radial LV network: slack busbar feeding n_feeders subtrees.

    Each feeder is a mains tree (chain-biased, occasional laterals) with
    metered service drops hanging off it; every meter gets its own
    terminal bus unless the meter fraction is so high that meters must
    also sit on mains buses directly.  The deepest single-phase terminal
    of each feeder gets its tail to itself (see _isolate_deep_stub).
    Impedances are uniform in the module's per-segment bounds.
    Deterministic in ``seed``.
    """
    if n_feeders < 1 or buses_per_feeder <= 0:
        raise ValueError("n_feeders and buses_per_feeder must be positive")
    if not 0 < meter_fraction <= 1:
        raise ValueError("meter_fraction must be in (0, 1]")
    rng = np.random.default_rng(seed)

    total_buses = round(n_feeders * buses_per_feeder)
    if total_buses < n_feeders:
        raise ValueError("buses_per_feeder too small to give every feeder a bus")
    sizes = _split_counts(total_buses, [1.0] * n_feeders)
    meter_counts = _split_counts(round(meter_fraction * total_buses), sizes)

    slack_id = "TR"
    buses: list[Bus] = [Bus(slack_id, PhaseConfig.THREE_PHASE, nominal_phase_voltage)]
    branches: list[Branch] = []
    meters: list[Meter] = []
    n_mains = n_service = 0

    def add_branch(from_id: str, to_id: str, r_range: tuple[float, float]) -> float:
        r = float(rng.uniform(*r_range))
        x = r * float(rng.uniform(*X_OVER_R_RANGE))
        branches.append(
            Branch(
                branch_id=f"L{len(branches):03d}",
                from_bus=from_id,
                to_bus=to_id,
                r_ohm=r,
                x_ohm=x,
                length_m=round(r / _OHM_PER_M, 1),
            )
        )
        return r

    def add_meter(bus_id: str, connection: Connection) -> None:
        pool = _CONTRACTS_3P if connection is Connection.THREE_PHASE else _CONTRACTS_1P
        meters.append(
            Meter(
                meter_id=f"meter_{len(meters) + 1}",
                bus_id=bus_id,
                connection=connection,
                contracted_power_kw=float(rng.choice(pool)),
            )
        )

    for f in range(n_feeders):
        size, want_meters = sizes[f], meter_counts[f]
        mains_count = max(1, size - want_meters)
        service_count = size - mains_count

        mains_ids: list[str] = []
        mains_parent: list[int] = []  # index into mains_ids, -1 at the slack
        mains_r: list[float] = []  # ohms from slack along the mains
        for i in range(mains_count):
            bus_id = f"B{n_mains:03d}"
            n_mains += 1
            buses.append(Bus(bus_id, PhaseConfig.THREE_PHASE, nominal_phase_voltage))
            if i == 0:
                r = add_branch(slack_id, bus_id, MAINS_R_RANGE)
                mains_parent.append(-1)
                mains_r.append(r)
            else:
                j = i - 1 if rng.random() < _CHAIN_BIAS else int(rng.integers(0, i))
                r = add_branch(mains_ids[j], bus_id, MAINS_R_RANGE)
                mains_parent.append(j)
                mains_r.append(mains_r[j] + r)
            mains_ids.append(bus_id)

        attach = [int(rng.integers(0, mains_count)) for _ in range(service_count)]
        single = [bool(rng.random() < _SINGLE_PHASE_SHARE) for _ in range(service_count)]
        _isolate_deep_stub(rng, attach, single, mains_parent, mains_r)

        for s in range(service_count):
            bus_id = f"Terminal_{n_service:03d}"
            n_service += 1
            if single[s]:
                phase = PhaseConfig(f"single_phase_{'ABC'[int(rng.integers(0, 3))]}")
                connection = Connection.SINGLE_PHASE
            else:
                phase = PhaseConfig.THREE_PHASE
                connection = Connection.THREE_PHASE
            buses.append(Bus(bus_id, phase, nominal_phase_voltage))
            add_branch(mains_ids[attach[s]], bus_id, SERVICE_R_RANGE)
            add_meter(bus_id, connection)

        # meters that did not fit on service drops go on mains buses,
        # deepest first (feeder ends are where customers concentrate)
        spill = want_meters - service_count
        if spill > 0:
            order = sorted(range(mains_count), key=lambda i: -mains_r[i])
            for i in order[:spill]:
                add_meter(mains_ids[i], Connection.THREE_PHASE)

    network = Network(
        buses=tuple(buses),
        branches=tuple(branches),
        meters=tuple(meters),
        slack_buses=(slack_id,),
        slack_voltage=1.0,
    )
    network.feeder_labels.update(assign_feeders(network))
    return network


def _day_weekdays(start: date, n_days: int) -> np.ndarray:
    return np.array([(start + timedelta(days=d)).weekday() for d in range(n_days)])


def generate_baseline_loads(
    network: Network,
    n_days: int,
    seed: int,
    start_day: date = START_DAY,
) -> LoadSeries:
    """Honest household demand: diurnal shape, weekly rhythm, noise.

    Each meter draws a lognormal base scale, a fixed weekend factor, and
    multiplicative hour-to-hour noise on top of a double-peaked diurnal
    profile; reactive power follows a per-meter power factor.
    """
    if n_days < 1:
        raise ValueError("n_days must be >= 1")
    rng = np.random.default_rng(seed)
    meter_ids = tuple(m.meter_id for m in network.meters)
    n_meters = len(meter_ids)
    n_hours = 24 * n_days

    hour = np.tile(np.arange(24), n_days)
    shape = (
        0.38
        + 0.28 * np.exp(-((hour - 8.0) ** 2) / (2 * 2.2**2))
        + 0.72 * np.exp(-((hour - 20.0) ** 2) / (2 * 2.4**2))
    )
    weekend = np.repeat(_day_weekdays(start_day, n_days) >= 5, 24)

    base_kw = rng.lognormal(mean=math.log(0.45), sigma=0.55, size=n_meters)
    weekend_factor = rng.uniform(0.95, 1.35, size=n_meters)
    sigma = math.sqrt(math.log1p(0.35**2))  # hour-to-hour cv 0.35, mean 1
    noise = rng.lognormal(mean=-sigma**2 / 2, sigma=sigma, size=(n_meters, n_hours))

    p_kw = base_kw[:, None] * shape[None, :] * noise
    p_kw[:, weekend] *= weekend_factor[:, None]

    power_factor = rng.uniform(0.90, 0.98, size=n_meters)
    tan_phi = np.tan(np.arccos(power_factor))
    q_kvar = p_kw * tan_phi[:, None]

    return LoadSeries(
        meters=meter_ids,
        start=datetime.combine(start_day, datetime.min.time(), tzinfo=UTC),
        p_kw=p_kw,
        q_kvar=q_kvar,
    )


_INJECTION_TAN_PHI = math.tan(math.acos(0.95))  # constant-kW frauds draw at pf 0.95


def _schedule_mask(series: LoadSeries, scenario: FraudScenario) -> np.ndarray:
    """Boolean mask over the full hour axis of hours the scenario is on."""
    h0, h1 = series.day_hour_range(scenario.start_day, scenario.end_day)
    mask = np.zeros(series.n_hours, dtype=bool)
    mask[h0:h1] = True
    if scenario.schedule == "nightly":
        hour_of_day = np.arange(series.n_hours) % 24
        mask &= np.isin(hour_of_day, list(NIGHT_HOURS))
    elif scenario.schedule == "random_hours":
        draw = np.random.default_rng(scenario.seed).random(series.n_hours)
        mask &= draw < scenario.hour_probability
    return mask


def inject_fraud(
    actual: LoadSeries, scenarios: Sequence[FraudScenario]
) -> ScenarioLoads:
    """Add unreported demand to the actual flows, meters keep reporting.

    The metered series is the input unchanged; the actual series gains
    the scheduled injections, so actual - metered is exactly the stolen
    energy.  Scenarios whose day windows overlap on one meter are
    rejected regardless of schedule.
    """
    windows: dict[str, list[tuple[date, date]]] = {}
    for sc in scenarios:
        actual.row(sc.meter_id)
        for lo, hi in windows.get(sc.meter_id, []):
            if sc.start_day < hi and lo < sc.end_day:
                raise ValueError(f"overlapping fraud windows on {sc.meter_id}")
        windows.setdefault(sc.meter_id, []).append((sc.start_day, sc.end_day))

    metered = actual.copy()
    boosted = actual.copy()
    for sc in scenarios:
        m = actual.row(sc.meter_id)
        mask = _schedule_mask(actual, sc)
        if sc.unreported_kw is not None:
            boosted.p_kw[m, mask] += sc.unreported_kw
            boosted.q_kvar[m, mask] += sc.unreported_kw * _INJECTION_TAN_PHI
        else:
            gain = 1.0 / (1.0 - sc.unreported_fraction)
            boosted.p_kw[m, mask] *= gain
            boosted.q_kvar[m, mask] *= gain
    return ScenarioLoads(actual=boosted, metered=metered)


def _ground_truth_voltages(
    network: Network,
    plan: SweepPlan,
    series: LoadSeries,
    noise: NoiseModel,
    sub_intervals: int,
    rng: np.random.Generator,
    solver: SolverConfig,
) -> np.ndarray:
    """Meter voltage magnitudes [meter, hour * sub_intervals], p.u.

    Sub-interval loads are the hourly loads times independent lognormal
    factors with the configured coefficient of variation (factor 1
    exactly when the cv is 0).  Non-convergence aborts: synthetic truth
    must not silently contain garbage.
    """
    n_meters, n_hours = series.p_kw.shape
    n_snap = n_hours * sub_intervals
    s_va = (series.p_kw + 1j * series.q_kvar) * 1e3  # [meter, hour]

    if noise.intra_hour_load_cv > 0:
        sigma = math.sqrt(math.log1p(noise.intra_hour_load_cv**2))
        factors = rng.lognormal(
            mean=-sigma**2 / 2, sigma=sigma, size=(n_meters, n_hours, sub_intervals)
        )
    else:
        factors = np.ones((n_meters, n_hours, sub_intervals))
    s_sub = (s_va[:, :, None] * factors).reshape(n_meters, n_snap)

    bus_idx = np.array([plan.meter_bus[m] for m in series.meters], dtype=np.intp)
    weights = np.stack([plan.meter_phase_weights[m] for m in series.meters])  # [M, 3]
    s_base = network.s_base_per_phase

    out = np.empty((n_meters, n_snap))
    n_buses = len(plan.bus_ids)
    for lo in range(0, n_snap, _SOLVE_CHUNK):
        hi = min(lo + _SOLVE_CHUNK, n_snap)
        s_pu = np.zeros((n_buses, 3, hi - lo), dtype=np.complex128)
        for m in range(n_meters):
            s_pu[bus_idx[m]] += weights[m][:, None] * (s_sub[m, lo:hi] / s_base)
        v, _, converged, _ = sweep_solve(plan, s_pu, network.slack_voltage, solver)
        if not converged.all():
            bad = lo + int(np.flatnonzero(~converged)[0])
            ts = series.hour_start(bad // sub_intervals)
            raise RuntimeError(
                f"ground-truth load flow did not converge at {ts.isoformat()} "
                f"sub-interval {bad % sub_intervals}"
            )
        out[:, lo:hi] = meter_voltages_array(network, plan, np.abs(v), series.meters)
    return out


def _rfc3339(ts: datetime) -> str:
    return ts.isoformat().replace("+00:00", "Z")


def synthesize_measurements(
    network: Network,
    loads: ScenarioLoads | LoadSeries,
    sampling: SamplingModel,
    noise: NoiseModel,
    seed: int,
    sub_intervals_per_hour: int = 4,
    solver: SolverConfig | None = None,
) -> tuple[str, str]:
    """Emit (energy CSV, voltage CSV) for a load history.

    Energy rows are the metered hourly series verbatim (full float
    precision, so a noise-free dataset survives the CSV round trip
    bit-exactly).  Voltage rows come from ground-truth load flows on the
    actual series at sub-hourly resolution, sampled per the sampling
    model and perturbed per the noise model.  A bare LoadSeries means
    metered and actual coincide (no fraud).
    """
    if isinstance(loads, LoadSeries):
        loads = ScenarioLoads(actual=loads, metered=loads)
    if loads.actual.meters != loads.metered.meters:
        raise ValueError("actual and metered series disagree on meters")
    if sub_intervals_per_hour < 1:
        raise ValueError("sub_intervals_per_hour must be >= 1")

    net_pu = network if network.is_per_unit else to_per_unit(network)
    plan = SweepPlan.build(net_pu)
    rng = np.random.default_rng(seed)
    series = loads.actual
    n_meters, n_hours = series.p_kw.shape

    truth = _ground_truth_voltages(
        net_pu, plan, series, noise, sub_intervals_per_hour, rng,
        solver or SolverConfig(),
    )

    nominal = np.array(
        [net_pu.bus(net_pu.meter(m).bus_id).nominal_phase_voltage for m in series.meters]
    )

    energy_lines = ["meter_id,hour_start,energy_kwh,reactive_kvarh"]
    hour_stamps = [_rfc3339(series.hour_start(h)) for h in range(n_hours)]
    for m, meter_id in enumerate(series.meters):
        # plain-float repr is the shortest lossless decimal form
        p_row = loads.metered.p_kw[m].tolist()
        q_row = loads.metered.q_kvar[m].tolist()
        for h in range(n_hours):
            energy_lines.append(
                f"{meter_id},{hour_stamps[h]},{p_row[h]!r},{q_row[h]!r}"
            )

    reads = max(0, round(sampling.reads_per_hour_mean))
    voltage_lines = ["meter_id,timestamp,voltage_v"]
    for _ in range(reads):
        kept = rng.random((n_meters, n_hours)) >= sampling.dropout_probability
        frac = (
            rng.random((n_meters, n_hours))
            if sampling.jitter
            else np.zeros((n_meters, n_hours))
        )
        if noise.meter_voltage_noise_sd > 0:
            eps = rng.normal(0.0, noise.meter_voltage_noise_sd, (n_meters, n_hours))
        else:
            eps = np.zeros((n_meters, n_hours))
        sub = np.minimum(
            (frac * sub_intervals_per_hour).astype(np.intp), sub_intervals_per_hour - 1
        )
        for m, meter_id in enumerate(series.meters):
            hours = np.flatnonzero(kept[m])
            if hours.size == 0:
                continue
            v_pu = truth[m, hours * sub_intervals_per_hour + sub[m, hours]] + eps[m, hours]
            volts = (v_pu * nominal[m]).tolist()
            for h, volt in zip(hours.tolist(), volts):
                ts = series.hour_start(h) + timedelta(seconds=frac[m, h] * 3600.0)
                voltage_lines.append(f"{meter_id},{_rfc3339(ts)},{volt!r}")

    return "\n".join(energy_lines) + "\n", "\n".join(voltage_lines) + "\n"


def _path_impedance(plan: SweepPlan) -> np.ndarray:
    """Total series impedance (p.u., complex) from the slack to each bus."""
    z = np.zeros(len(plan.bus_ids), dtype=complex)
    for level in plan.levels[1:]:
        z[level] = z[plan.parent[level]] + plan.z[level]
    return z


def _path_resistance(plan: SweepPlan) -> np.ndarray:
    """Total series resistance (p.u.) from the slack to each bus."""
    return _path_impedance(plan).real


_LIFT_TARGET = 0.055  # p.u. extra voltage drop each planned fraud aims to cause


def plan_frauds(
    network: Network,
    baseline: LoadSeries,
    n_frauds: int,
    seed: int,
    fraction_range: tuple[float, float] = (0.25, 0.80),
    start_day: date | None = None,
    end_day: date | None = None,
) -> list[FraudScenario]:
    """Plan continuous constant frauds on distinct feeders' remote tails.

    Each fraud lands on the electrically remotest single-phase meter of
    its feeder: the method keys on voltage drop, and feeder-end theft is
    both the detectable case and the one field crews actually find.  The
    constant demand is sized so the predicted voltage drop it adds at
    the service point is roughly the same for every fraud (a jittered
    first-order I*Z estimate), then clamped to ``fraction_range`` times
    the feeder's mean total load.  Equalised drops keep planted cases
    comparable across feeders of very different depth and load: a fraud
    also lifts the indicator of everything sharing its path, and a weak
    fraud on one feeder would otherwise rank below the mere neighbours
    of a strong fraud on another.
    """
    if n_frauds < 1:
        raise ValueError("n_frauds must be >= 1")
    net_pu = network if network.is_per_unit else to_per_unit(network)
    plan = SweepPlan.build(net_pu)
    z_path = _path_impedance(plan)
    # constant-kW injections draw at pf 0.95, so reactance contributes too
    eff_drop = z_path.real + _INJECTION_TAN_PHI * z_path.imag
    labels = network.feeder_labels or assign_feeders(network)

    by_feeder: dict[int, list[Meter]] = {}
    for meter in network.meters:
        by_feeder.setdefault(labels[meter.bus_id], []).append(meter)
    if n_frauds > len(by_feeder):
        raise ValueError(f"need {n_frauds} distinct feeders, network has {len(by_feeder)}")

    rng = np.random.default_rng(seed)
    feeders = sorted(by_feeder)
    chosen = rng.choice(len(feeders), size=n_frauds, replace=False)
    s_base_kw = net_pu.s_base_per_phase / 1e3

    scenarios: list[FraudScenario] = []
    for pick in sorted(chosen):
        members = by_feeder[feeders[pick]]
        rows = [baseline.row(m.meter_id) for m in members]
        feeder_mean_kw = float(baseline.p_kw[rows].sum(axis=0).mean())

        pool = [m for m in members if m.connection is Connection.SINGLE_PHASE] or members
        target = max(pool, key=lambda m: eff_drop[plan.index[m.bus_id]])

        want_kw = _LIFT_TARGET * s_base_kw / float(eff_drop[plan.index[target.bus_id]])
        frac = want_kw / feeder_mean_kw * float(rng.uniform(0.92, 1.08))
        frac = min(max(frac, fraction_range[0]), fraction_range[1])
        scenarios.append(
            FraudScenario(
                meter_id=target.meter_id,
                start_day=start_day or baseline.start_day,
                end_day=end_day or baseline.start_day + timedelta(days=baseline.n_days),
                unreported_kw=frac * feeder_mean_kw,
            )
        )
    return scenarios


@dataclass
class DatasetSpec:
    """Everything needed to regenerate one synthetic dataset."""

    n_feeders: int = 12
    buses_per_feeder: float = 57.4
    meter_fraction: float = 0.39
    n_days: int = 60
    seed: int = 0
    start_day: date = START_DAY
    sampling: SamplingModel = field(default_factory=SamplingModel)
    noise: NoiseModel = field(default_factory=NoiseModel)
    sub_intervals_per_hour: int = 4
    n_frauds: int = 0
    fraud_fraction_range: tuple[float, float] = (0.25, 0.80)
    scenarios: tuple[FraudScenario, ...] | None = None  # overrides n_frauds


def _scenario_record(sc: FraudScenario) -> dict:
    rec = asdict(sc)
    rec["start_day"] = sc.start_day.isoformat()
    rec["end_day"] = sc.end_day.isoformat()
    return rec


def make_dataset(spec: DatasetSpec, out_dir: str | Path) -> dict:
    """Generate and write network.grid, energy.csv, voltage.csv, manifest.json.

    Stage seeds derive from the spec seed through a seed sequence, so one
    integer pins the whole dataset.  Returns the manifest (also written),
    which records models, counts, and the injected fraud ground truth.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    s_net, s_load, s_meas, s_fraud = (
        int(x) for x in np.random.SeedSequence(spec.seed).generate_state(4)
    )

    network = generate_network(
        spec.n_feeders, spec.buses_per_feeder, spec.meter_fraction, s_net
    )
    baseline = generate_baseline_loads(network, spec.n_days, s_load, spec.start_day)

    if spec.scenarios is not None:
        scenarios = list(spec.scenarios)
    elif spec.n_frauds > 0:
        scenarios = plan_frauds(
            network, baseline, spec.n_frauds, s_fraud,
            fraction_range=spec.fraud_fraction_range,
        )
    else:
        scenarios = []
    loads = inject_fraud(baseline, scenarios)

    energy_csv, voltage_csv = synthesize_measurements(
        network, loads, spec.sampling, spec.noise, s_meas,
        sub_intervals_per_hour=spec.sub_intervals_per_hour,
    )

    manifest = {
        "generator": {"rng": RNG_ALGORITHM, "seed": spec.seed},
        "network": {
            "n_feeders": spec.n_feeders,
            "buses_per_feeder": spec.buses_per_feeder,
            "meter_fraction": spec.meter_fraction,
            "buses": len(network.buses),
            "branches": len(network.branches),
            "meters": len(network.meters),
        },
        "days": spec.n_days,
        "start_day": spec.start_day.isoformat(),
        "sampling": asdict(spec.sampling),
        "noise": asdict(spec.noise),
        "sub_intervals_per_hour": spec.sub_intervals_per_hour,
        "frauds": [_scenario_record(sc) for sc in scenarios],
        "files": {
            "network": "network.grid",
            "energy": "energy.csv",
            "voltage": "voltage.csv",
        },
    }

    (out / "network.grid").write_text(dump_network(network), encoding="utf-8")
    (out / "energy.csv").write_text(energy_csv, encoding="utf-8")
    (out / "voltage.csv").write_text(voltage_csv, encoding="utf-8")
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=1) + "\n", encoding="utf-8"
    )
    return manifest
