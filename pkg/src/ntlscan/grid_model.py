"""Radial LV network model: loading, validation, per-unit conversion, feeders.

The network file is a JSON document with four top-level keys::

    buses:    [{"id", "phases", "v_nominal"}, ...]
    branches: [{"id", "from", "to", "r_ohm", "x_ohm", "length_m"}, ...]
    meters:   [{"id", "bus", "connection"}, ...]
    slack:    {"bus", "v_pu"}

Key names are fixed; unknown keys are rejected.  Impedances are per-phase
ohms in the file and may be annotated in per-unit via :func:`to_per_unit`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from typing import Any, Iterable

DEFAULT_NOMINAL_VOLTAGE = 230.0  # phase-to-neutral on a 400 V network
DEFAULT_S_BASE_PER_PHASE = 10_000.0  # VA; puts household loads near 0.1-1 p.u.

#: Reserved feeder label for the slack bus itself.
SLACK_FEEDER = -1


class GridModelError(ValueError):
    """Base error for network model problems."""


class NetworkFormatError(GridModelError):
    """Raised when a network document cannot be parsed against the schema."""


class NetworkValidationError(GridModelError):
    """Raised when a parsed network violates a structural invariant."""


class PhaseConfig(str, Enum):
    THREE_PHASE = "three_phase"
    SINGLE_PHASE_A = "single_phase_A"
    SINGLE_PHASE_B = "single_phase_B"
    SINGLE_PHASE_C = "single_phase_C"

    @property
    def phase_index(self) -> int | None:
        """0/1/2 for A/B/C single-phase configs, None for three-phase."""
        return {
            PhaseConfig.SINGLE_PHASE_A: 0,
            PhaseConfig.SINGLE_PHASE_B: 1,
            PhaseConfig.SINGLE_PHASE_C: 2,
        }.get(self)


class Connection(str, Enum):
    SINGLE_PHASE = "single_phase"
    THREE_PHASE = "three_phase"


@dataclass
class Bus:
    """A network node (terminal).

    Attributes:
        bus_id: unique identifier, e.g. "Terminal_072".
        phase_config: which phases the bus serves.
        nominal_phase_voltage: phase-to-neutral volts, voltage base for p.u.
    """

    bus_id: str
    phase_config: PhaseConfig = PhaseConfig.THREE_PHASE
    nominal_phase_voltage: float = DEFAULT_NOMINAL_VOLTAGE


@dataclass
class Branch:
    """A series line segment between two buses.

    Impedance is per phase in ohms; ``r_pu``/``x_pu`` are filled by
    :func:`to_per_unit` and are None on freshly loaded networks.
    """

    branch_id: str
    from_bus: str
    to_bus: str
    r_ohm: float
    x_ohm: float
    length_m: float | None = None
    r_pu: float | None = None
    x_pu: float | None = None


@dataclass
class Meter:
    """A smart meter attached to a bus.

    Single-phase meters draw on the phase declared by their bus; a
    single-phase meter on a three-phase bus is treated as phase A.
    """

    meter_id: str
    bus_id: str
    connection: Connection = Connection.SINGLE_PHASE
    contracted_power_kw: float | None = None


@dataclass
class Network:
    """Radial LV network digital twin.

    Immutable by convention after construction: all pipeline code treats a
    Network as read-only, so instances are safe to share across threads.
    ``slack_buses`` normally holds exactly one id; other counts are
    representable so that :func:`validate` can report them.
    """

    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...]
    meters: tuple[Meter, ...]
    slack_buses: tuple[str, ...]
    slack_voltage: float = 1.0
    s_base_per_phase: float = DEFAULT_S_BASE_PER_PHASE
    feeder_labels: dict[str, int] = field(default_factory=dict)

    @property
    def slack_bus(self) -> str:
        if len(self.slack_buses) != 1:
            raise NetworkValidationError(
                f"exactly one slack bus required, found {len(self.slack_buses)}"
            )
        return self.slack_buses[0]

    @cached_property
    def bus_index(self) -> dict[str, Bus]:
        # first occurrence wins; duplicates are caught by validate()
        index: dict[str, Bus] = {}
        for bus in self.buses:
            index.setdefault(bus.bus_id, bus)
        return index

    @cached_property
    def meter_index(self) -> dict[str, Meter]:
        index: dict[str, Meter] = {}
        for meter in self.meters:
            index.setdefault(meter.meter_id, meter)
        return index

    @cached_property
    def adjacency(self) -> dict[str, list[tuple[str, Branch]]]:
        adj: dict[str, list[tuple[str, Branch]]] = {b.bus_id: [] for b in self.buses}
        for br in self.branches:
            if br.from_bus in adj:
                adj[br.from_bus].append((br.to_bus, br))
            if br.to_bus in adj:
                adj[br.to_bus].append((br.from_bus, br))
        return adj

    def bus(self, bus_id: str) -> Bus:
        try:
            return self.bus_index[bus_id]
        except KeyError:
            raise GridModelError(f"unknown bus: {bus_id}") from None

    def meter(self, meter_id: str) -> Meter:
        try:
            return self.meter_index[meter_id]
        except KeyError:
            raise GridModelError(f"unknown meter: {meter_id}") from None

    @property
    def is_per_unit(self) -> bool:
        return all(br.r_pu is not None and br.x_pu is not None for br in self.branches)


@dataclass
class CheckResult:
    name: str
    passed: bool
    offenders: tuple[str, ...] = ()
    detail: str = ""

    def message(self) -> str:
        who = f" [{', '.join(self.offenders)}]" if self.offenders else ""
        return f"{self.name}: {self.detail or ('ok' if self.passed else 'failed')}{who}"


@dataclass
class ValidationReport:
    checks: list[CheckResult]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def summary(self) -> str:
        lines = [f"{'PASS' if c.passed else 'FAIL'}  {c.message()}" for c in self.checks]
        return "\n".join(lines)


def _duplicates(ids: Iterable[str]) -> tuple[str, ...]:
    seen: set[str] = set()
    dups: list[str] = []
    for i in ids:
        if i in seen and i not in dups:
            dups.append(i)
        seen.add(i)
    return tuple(dups)


def validate(network: Network) -> ValidationReport:
    """Check every structural invariant, reporting offenders per check.

    A passing report is equivalent to the Network invariants all holding:
    unique ids, real branch endpoints, nonnegative impedances, exactly one
    slack, connectivity, radiality, and meters on reachable buses.
    """
    checks: list[CheckResult] = []
    bus_ids = [b.bus_id for b in network.buses]
    known = set(bus_ids)

    dup_buses = _duplicates(bus_ids)
    checks.append(CheckResult("unique_bus_ids", not dup_buses, dup_buses, "duplicate bus id"))
    dup_branches = _duplicates(br.branch_id for br in network.branches)
    checks.append(
        CheckResult("unique_branch_ids", not dup_branches, dup_branches, "duplicate branch id")
    )
    dup_meters = _duplicates(m.meter_id for m in network.meters)
    checks.append(
        CheckResult("unique_meter_ids", not dup_meters, dup_meters, "duplicate meter id")
    )

    bad_nominal = tuple(b.bus_id for b in network.buses if not b.nominal_phase_voltage > 0)
    checks.append(
        CheckResult(
            "nominal_voltage_positive", not bad_nominal, bad_nominal, "nominal voltage must be > 0"
        )
    )

    dangling = tuple(
        br.branch_id
        for br in network.branches
        if br.from_bus not in known or br.to_bus not in known
    )
    checks.append(
        CheckResult("branch_endpoints_exist", not dangling, dangling, "endpoint bus not found")
    )
    self_loops = tuple(br.branch_id for br in network.branches if br.from_bus == br.to_bus)
    checks.append(CheckResult("no_self_loops", not self_loops, self_loops, "from == to"))
    neg_z = tuple(
        br.branch_id for br in network.branches if br.r_ohm < 0 or br.x_ohm < 0
    )
    checks.append(
        CheckResult("nonnegative_impedance", not neg_z, neg_z, "negative resistance or reactance")
    )

    slack_ok = len(network.slack_buses) == 1 and network.slack_buses[0] in known
    slack_detail = (
        "ok"
        if slack_ok
        else f"exactly one slack bus in the network required, found {len(network.slack_buses)}"
        + ("" if all(s in known for s in network.slack_buses) else " (unknown bus)")
    )
    checks.append(
        CheckResult("single_slack", slack_ok, tuple(network.slack_buses), slack_detail)
    )

    # connectivity and radiality, from the slack when it is usable
    if slack_ok:
        reachable = _reachable_from(network, network.slack_buses[0])
        unreachable = tuple(sorted(known - reachable))
        checks.append(
            CheckResult("connected", not unreachable, unreachable, "disconnected bus")
        )
    else:
        reachable = set()
        checks.append(CheckResult("connected", False, (), "no usable slack to traverse from"))
    radial = len(network.branches) == len(network.buses) - 1
    checks.append(
        CheckResult(
            "radial",
            radial,
            (),
            "ok" if radial else f"not radial: {len(network.branches)} branches for "
            f"{len(network.buses)} buses",
        )
    )

    meter_dangling = tuple(
        m.meter_id for m in network.meters if m.bus_id not in known or m.bus_id not in reachable
    )
    checks.append(
        CheckResult(
            "meters_on_reachable_buses",
            not meter_dangling,
            meter_dangling,
            "meter attached to unknown or unreachable bus",
        )
    )
    by_bus: dict[str, list[str]] = {}
    for m in network.meters:
        by_bus.setdefault(m.bus_id, []).append(m.meter_id)
    crowded = tuple(mid for ids in by_bus.values() if len(ids) > 1 for mid in ids)
    checks.append(
        CheckResult("one_meter_per_bus", not crowded, crowded, "multiple meters on one bus")
    )

    return ValidationReport(checks)


def _reachable_from(network: Network, root: str) -> set[str]:
    seen = {root}
    stack = [root]
    adj = network.adjacency
    while stack:
        here = stack.pop()
        for neighbor, _ in adj.get(here, ()):
            if neighbor not in seen:
                seen.add(neighbor)
                stack.append(neighbor)
    return seen


# --- file schema -----------------------------------------------------------

_BUS_KEYS = {"id", "phases", "v_nominal"}
_BRANCH_KEYS = {"id", "from", "to", "r_ohm", "x_ohm", "length_m"}
_METER_KEYS = {"id", "bus", "connection"}
_SLACK_KEYS = {"bus", "v_pu"}
_TOP_KEYS = {"buses", "branches", "meters", "slack"}


def _require_keys(record: dict[str, Any], allowed: set[str], required: set[str], where: str) -> None:
    unknown = set(record) - allowed
    if unknown:
        raise NetworkFormatError(f"{where}: unknown key(s) {sorted(unknown)}")
    missing = required - set(record)
    if missing:
        raise NetworkFormatError(f"{where}: missing key(s) {sorted(missing)}")


def load_network(document: str) -> Network:
    """Parse and validate a network file, returning a valid Network.

    Raises NetworkFormatError on malformed input and NetworkValidationError
    naming the first violated invariant otherwise.
    """
    try:
        raw = json.loads(document)
    except json.JSONDecodeError as exc:
        raise NetworkFormatError(f"malformed network file: {exc}") from exc
    if not isinstance(raw, dict):
        raise NetworkFormatError("malformed network file: top level must be an object")
    _require_keys(raw, _TOP_KEYS, _TOP_KEYS, "network file")

    buses = []
    for i, rec in enumerate(raw["buses"]):
        _require_keys(rec, _BUS_KEYS, {"id"}, f"buses[{i}]")
        try:
            phases = PhaseConfig(rec.get("phases", "three_phase"))
        except ValueError:
            raise NetworkFormatError(
                f"buses[{i}]: unknown phases value {rec.get('phases')!r}"
            ) from None
        buses.append(
            Bus(
                bus_id=str(rec["id"]),
                phase_config=phases,
                nominal_phase_voltage=float(rec.get("v_nominal", DEFAULT_NOMINAL_VOLTAGE)),
            )
        )

    branches = []
    for i, rec in enumerate(raw["branches"]):
        _require_keys(rec, _BRANCH_KEYS, {"id", "from", "to", "r_ohm", "x_ohm"}, f"branches[{i}]")
        branches.append(
            Branch(
                branch_id=str(rec["id"]),
                from_bus=str(rec["from"]),
                to_bus=str(rec["to"]),
                r_ohm=float(rec["r_ohm"]),
                x_ohm=float(rec["x_ohm"]),
                length_m=None if rec.get("length_m") is None else float(rec["length_m"]),
            )
        )

    meters = []
    for i, rec in enumerate(raw["meters"]):
        _require_keys(rec, _METER_KEYS, {"id", "bus"}, f"meters[{i}]")
        try:
            connection = Connection(rec.get("connection", "single_phase"))
        except ValueError:
            raise NetworkFormatError(
                f"meters[{i}]: unknown connection value {rec.get('connection')!r}"
            ) from None
        meters.append(Meter(meter_id=str(rec["id"]), bus_id=str(rec["bus"]), connection=connection))

    slack_rec = raw["slack"]
    if not isinstance(slack_rec, dict):
        raise NetworkFormatError("slack: must be an object")
    _require_keys(slack_rec, _SLACK_KEYS, {"bus"}, "slack")

    network = Network(
        buses=tuple(buses),
        branches=tuple(branches),
        meters=tuple(meters),
        slack_buses=(str(slack_rec["bus"]),),
        slack_voltage=float(slack_rec.get("v_pu", 1.0)),
    )
    report = validate(network)
    if not report.ok:
        first = report.failures[0]
        raise NetworkValidationError(first.message())
    network.feeder_labels.update(assign_feeders(network))
    return network


def dump_network(network: Network) -> str:
    """Serialize a Network back to the file schema (JSON, deterministic)."""
    doc = {
        "buses": [
            {
                "id": b.bus_id,
                "phases": b.phase_config.value,
                "v_nominal": b.nominal_phase_voltage,
            }
            for b in network.buses
        ],
        "branches": [
            {
                "id": br.branch_id,
                "from": br.from_bus,
                "to": br.to_bus,
                "r_ohm": br.r_ohm,
                "x_ohm": br.x_ohm,
                "length_m": br.length_m,
            }
            for br in network.branches
        ],
        "meters": [
            {"id": m.meter_id, "bus": m.bus_id, "connection": m.connection.value}
            for m in network.meters
        ],
        "slack": {"bus": network.slack_bus, "v_pu": network.slack_voltage},
    }
    return json.dumps(doc, indent=1)


# --- per-unit conversion ---------------------------------------------------


def to_per_unit(network: Network, s_base_per_phase: float | None = None) -> Network:
    """Annotate branch impedances in per-unit.

    Voltage base is the nominal phase voltage of each branch's to-bus;
    power base is ``s_base_per_phase`` VA (default 10 kVA per phase).
    """
    s_base = network.s_base_per_phase if s_base_per_phase is None else float(s_base_per_phase)
    converted = []
    for br in network.branches:
        v_base = network.bus(br.to_bus).nominal_phase_voltage
        if not v_base > 0:
            raise GridModelError(f"bus {br.to_bus}: missing nominal voltage")
        z_base = v_base * v_base / s_base
        converted.append(replace(br, r_pu=br.r_ohm / z_base, x_pu=br.x_ohm / z_base))
    return replace(
        network,
        branches=tuple(converted),
        s_base_per_phase=s_base,
        feeder_labels=dict(network.feeder_labels),
    )


def to_ohms(network: Network) -> Network:
    """Inverse of :func:`to_per_unit`: recompute ohms from the p.u. annotation."""
    converted = []
    for br in network.branches:
        if br.r_pu is None or br.x_pu is None:
            raise GridModelError(f"branch {br.branch_id}: not per-unit annotated")
        v_base = network.bus(br.to_bus).nominal_phase_voltage
        z_base = v_base * v_base / network.s_base_per_phase
        converted.append(
            replace(br, r_ohm=br.r_pu * z_base, x_ohm=br.x_pu * z_base, r_pu=None, x_pu=None)
        )
    return replace(
        network, branches=tuple(converted), feeder_labels=dict(network.feeder_labels)
    )


# --- feeders ---------------------------------------------------------------


def assign_feeders(network: Network) -> dict[str, int]:
    """Label each bus by its slack-adjacent subtree, in branch-list order.

    The slack bus gets the reserved label ``SLACK_FEEDER``.  Requires a
    valid radial network.
    """
    slack = network.slack_bus
    labels: dict[str, int] = {slack: SLACK_FEEDER}
    adj = network.adjacency
    feeder = 0
    for br in network.branches:
        root = None
        if br.from_bus == slack:
            root = br.to_bus
        elif br.to_bus == slack:
            root = br.from_bus
        if root is None or root in labels:
            continue
        stack = [root]
        labels[root] = feeder
        while stack:
            here = stack.pop()
            for neighbor, _ in adj[here]:
                if neighbor not in labels:
                    labels[neighbor] = feeder
                    stack.append(neighbor)
        feeder += 1
    return labels


def feeder_of(network: Network, bus_id: str) -> int:
    """Feeder label of a bus; the slack bus maps to ``SLACK_FEEDER``."""
    if bus_id not in network.bus_index:
        raise GridModelError(f"unknown bus: {bus_id}")
    labels = network.feeder_labels or assign_feeders(network)
    return labels[bus_id]
