"""Backward/forward sweep load flow for radial networks.

Three decoupled phase networks share the tree topology: single-phase loads
draw current only on their declared phase, three-phase loads split equally.
The sweep iterates constant-power load currents ``I = conj(S/V)`` backward
(leaves to slack) and voltage drops ``V_child = V_parent - Z I`` forward
(slack to leaves) until the largest voltage change falls below tolerance.

The solver core works on arrays of shape ``[bus, phase, snapshot]`` grouped
by tree depth, so a whole series of hourly snapshots is swept in one pass.
Each snapshot's result is frozen at its own convergence iteration, which
keeps batched output identical to solving snapshots one by one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from typing import Iterable, Sequence

import numpy as np

from .grid_model import Connection, GridModelError, Network

_CHUNK = 256  # snapshots swept together; bounds peak memory


@dataclass
class SolverConfig:
    tolerance: float = 1e-8
    max_iterations: int = 100
    flat_start_voltage: float = 1.0

    def __post_init__(self) -> None:
        if not self.tolerance > 0:
            raise ValueError("tolerance must be > 0")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass
class LoadSnapshot:
    """Hourly loads: meter_id -> (P kW, Q kvar), mean over the hour."""

    timestamp: datetime
    loads: dict[str, tuple[float, float]]
    missing: frozenset[str] = frozenset()


@dataclass
class VoltageSolution:
    timestamp: datetime
    voltages: dict[str, tuple[float, float, float]]  # bus -> per-phase |V| p.u.
    iterations: int
    converged: bool
    max_mismatch: float


@dataclass
class SweepPlan:
    """Topologically ordered view of a radial network for sweeping.

    ``parent[i]`` and ``z[i]`` describe the branch feeding bus i from its
    parent (slack at index 0 has parent -1 and z 0); ``levels`` groups bus
    indices by depth so each sweep step vectorizes over a whole level.
    """

    bus_ids: list[str]
    index: dict[str, int]
    parent: np.ndarray
    z: np.ndarray
    levels: list[np.ndarray]
    meter_bus: dict[str, int] = field(default_factory=dict)
    meter_phase_weights: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def build(cls, network: Network) -> "SweepPlan":
        if not network.is_per_unit:
            raise GridModelError("network must be per-unit annotated (see to_per_unit)")
        slack = network.slack_bus
        n = len(network.buses)
        index: dict[str, int] = {slack: 0}
        bus_ids = [slack]
        parent = [-1]
        z: list[complex] = [0j]
        depth = [0]
        adj = network.adjacency
        frontier = [slack]
        while frontier:
            nxt: list[str] = []
            for here in frontier:
                for neighbor, br in adj[here]:
                    if neighbor in index:
                        continue
                    index[neighbor] = len(bus_ids)
                    bus_ids.append(neighbor)
                    parent.append(index[here])
                    z.append(complex(br.r_pu, br.x_pu))
                    depth.append(depth[index[here]] + 1)
                    nxt.append(neighbor)
            frontier = nxt
        if len(bus_ids) != n:
            raise GridModelError("network is not connected; solve requires a valid network")

        max_depth = max(depth)
        levels = [
            np.asarray([i for i, d in enumerate(depth) if d == lv], dtype=np.intp)
            for lv in range(max_depth + 1)
        ]

        plan = cls(
            bus_ids=bus_ids,
            index=index,
            parent=np.asarray(parent, dtype=np.intp),
            z=np.asarray(z, dtype=np.complex128),
            levels=levels,
        )
        for meter in network.meters:
            plan.meter_bus[meter.meter_id] = index[meter.bus_id]
            if meter.connection is Connection.THREE_PHASE:
                weights = np.full(3, 1.0 / 3.0)
            else:
                phase = network.bus(meter.bus_id).phase_config.phase_index
                weights = np.zeros(3)
                weights[0 if phase is None else phase] = 1.0
            plan.meter_phase_weights[meter.meter_id] = weights
        return plan


def assemble_loads(
    network: Network, plan: SweepPlan, snapshots: Sequence[LoadSnapshot]
) -> np.ndarray:
    """Per-phase complex power in p.u., shape [bus, 3, snapshot]."""
    n = len(plan.bus_ids)
    s_pu = np.zeros((n, 3, len(snapshots)), dtype=np.complex128)
    s_base = network.s_base_per_phase
    for col, snap in enumerate(snapshots):
        for meter_id, (p_kw, q_kvar) in snap.loads.items():
            if meter_id not in plan.meter_bus:
                raise GridModelError(f"unknown meter: {meter_id}")
            s_va = (p_kw + 1j * q_kvar) * 1e3
            s_pu[plan.meter_bus[meter_id], :, col] += (
                plan.meter_phase_weights[meter_id] * (s_va / s_base)
            )
    return s_pu


def sweep_solve(
    plan: SweepPlan,
    s_pu: np.ndarray,
    slack_voltage: float,
    config: SolverConfig,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Sweep a batch of snapshots to convergence.

    Returns (voltages [bus, 3, B] complex, iterations [B], converged [B],
    max_mismatch [B]).  Snapshots that fail to converge keep their last
    iterate; nothing raises for them.
    """
    n, _, batch = s_pu.shape
    v = np.full((n, 3, batch), complex(config.flat_start_voltage), dtype=np.complex128)
    v[0] = slack_voltage
    out = v.copy()
    active = np.ones(batch, dtype=bool)
    converged = np.zeros(batch, dtype=bool)
    iterations = np.full(batch, config.max_iterations, dtype=np.intp)
    mismatch = np.zeros(batch)
    parent = plan.parent
    z_col = plan.z[:, None, None]

    dv = np.zeros(batch)
    for it in range(1, config.max_iterations + 1):
        with np.errstate(divide="ignore", invalid="ignore"):
            current = np.conj(s_pu / v)
        # backward: accumulate subtree currents into each feeding branch
        for level in reversed(plan.levels[1:]):
            np.add.at(current, parent[level], current[level])
        # forward: propagate voltage drops from the slack down
        v_new = np.empty_like(v)
        v_new[0] = slack_voltage
        for level in plan.levels[1:]:
            v_new[level] = v_new[parent[level]] - z_col[level] * current[level]
        with np.errstate(invalid="ignore"):
            dv = np.abs(v_new - v).max(axis=(0, 1))
        fresh = active & (dv < config.tolerance)
        if fresh.any():
            out[..., fresh] = v_new[..., fresh]
            iterations[fresh] = it
            mismatch[fresh] = dv[fresh]
            converged[fresh] = True
            active &= ~fresh
        v = v_new
        if not active.any():
            break
    if active.any():
        out[..., active] = v[..., active]
        mismatch[active] = np.where(np.isfinite(dv[active]), dv[active], np.inf)
    return out, iterations, converged, mismatch


def solve_snapshot(
    network: Network, snapshot: LoadSnapshot, config: SolverConfig | None = None
) -> VoltageSolution:
    """Solve one hourly snapshot; non-convergence is flagged, never raised."""
    return solve_series(network, [snapshot], config)[0]


def solve_series(
    network: Network,
    snapshots: Sequence[LoadSnapshot],
    config: SolverConfig | None = None,
) -> list[VoltageSolution]:
    """Solve an ordered series of independent snapshots.

    Results are identical to mapping :func:`solve_snapshot` over the list;
    internally snapshots are swept in chunks for speed.
    """
    config = config or SolverConfig()
    if not snapshots:
        return []
    times = [s.timestamp for s in snapshots]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("snapshots must be in strictly increasing time order")
    plan = SweepPlan.build(network)
    solutions: list[VoltageSolution] = []
    for start in range(0, len(snapshots), _CHUNK):
        chunk = snapshots[start : start + _CHUNK]
        s_pu = assemble_loads(network, plan, chunk)
        v, iterations, converged, mismatch = sweep_solve(
            plan, s_pu, network.slack_voltage, config
        )
        mags = np.abs(v)
        for col, snap in enumerate(chunk):
            voltages = {
                bus_id: (mags[i, 0, col], mags[i, 1, col], mags[i, 2, col])
                for i, bus_id in enumerate(plan.bus_ids)
            }
            solutions.append(
                VoltageSolution(
                    timestamp=snap.timestamp,
                    voltages=voltages,
                    iterations=int(iterations[col]),
                    converged=bool(converged[col]),
                    max_mismatch=float(mismatch[col]),
                )
            )
    return solutions


def meter_voltage(solution: VoltageSolution, network: Network, meter_id: str) -> float:
    """Scalar p.u. magnitude seen by a meter.

    Single-phase meters read their declared phase; three-phase meters read
    the minimum across phases (worst-case demand-driven sag).
    """
    meter = network.meter(meter_id)
    mags = solution.voltages[meter.bus_id]
    if meter.connection is Connection.THREE_PHASE:
        return min(mags)
    phase = network.bus(meter.bus_id).phase_config.phase_index
    return mags[0 if phase is None else phase]


def meter_voltages_array(
    network: Network, plan: SweepPlan, v_mags: np.ndarray, meter_ids: Sequence[str]
) -> np.ndarray:
    """Meter-voltage rule applied to a solved magnitude array [bus, 3, B].

    Returns [meter, B]; used by bulk consumers (synthesis, aggregation)
    to avoid building per-snapshot dictionaries.
    """
    out = np.empty((len(meter_ids), v_mags.shape[2]))
    for row, meter_id in enumerate(meter_ids):
        meter = network.meter(meter_id)
        bus_idx = plan.meter_bus[meter_id]
        if meter.connection is Connection.THREE_PHASE:
            out[row] = v_mags[bus_idx].min(axis=0)
        else:
            phase = network.bus(meter.bus_id).phase_config.phase_index
            out[row] = v_mags[bus_idx, 0 if phase is None else phase]
    return out
