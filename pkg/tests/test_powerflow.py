"""Sweep solver against the scalar reference, plus batching semantics."""

from datetime import datetime, timedelta, timezone

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ntlscan.grid_model import GridModelError, Network, to_per_unit
from ntlscan.powerflow import (
    LoadSnapshot,
    SolverConfig,
    SweepPlan,
    assemble_loads,
    meter_voltage,
    meter_voltages_array,
    solve_series,
    solve_snapshot,
    sweep_solve,
)
from oracles import (
    power_balance_residual,
    random_small_network,
    reference_loads,
    reference_tree,
    scalar_fixed_point,
)

T0 = datetime(2021, 1, 1, tzinfo=timezone.utc)

# scalar_fixed_point([-1, 0], [0, 0.02+0.01j], S=0.5+0.2j on phase A, tol 1e-15
HAND_CASE_V_A = 0.9878519179537311


def _hours(n):
    return [T0 + timedelta(hours=i) for i in range(n)]


def test_two_bus_hand_case_matches_frozen_reference(two_bus_network):
    pu = to_per_unit(two_bus_network)
    sol = solve_snapshot(pu, LoadSnapshot(T0, {"m1": (5.0, 2.0)}))
    assert sol.converged
    assert sol.voltages["load"][0] == pytest.approx(HAND_CASE_V_A, abs=2e-8)
    # unloaded phases never deviate from the slack
    assert sol.voltages["load"][1] == 1.0
    assert sol.voltages["load"][2] == 1.0


def test_zero_load_keeps_every_bus_at_slack_voltage(chain_network_pu):
    sol = solve_snapshot(chain_network_pu, LoadSnapshot(T0, {}))
    assert sol.converged and sol.iterations == 1
    for bus_id in ("slack", "a", "b", "c"):
        assert sol.voltages[bus_id] == (1.0, 1.0, 1.0)


def test_slack_voltage_scales_the_whole_profile(chain_network):
    boosted = to_per_unit(
        Network(
            buses=chain_network.buses,
            branches=chain_network.branches,
            meters=chain_network.meters,
            slack_buses=chain_network.slack_buses,
            slack_voltage=1.05,
        )
    )
    sol = solve_snapshot(boosted, LoadSnapshot(T0, {}))
    assert sol.voltages["b"] == (1.05, 1.05, 1.05)


def test_loads_only_depress_their_own_phase(chain_network_pu):
    sol = solve_snapshot(chain_network_pu, LoadSnapshot(T0, {"m_b": (3.0, 1.0)}))
    v_a = sol.voltages["b"]
    assert v_a[1] < 1.0  # bus b declares phase B
    assert v_a[0] == 1.0 and v_a[2] == 1.0


def test_three_phase_meter_reads_worst_phase(chain_network_pu):
    sol = solve_snapshot(
        chain_network_pu, LoadSnapshot(T0, {"m_a": (6.0, 2.0), "m_b": (4.0, 1.5)})
    )
    mags = sol.voltages["a"]
    assert meter_voltage(sol, chain_network_pu, "m_a") == min(mags)
    assert meter_voltage(sol, chain_network_pu, "m_b") == sol.voltages["b"][1]


def test_meter_voltages_array_matches_scalar_rule(chain_network_pu):
    plan = SweepPlan.build(chain_network_pu)
    snaps = [
        LoadSnapshot(t, {"m_a": (5.0, 2.0), "m_b": (2.0, 0.5), "m_c": (1.0, 0.2)})
        for t in _hours(3)
    ]
    s_pu = assemble_loads(chain_network_pu, plan, snaps)
    v, _, conv, _ = sweep_solve(plan, s_pu, 1.0, SolverConfig())
    assert conv.all()
    mags = np.abs(v)
    ids = ["m_a", "m_b", "m_c"]
    arr = meter_voltages_array(chain_network_pu, plan, mags, ids)
    sols = solve_series(chain_network_pu, snaps)
    for col, sol in enumerate(sols):
        for row, meter_id in enumerate(ids):
            assert arr[row, col] == pytest.approx(
                meter_voltage(sol, chain_network_pu, meter_id), abs=1e-12
            )


def test_series_equals_snapshot_by_snapshot_across_chunks(two_bus_network):
    pu = to_per_unit(two_bus_network)
    rng = np.random.default_rng(3)
    snaps = [
        LoadSnapshot(t, {"m1": (float(rng.uniform(0.1, 4.0)), float(rng.uniform(0, 1.5)))})
        for t in _hours(300)  # crosses the internal 256-snapshot chunk edge
    ]
    batch = solve_series(pu, snaps)
    for snap, got in zip(snaps, batch):
        solo = solve_snapshot(pu, snap)
        assert got.voltages == solo.voltages
        assert got.iterations == solo.iterations


def test_each_snapshot_freezes_at_its_own_convergence(two_bus_network):
    pu = to_per_unit(two_bus_network)
    plan = SweepPlan.build(pu)
    sane = {"m1": (3.0, 1.0)}
    insane = {"m1": (4000.0, 2000.0)}  # beyond maximum power transfer
    snaps = [LoadSnapshot(t, load) for t, load in zip(_hours(3), (sane, insane, sane))]
    s_pu = assemble_loads(pu, plan, snaps)
    v, iterations, converged, mismatch = sweep_solve(plan, s_pu, 1.0, SolverConfig())
    assert list(converged) == [True, False, True]
    assert mismatch[1] > SolverConfig().tolerance
    solo = solve_snapshot(pu, snaps[0])
    assert float(np.abs(v[1, 0, 0])) == solo.voltages["load"][0]
    assert float(np.abs(v[1, 0, 2])) == solo.voltages["load"][0]
    assert iterations[0] == solo.iterations


def test_snapshots_must_be_time_ordered(chain_network_pu):
    snaps = [LoadSnapshot(T0, {}), LoadSnapshot(T0, {})]
    with pytest.raises(ValueError, match="increasing"):
        solve_series(chain_network_pu, snaps)


def test_unknown_meter_is_rejected(chain_network_pu):
    plan = SweepPlan.build(chain_network_pu)
    with pytest.raises(GridModelError, match="unknown meter"):
        assemble_loads(chain_network_pu, plan, [LoadSnapshot(T0, {"ghost": (1.0, 0.0)})])


def test_plan_requires_per_unit_annotation(chain_network):
    with pytest.raises(GridModelError, match="per-unit"):
        SweepPlan.build(chain_network)


def test_solver_config_rejects_bad_values():
    with pytest.raises(ValueError):
        SolverConfig(tolerance=0.0)
    with pytest.raises(ValueError):
        SolverConfig(max_iterations=0)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_solver_agrees_with_scalar_reference(seed):
    """Random tiny networks and loads: solver equals the independent oracle."""
    rng = np.random.default_rng(seed)
    net = random_small_network(rng)
    loads = {
        m.meter_id: (float(rng.uniform(0.05, 5.0)), float(rng.uniform(0.0, 2.0)))
        for m in net.meters
    }
    config = SolverConfig(tolerance=1e-10)
    sol = solve_snapshot(net, LoadSnapshot(T0, loads), config)
    assert sol.converged

    order, parents, z = reference_tree(net)
    s = reference_loads(net, order, loads)
    ref = scalar_fixed_point(parents, z, s)
    for i, bus_id in enumerate(order):
        for ph in range(3):
            assert sol.voltages[bus_id][ph] == pytest.approx(abs(ref[i][ph]), abs=1e-7)

    plan = SweepPlan.build(net)
    s_pu = assemble_loads(net, plan, [LoadSnapshot(T0, loads)])
    v, _, conv, _ = sweep_solve(plan, s_pu, 1.0, config)
    assert conv.all()
    residual = power_balance_residual(net, plan.bus_ids, v[:, :, 0], s_pu[:, :, 0])
    assert residual < 10 * config.tolerance
