"""Shared fixtures: tiny hand-built networks and a small synthetic dataset."""

from __future__ import annotations

import pathlib
import sys

import pytest

sys.path.insert(0, str(pathlib.Path(__file__).parent))

from ntlscan.grid_model import (
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
from ntlscan.pipeline import PipelineConfig, run_pipeline
from ntlscan.synth import DatasetSpec, make_dataset


@pytest.fixture
def two_bus_network() -> Network:
    """Slack feeding one single-phase metered bus; impedance pinned."""
    network = Network(
        buses=(
            Bus("slack"),
            Bus("load", PhaseConfig.SINGLE_PHASE_A),
        ),
        branches=(Branch("br1", "slack", "load", r_ohm=0.1058, x_ohm=0.0529),),
        meters=(Meter("m1", "load", Connection.SINGLE_PHASE),),
        slack_buses=("slack",),
    )
    network.feeder_labels.update(assign_feeders(network))
    return network


@pytest.fixture
def chain_network() -> Network:
    """slack - a - b chain plus a lateral c off a; three meters."""
    network = Network(
        buses=(
            Bus("slack"),
            Bus("a"),
            Bus("b", PhaseConfig.SINGLE_PHASE_B),
            Bus("c", PhaseConfig.SINGLE_PHASE_C),
        ),
        branches=(
            Branch("br_a", "slack", "a", r_ohm=0.08, x_ohm=0.04),
            Branch("br_b", "a", "b", r_ohm=0.12, x_ohm=0.05),
            Branch("br_c", "a", "c", r_ohm=0.05, x_ohm=0.02),
        ),
        meters=(
            Meter("m_a", "a", Connection.THREE_PHASE),
            Meter("m_b", "b", Connection.SINGLE_PHASE),
            Meter("m_c", "c", Connection.SINGLE_PHASE),
        ),
        slack_buses=("slack",),
    )
    network.feeder_labels.update(assign_feeders(network))
    return network


@pytest.fixture
def chain_network_pu(chain_network) -> Network:
    return to_per_unit(chain_network)


SMALL_SPEC = DatasetSpec(
    n_feeders=2,
    buses_per_feeder=9.0,
    meter_fraction=0.5,
    n_days=8,
    seed=11,
    n_frauds=1,
)


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory) -> dict:
    """One small fraud-bearing dataset on disk, generated once per session."""
    out = tmp_path_factory.mktemp("dataset")
    manifest = make_dataset(SMALL_SPEC, out)
    return {
        "dir": out,
        "manifest": manifest,
        "network": out / "network.grid",
        "energy": out / "energy.csv",
        "voltage": out / "voltage.csv",
    }


@pytest.fixture
def small_store(small_dataset, tmp_path):
    """Fresh pipeline run over the small dataset, stored in this test's dir."""
    config = PipelineConfig(
        network=str(small_dataset["network"]),
        energy=str(small_dataset["energy"]),
        voltage=str(small_dataset["voltage"]),
        out_dir=str(tmp_path / "runs"),
        top_k=5,
    )
    return run_pipeline(config)
