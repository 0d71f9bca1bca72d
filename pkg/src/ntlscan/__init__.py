"""Non-technical-loss screening from smart-meter voltage deviations.

Simulate a low-voltage network from reported energy, difference the
simulated daily voltage statistics against measured ones, and rank
meters whose measured voltage sits suspiciously below the model.
"""

from .grid_model import (
    Branch,
    Bus,
    Connection,
    Meter,
    Network,
    PhaseConfig,
    load_network,
    dump_network,
    to_per_unit,
    validate,
)
from .powerflow import LoadSnapshot, SolverConfig, VoltageSolution, solve_series, solve_snapshot
from .deviation import IndicatorMatrix, compute_indicators, summary_statistics
from .ranking import CandidateRecord, ExclusionWindow, rank_candidates, severity_scores
from .pipeline import AnalysisStore, PipelineConfig, load_store, run_pipeline
from .synth import DatasetSpec, FraudScenario, NoiseModel, SamplingModel, make_dataset

__version__ = "0.1.0"

__all__ = [
    "AnalysisStore",
    "Branch",
    "Bus",
    "CandidateRecord",
    "Connection",
    "DatasetSpec",
    "ExclusionWindow",
    "FraudScenario",
    "IndicatorMatrix",
    "LoadSnapshot",
    "Meter",
    "Network",
    "NoiseModel",
    "PhaseConfig",
    "PipelineConfig",
    "SamplingModel",
    "SolverConfig",
    "VoltageSolution",
    "compute_indicators",
    "dump_network",
    "load_network",
    "load_store",
    "make_dataset",
    "rank_candidates",
    "run_pipeline",
    "severity_scores",
    "solve_series",
    "solve_snapshot",
    "summary_statistics",
    "to_per_unit",
    "validate",
]
