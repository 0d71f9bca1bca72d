"""End-to-end analysis runs and their on-disk form.

A run is: ingest both measurement streams, simulate the network over the
energy hours, aggregate both sides to daily stats, difference them into
indicators, summarize, rank.  The result persists as one directory of
plain-text documents keyed by a deterministic run id, so identical
inputs and config always land on the identical store.

Post-run mutations (triage notes, exclusion windows) touch only the
mutable documents; indicator matrices are written once.  Re-ranking
after an exclusion edit reuses the persisted matrix and never re-runs
load flows, which provenance timestamps make checkable.
"""

from __future__ import annotations

import hashlib
import json
import os
import shutil
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterator

import numpy as np

from .deviation import (
    INDICATORS,
    DailyVoltageStats,
    IndicatorMatrix,
    StatsMap,
    SummaryStats,
    compute_indicators,
    daily_stats_measured,
    layer_from_csv,
    layer_to_csv,
    matrix_from_csv_layers,
    summary_statistics,
)
from .grid_model import Network, dump_network, load_network, to_per_unit, validate
from .ingest import (
    CleaningRules,
    local_day,
    clean,
    hourly_power,
    parse_energy_csv,
    parse_voltage_csv,
)
from .powerflow import SolverConfig, SweepPlan, meter_voltages_array, sweep_solve
from .ranking import (
    DEFAULT_HOT_THRESHOLD,
    CandidateRecord,
    ExclusionWindow,
    Pattern,
    PatternParams,
    TRIAGE_STATUSES,
    candidates_to_document,
    classify_all,
    export_candidates,
    rank_candidates,
    severity_scores,
)

_SOLVE_CHUNK = 256

STAT_LAYERS = ("v_min", "v_mean", "v_max", "samples")


class PipelineError(RuntimeError):
    """A stage failed; the message always starts with the stage name."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage


@contextmanager
def _stage(name: str) -> Iterator[None]:
    try:
        yield
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(name, str(exc)) from exc


@dataclass
class PipelineConfig:
    """One analysis run, fully specified.

    Day bucketing for both streams follows ``cleaning.day_timezone``.
    """

    network: str
    energy: str
    voltage: str
    out_dir: str = "runs"
    default_power_factor: float = 0.95
    top_k: int = 15
    hot_threshold: float = DEFAULT_HOT_THRESHOLD
    cleaning: CleaningRules = field(default_factory=CleaningRules)
    solver: SolverConfig = field(default_factory=SolverConfig)
    pattern: PatternParams = field(default_factory=PatternParams)
    exclusions: tuple[ExclusionWindow, ...] = ()


def config_to_dict(config: PipelineConfig) -> dict:
    doc = {
        "network": config.network,
        "energy": config.energy,
        "voltage": config.voltage,
        "out_dir": config.out_dir,
        "default_power_factor": config.default_power_factor,
        "top_k": config.top_k,
        "hot_threshold": config.hot_threshold,
        "cleaning": asdict(config.cleaning),
        "solver": asdict(config.solver),
        "pattern": asdict(config.pattern),
        "exclusions": [
            {"start": w.start.isoformat(), "end": w.end.isoformat()}
            for w in config.exclusions
        ],
    }
    return doc


def config_from_dict(doc: dict, base_dir: Path | None = None) -> PipelineConfig:
    def path_of(key: str) -> str:
        value = doc[key]
        if base_dir is not None and not os.path.isabs(value):
            return str(base_dir / value)
        return value

    return PipelineConfig(
        network=path_of("network"),
        energy=path_of("energy"),
        voltage=path_of("voltage"),
        out_dir=(
            path_of("out_dir") if "out_dir" in doc else PipelineConfig.__dataclass_fields__["out_dir"].default
        ),
        default_power_factor=doc.get("default_power_factor", 0.95),
        top_k=doc.get("top_k", 15),
        hot_threshold=doc.get("hot_threshold", DEFAULT_HOT_THRESHOLD),
        cleaning=CleaningRules(**doc.get("cleaning", {})),
        solver=SolverConfig(**doc.get("solver", {})),
        pattern=PatternParams(**doc.get("pattern", {})),
        exclusions=tuple(
            ExclusionWindow(
                start=_parse_day(w["start"]), end=_parse_day(w["end"])
            )
            for w in doc.get("exclusions", [])
        ),
    )


def load_config(path: str | Path) -> PipelineConfig:
    """Read a config JSON file; relative paths resolve against its directory."""
    p = Path(path)
    return config_from_dict(json.loads(p.read_text(encoding="utf-8")), p.parent)


def _parse_day(text: str):
    from datetime import date

    return date.fromisoformat(text)


@dataclass
class TriageNote:
    status: str
    comment: str = ""
    updated_at: str = ""
    version: int = 1


@dataclass
class AnalysisStore:
    """Everything a run produced, as one round-trippable unit."""

    run_id: str
    created_at: str
    config: PipelineConfig
    network: Network
    network_text: str
    matrix: IndicatorMatrix
    sim_stats: IndicatorMatrix
    meas_stats: IndicatorMatrix
    summary: SummaryStats
    candidates: list[CandidateRecord]
    patterns: dict[str, Pattern]
    annotations: dict[str, TriageNote] = field(default_factory=dict)
    exclusions: list[ExclusionWindow] = field(default_factory=list)
    exclusions_version: int = 1
    provenance: dict = field(default_factory=dict)

    @property
    def ranked_meters(self) -> set[str]:
        return {c.meter_id for c in self.candidates}


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat().replace("+00:00", "Z")


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def compute_run_id(
    network_text: str, energy_text: str, voltage_text: str, config: PipelineConfig
) -> str:
    """Digest of inputs and analysis-relevant config; out_dir is excluded."""
    doc = config_to_dict(config)
    doc.pop("out_dir")
    h = hashlib.sha256()
    for part in (
        network_text,
        energy_text,
        voltage_text,
        json.dumps(doc, sort_keys=True, separators=(",", ":")),
    ):
        blob = part.encode("utf-8")
        h.update(str(len(blob)).encode())
        h.update(b":")
        h.update(blob)
    return h.hexdigest()[:12]


def _stats_matrix(
    stats: StatsMap, meters: list[str], days: list
) -> IndicatorMatrix:
    shape = (len(meters), len(days))
    layers = {name: np.full(shape, np.nan) for name in STAT_LAYERS}
    meter_pos = {m: i for i, m in enumerate(meters)}
    day_pos = {d: j for j, d in enumerate(days)}
    for (meter_id, day), s in stats.items():
        if meter_id not in meter_pos or day not in day_pos:
            continue
        i, j = meter_pos[meter_id], day_pos[day]
        layers["v_min"][i, j] = s.v_min
        layers["v_mean"][i, j] = s.v_mean
        layers["v_max"][i, j] = s.v_max
        layers["samples"][i, j] = s.sample_count
    return IndicatorMatrix(meters=meters, days=days, layers=layers)


def rerank(store: AnalysisStore) -> AnalysisStore:
    """Recompute severity, patterns, and candidates from the stored matrix.

    No load flow runs here; ``analysis_completed_at`` stays untouched
    while ``ranking_updated_at`` moves.
    """
    scores = severity_scores(store.matrix, store.exclusions)
    store.patterns = classify_all(
        store.matrix,
        store.exclusions,
        threshold=store.config.hot_threshold,
        params=store.config.pattern,
    )
    store.candidates = rank_candidates(
        scores, store.network, store.config.top_k, store.patterns
    )
    store.provenance["ranking_updated_at"] = _utcnow()
    return store


def run_pipeline(config: PipelineConfig) -> AnalysisStore:
    """Execute the full treatment chain and persist the resulting store.

    Any stage failure raises :class:`PipelineError` naming the stage;
    nothing is persisted unless every stage succeeded.
    """
    with _stage("config"):
        for key in ("network", "energy", "voltage"):
            path = getattr(config, key)
            if not Path(path).is_file():
                raise PipelineError("config", f"{key} file not found: {path}")
        if config.top_k < 1:
            raise PipelineError("config", "top_k must be >= 1")

    with _stage("network"):
        network_text = Path(config.network).read_text(encoding="utf-8")
        network = load_network(network_text)
        report = validate(network)
        if not report.ok:
            raise PipelineError("network", report.summary())
        net_pu = to_per_unit(network)

    with _stage("ingest"):
        energy_text = Path(config.energy).read_text(encoding="utf-8")
        voltage_text = Path(config.voltage).read_text(encoding="utf-8")
        energy, energy_errors = parse_energy_csv(energy_text)
        voltage, voltage_errors = parse_voltage_csv(voltage_text)
        series_map, cleaning_report = clean(energy, voltage, config.cleaning)
        known = {m.meter_id for m in network.meters}
        unknown_meters = sorted(set(series_map) - known)
        series_map = {m: s for m, s in series_map.items() if m in known}

    with _stage("loads"):
        meter_ids = [m.meter_id for m in network.meters]
        loads_by_meter = {
            m: hourly_power(series_map[m], config.default_power_factor)
            for m in meter_ids
            if m in series_map
        }
        hour_axis = sorted({ts for d in loads_by_meter.values() for ts in d})
        hour_pos = {ts: k for k, ts in enumerate(hour_axis)}
        n_meters, n_hours = len(meter_ids), len(hour_axis)
        p_kw = np.zeros((n_meters, n_hours))
        q_kvar = np.zeros((n_meters, n_hours))
        for i, meter_id in enumerate(meter_ids):
            for ts, (p, q) in loads_by_meter.get(meter_id, {}).items():
                k = hour_pos[ts]
                p_kw[i, k] = p
                q_kvar[i, k] = q

    with _stage("solve"):
        plan = SweepPlan.build(net_pu)
        bus_idx = np.array([plan.meter_bus[m] for m in meter_ids], dtype=np.intp)
        weights = np.stack([plan.meter_phase_weights[m] for m in meter_ids]) if meter_ids else np.zeros((0, 3))
        s_va = (p_kw + 1j * q_kvar) * 1e3 / net_pu.s_base_per_phase
        n_buses = len(plan.bus_ids)
        meter_v = np.empty((n_meters, n_hours))
        converged = np.ones(n_hours, dtype=bool)
        iterations_total = 0
        for lo in range(0, n_hours, _SOLVE_CHUNK):
            hi = min(lo + _SOLVE_CHUNK, n_hours)
            s_pu = np.zeros((n_buses, 3, hi - lo), dtype=np.complex128)
            for m in range(n_meters):
                s_pu[bus_idx[m]] += weights[m][:, None] * s_va[m, lo:hi]
            v, iters, conv, _ = sweep_solve(
                plan, s_pu, net_pu.slack_voltage, config.solver
            )
            meter_v[:, lo:hi] = meter_voltages_array(
                net_pu, plan, np.abs(v), meter_ids
            )
            converged[lo:hi] = conv
            iterations_total += int(iters.sum())

    with _stage("aggregate"):
        tz = config.cleaning.tz
        day_cols: dict = {}
        for k, ts in enumerate(hour_axis):
            if converged[k]:
                day_cols.setdefault(local_day(ts, tz), []).append(k)
        sim_map: StatsMap = {}
        for day, cols in day_cols.items():
            block = meter_v[:, cols]
            for i, meter_id in enumerate(meter_ids):
                row = block[i]
                sim_map[(meter_id, day)] = DailyVoltageStats(
                    meter_id=meter_id,
                    day=day,
                    v_min=float(row.min()),
                    v_mean=float(row.mean()),
                    v_max=float(row.max()),
                    sample_count=row.size,
                    source="simulated",
                )
        meas_map: StatsMap = {}
        for series in series_map.values():
            meas_map.update(
                daily_stats_measured(
                    series,
                    min_samples=config.cleaning.min_voltage_samples_per_day,
                    nominal_voltage=config.cleaning.nominal_voltage,
                    tz=tz,
                )
            )

    with _stage("indicators"):
        matrix = compute_indicators(sim_map, meas_map, meters=meter_ids)
        sim_stats = _stats_matrix(sim_map, matrix.meters, matrix.days)
        meas_stats = _stats_matrix(meas_map, matrix.meters, matrix.days)
        summary = summary_statistics(matrix)

    store = AnalysisStore(
        run_id=compute_run_id(network_text, energy_text, voltage_text, config),
        created_at=_utcnow(),
        config=config,
        network=network,
        network_text=dump_network(network),
        matrix=matrix,
        sim_stats=sim_stats,
        meas_stats=meas_stats,
        summary=summary,
        candidates=[],
        patterns={},
        exclusions=list(config.exclusions),
        provenance={
            "inputs": {
                "network": {"path": config.network, "sha256": _sha256(network_text)},
                "energy": {"path": config.energy, "sha256": _sha256(energy_text)},
                "voltage": {"path": config.voltage, "sha256": _sha256(voltage_text)},
            },
            "ingest": {
                "rows_in": cleaning_report.rows_in,
                "rows_kept": cleaning_report.rows_kept,
                "duplicates_dropped": cleaning_report.duplicates_dropped,
                "out_of_range_dropped": cleaning_report.out_of_range_dropped,
                "misaligned_dropped": cleaning_report.misaligned_dropped,
                "gaps": len(cleaning_report.gaps),
                "energy_row_errors": len(energy_errors),
                "voltage_row_errors": len(voltage_errors),
                "unknown_meters": unknown_meters[:10],
                "unknown_meter_count": len(unknown_meters),
            },
            "solver": {
                "snapshots": n_hours,
                "non_converged": int((~converged).sum()),
                "iterations_total": iterations_total,
            },
        },
    )
    with _stage("ranking"):
        rerank(store)
    store.provenance["analysis_completed_at"] = _utcnow()

    with _stage("persist"):
        save_store(store, Path(config.out_dir))
    return store


# ---------------------------------------------------------------- storage

_MATRIX_PREFIX = "matrix"
_SIM_PREFIX = "daily_sim"
_MEAS_PREFIX = "daily_meas"


def _ranking_document(store: AnalysisStore) -> dict:
    return {
        "version": store.exclusions_version,
        "ranking_updated_at": store.provenance.get("ranking_updated_at"),
        "exclusions": [
            {"start": w.start.isoformat(), "end": w.end.isoformat()}
            for w in store.exclusions
        ],
        "candidates": candidates_to_document(store.candidates),
        "patterns": {m: p.render() for m, p in store.patterns.items()},
    }


def _annotations_document(store: AnalysisStore) -> dict:
    return {"notes": {m: asdict(n) for m, n in store.annotations.items()}}


def merged_candidates(store: AnalysisStore) -> list[CandidateRecord]:
    """Candidate records with triage annotations overlaid."""
    merged = []
    for rec in store.candidates:
        note = store.annotations.get(rec.meter_id)
        merged.append(
            CandidateRecord(
                rank=rec.rank,
                meter_id=rec.meter_id,
                terminal_id=rec.terminal_id,
                dv_min_mean=rec.dv_min_mean,
                dv_min_max=rec.dv_min_max,
                pattern=rec.pattern,
                triage=note.status if note else "unreviewed",
                comment=note.comment if note else "",
            )
        )
    return merged


def _write_mutable(store: AnalysisStore, run_dir: Path) -> None:
    _atomic_write(run_dir / "ranking.json", json.dumps(_ranking_document(store), indent=1) + "\n")
    _atomic_write(
        run_dir / "annotations.json", json.dumps(_annotations_document(store), indent=1) + "\n"
    )
    _atomic_write(run_dir / "candidates.csv", export_candidates(merged_candidates(store)))


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(f".{path.name}.tmp-{os.getpid()}")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def save_mutable(store: AnalysisStore, root: str | Path) -> None:
    """Persist only the post-run mutable documents (triage, exclusions)."""
    _write_mutable(store, Path(root) / store.run_id)


def save_store(store: AnalysisStore, root: str | Path) -> Path:
    """Write the full run directory atomically (build aside, then swap)."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    tmp = root / f".tmp-{store.run_id}-{os.getpid()}-{time.monotonic_ns()}"
    tmp.mkdir()
    try:
        manifest = {
            "run_id": store.run_id,
            "created_at": store.created_at,
            "config": config_to_dict(store.config),
            "counts": {
                "buses": len(store.network.buses),
                "meters": len(store.matrix.meters),
                "days": len(store.matrix.days),
                "candidates": len(store.candidates),
            },
            "provenance": store.provenance,
        }
        (tmp / "manifest.json").write_text(
            json.dumps(manifest, indent=1) + "\n", encoding="utf-8"
        )
        (tmp / "network.grid").write_text(store.network_text, encoding="utf-8")
        for name in INDICATORS:
            (tmp / f"{_MATRIX_PREFIX}.{name}.csv").write_text(
                layer_to_csv(store.matrix, name), encoding="utf-8"
            )
        for prefix, stats in ((_SIM_PREFIX, store.sim_stats), (_MEAS_PREFIX, store.meas_stats)):
            for name in STAT_LAYERS:
                (tmp / f"{prefix}.{name}.csv").write_text(
                    layer_to_csv(stats, name), encoding="utf-8"
                )
        (tmp / "summary.json").write_text(
            json.dumps(
                {k: asdict(v) for k, v in store.summary.per_indicator.items()},
                indent=1,
            )
            + "\n",
            encoding="utf-8",
        )
        _write_mutable(store, tmp)
        final = root / store.run_id
        if final.exists():
            shutil.rmtree(final)
        os.replace(tmp, final)
        return final
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise


def _load_stats(run_dir: Path, prefix: str) -> IndicatorMatrix:
    meters: list[str] = []
    days: list = []
    layers: dict[str, np.ndarray] = {}
    for name in STAT_LAYERS:
        meters, days, layers[name] = layer_from_csv(
            (run_dir / f"{prefix}.{name}.csv").read_text(encoding="utf-8")
        )
    return IndicatorMatrix(meters=meters, days=days, layers=layers)


def load_store(root: str | Path, run_id: str) -> AnalysisStore:
    run_dir = Path(root) / run_id
    if not (run_dir / "manifest.json").is_file():
        raise FileNotFoundError(f"no run {run_id} under {root}")
    manifest = json.loads((run_dir / "manifest.json").read_text(encoding="utf-8"))
    network_text = (run_dir / "network.grid").read_text(encoding="utf-8")
    network = load_network(network_text)
    matrix = matrix_from_csv_layers(
        {
            name: (run_dir / f"{_MATRIX_PREFIX}.{name}.csv").read_text(encoding="utf-8")
            for name in INDICATORS
        }
    )
    ranking_doc = json.loads((run_dir / "ranking.json").read_text(encoding="utf-8"))
    annotations_doc = json.loads((run_dir / "annotations.json").read_text(encoding="utf-8"))
    summary_doc = json.loads((run_dir / "summary.json").read_text(encoding="utf-8"))

    from .deviation import IndicatorSummary

    summary = SummaryStats(
        per_indicator={k: IndicatorSummary(**v) for k, v in summary_doc.items()}
    )
    candidates = [
        CandidateRecord(
            rank=c["rank"],
            meter_id=c["meter_id"],
            terminal_id=c["terminal_id"],
            dv_min_mean=c["dv_min_mean"],
            dv_min_max=c["dv_min_max"],
            pattern=Pattern(
                c["pattern"]["kind"],
                _parse_day(c["pattern"]["marker"]) if c["pattern"]["marker"] else None,
            ),
        )
        for c in ranking_doc["candidates"]
    ]
    return AnalysisStore(
        run_id=manifest["run_id"],
        created_at=manifest["created_at"],
        config=config_from_dict(manifest["config"]),
        network=network,
        network_text=network_text,
        matrix=matrix,
        sim_stats=_load_stats(run_dir, _SIM_PREFIX),
        meas_stats=_load_stats(run_dir, _MEAS_PREFIX),
        summary=summary,
        candidates=candidates,
        patterns={m: Pattern.parse(p) for m, p in ranking_doc["patterns"].items()},
        annotations={
            m: TriageNote(**n) for m, n in annotations_doc["notes"].items()
        },
        exclusions=[
            ExclusionWindow(_parse_day(w["start"]), _parse_day(w["end"]))
            for w in ranking_doc["exclusions"]
        ],
        exclusions_version=ranking_doc["version"],
        provenance=manifest["provenance"],
    )


def list_runs(root: str | Path) -> list[dict]:
    """Manifest summaries of all runs under a store root, newest first."""
    root = Path(root)
    out = []
    if not root.is_dir():
        return out
    for child in root.iterdir():
        manifest_path = child / "manifest.json"
        if child.name.startswith(".") or not manifest_path.is_file():
            continue
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        out.append(
            {
                "run_id": manifest["run_id"],
                "created_at": manifest["created_at"],
                "counts": manifest["counts"],
            }
        )
    out.sort(key=lambda r: r["created_at"], reverse=True)
    return out


def _matrices_equal(a: IndicatorMatrix, b: IndicatorMatrix) -> bool:
    return (
        a.meters == b.meters
        and a.days == b.days
        and set(a.layers) == set(b.layers)
        and all(np.array_equal(a.layers[k], b.layers[k], equal_nan=True) for k in a.layers)
    )


def stores_equal(a: AnalysisStore, b: AnalysisStore) -> bool:
    """Structural equality over everything a round trip must preserve."""
    return (
        a.run_id == b.run_id
        and config_to_dict(a.config) == config_to_dict(b.config)
        and a.network_text == b.network_text
        and _matrices_equal(a.matrix, b.matrix)
        and _matrices_equal(a.sim_stats, b.sim_stats)
        and _matrices_equal(a.meas_stats, b.meas_stats)
        and a.summary == b.summary
        and a.candidates == b.candidates
        and a.patterns == b.patterns
        and a.annotations == b.annotations
        and a.exclusions == b.exclusions
        and a.exclusions_version == b.exclusions_version
    )


def valid_triage_status(status: str) -> bool:
    return status in TRIAGE_STATUSES
