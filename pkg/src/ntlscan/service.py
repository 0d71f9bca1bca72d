"""HTTP service over persisted runs, for the triage frontend.

Read-mostly: the only mutations are triage notes and exclusion-window
edits, both guarded by optimistic version tokens and a per-run lock, and
both persisted through the store's mutable documents.  Exclusion edits
re-rank from the stored matrix; load flows never run here.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import PlainTextResponse
from pydantic import BaseModel

from .deviation import INDICATORS
from .heatmap import export_heatmap, heatmap_to_document
from .pipeline import (
    AnalysisStore,
    TriageNote,
    list_runs,
    load_store,
    merged_candidates,
    rerank,
    save_mutable,
    valid_triage_status,
)
from .ranking import ExclusionWindow, export_candidates


@dataclass
class _Handle:
    store: AnalysisStore
    lock: threading.Lock = field(default_factory=threading.Lock)


class TriageBody(BaseModel):
    status: str
    comment: str = ""
    version: int = 0


class WindowBody(BaseModel):
    start: date
    end: date


class ExclusionsBody(BaseModel):
    version: int
    windows: list[WindowBody]


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat().replace("+00:00", "Z")


def _none_nan(value: float) -> float | None:
    return None if math.isnan(value) else value


def create_app(store_root: str | Path) -> FastAPI:
    root = Path(store_root)
    app = FastAPI(title="voltage-deviation triage service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    handles: dict[str, _Handle] = {}
    registry_lock = threading.Lock()

    def handle_of(run_id: str) -> _Handle:
        with registry_lock:
            if run_id not in handles:
                try:
                    handles[run_id] = _Handle(load_store(root, run_id))
                except FileNotFoundError:
                    raise HTTPException(404, f"unknown run: {run_id}") from None
            return handles[run_id]

    def candidates_payload(store: AnalysisStore) -> dict:
        rows = []
        for rec in merged_candidates(store):
            note = store.annotations.get(rec.meter_id)
            rows.append(
                {
                    "rank": rec.rank,
                    "meter_id": rec.meter_id,
                    "terminal_id": rec.terminal_id,
                    "dv_min_mean": rec.dv_min_mean,
                    "dv_min_max": rec.dv_min_max,
                    "pattern": {
                        "kind": rec.pattern.kind,
                        "marker": rec.pattern.marker.isoformat()
                        if rec.pattern.marker
                        else None,
                    },
                    "triage": rec.triage,
                    "comment": rec.comment,
                    "version": note.version if note else 0,
                }
            )
        return {
            "run_id": store.run_id,
            "exclusions": {
                "version": store.exclusions_version,
                "windows": [
                    {"start": w.start.isoformat(), "end": w.end.isoformat()}
                    for w in store.exclusions
                ],
            },
            "candidates": rows,
        }

    @app.get("/runs")
    def runs() -> list[dict]:
        return list_runs(root)

    @app.get("/runs/{run_id}/heatmap")
    def heatmap(run_id: str, indicator: str = "dv_min", top: int | None = None) -> dict:
        store = handle_of(run_id).store
        if indicator not in INDICATORS:
            raise HTTPException(422, f"unknown indicator: {indicator}")
        if top is not None and top < 1:
            raise HTTPException(422, "top must be >= 1")
        return heatmap_to_document(export_heatmap(store, indicator, top))

    @app.get("/runs/{run_id}/candidates")
    def candidates(run_id: str) -> dict:
        return candidates_payload(handle_of(run_id).store)

    @app.get("/runs/{run_id}/meters/{meter_id}/series")
    def series(run_id: str, meter_id: str) -> dict:
        store = handle_of(run_id).store
        if meter_id not in store.matrix.meter_pos:
            raise HTTPException(404, f"unknown meter: {meter_id}")
        pattern = store.patterns.get(meter_id)
        return {
            "meter_id": meter_id,
            "days": [d.isoformat() for d in store.matrix.days],
            "indicators": {
                name: [_none_nan(v) for v in store.matrix.row(name, meter_id)]
                for name in INDICATORS
            },
            "simulated": {
                name: [_none_nan(v) for v in store.sim_stats.row(name, meter_id)]
                for name in store.sim_stats.layers
            },
            "measured": {
                name: [_none_nan(v) for v in store.meas_stats.row(name, meter_id)]
                for name in store.meas_stats.layers
            },
            "pattern": {
                "kind": pattern.kind if pattern else "quiet",
                "marker": pattern.marker.isoformat()
                if pattern and pattern.marker
                else None,
            },
            "threshold": store.config.hot_threshold,
        }

    @app.put("/runs/{run_id}/candidates/{meter_id}/triage")
    def put_triage(run_id: str, meter_id: str, body: TriageBody) -> dict:
        handle = handle_of(run_id)
        with handle.lock:
            store = handle.store
            if meter_id not in store.ranked_meters:
                raise HTTPException(404, f"meter not in current ranking: {meter_id}")
            if not valid_triage_status(body.status):
                raise HTTPException(422, f"invalid triage status: {body.status}")
            note = store.annotations.get(meter_id)
            current = note.version if note else 0
            if body.version != current:
                raise HTTPException(
                    409,
                    {
                        "message": "stale triage version",
                        "meter_id": meter_id,
                        "version": current,
                        "status": note.status if note else "unreviewed",
                        "comment": note.comment if note else "",
                    },
                )
            updated = TriageNote(
                status=body.status,
                comment=body.comment,
                updated_at=_utcnow(),
                version=current + 1,
            )
            store.annotations[meter_id] = updated
            save_mutable(store, root)
            return {
                "meter_id": meter_id,
                "status": updated.status,
                "comment": updated.comment,
                "version": updated.version,
                "updated_at": updated.updated_at,
            }

    @app.put("/runs/{run_id}/exclusions")
    def put_exclusions(run_id: str, body: ExclusionsBody) -> dict:
        handle = handle_of(run_id)
        with handle.lock:
            store = handle.store
            if body.version != store.exclusions_version:
                raise HTTPException(
                    409,
                    {
                        "message": "stale exclusions version",
                        "version": store.exclusions_version,
                    },
                )
            try:
                windows = [ExclusionWindow(w.start, w.end) for w in body.windows]
            except ValueError as exc:
                raise HTTPException(422, str(exc)) from None
            store.exclusions = windows
            store.exclusions_version += 1
            rerank(store)
            save_mutable(store, root)
            return candidates_payload(store)

    @app.get("/runs/{run_id}/export/candidates.csv")
    def export_csv(run_id: str) -> PlainTextResponse:
        store = handle_of(run_id).store
        return PlainTextResponse(
            export_candidates(merged_candidates(store)),
            media_type="text/csv; charset=utf-8",
        )

    return app
