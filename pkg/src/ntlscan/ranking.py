"""Candidate ranking from the daily minimum-voltage deviation layer.

The per-meter severity criterion is the signed maximum of daily dv_min
over the included window (it captures short but large deviations); the
mean over the same window is reported alongside.  Temporal behaviour is
classified into coarse patterns so the expert can spot deviations that
ceased after an intervention or started mid-window.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from datetime import date
from typing import Iterable, Mapping, Sequence

import numpy as np

from .deviation import IndicatorMatrix
from .grid_model import Network

DEFAULT_TOP_K = 15
DEFAULT_HOT_THRESHOLD = 0.1  # p.u.; large-deviation cutoff

TRIAGE_STATUSES = (
    "unreviewed",
    "field_inspection_candidate",
    "validation_candidate",
    "discarded",
)

CANDIDATE_HEADER = (
    "rank,meter_id,terminal_id,dv_min_mean,dv_min_max,pattern,triage,comment"
)


@dataclass(frozen=True)
class ExclusionWindow:
    """Half-open [start, end) date range removed from scoring."""

    start: date
    end: date

    def __post_init__(self) -> None:
        if not self.start < self.end:
            raise ValueError(f"exclusion window start {self.start} must precede end {self.end}")

    def __contains__(self, day: date) -> bool:
        return self.start <= day < self.end

    @classmethod
    def parse(cls, text: str) -> "ExclusionWindow":
        """Parse ``YYYY-MM-DD..YYYY-MM-DD``."""
        try:
            start_s, end_s = text.split("..")
            return cls(date.fromisoformat(start_s), date.fromisoformat(end_s))
        except ValueError as exc:
            raise ValueError(f"bad exclusion window {text!r}: {exc}") from None


@dataclass
class SeverityScore:
    dv_min_mean: float
    dv_min_max: float
    present_days: int


@dataclass
class Pattern:
    kind: str  # quiet | persistent | ceased | onset | intermittent
    marker: date | None = None  # cessation / onset day

    def render(self) -> str:
        if self.marker is None:
            return self.kind
        return f"{self.kind}:{self.marker.isoformat()}"

    @classmethod
    def parse(cls, text: str) -> "Pattern":
        kind, _, marker = text.partition(":")
        return cls(kind, date.fromisoformat(marker) if marker else None)


@dataclass
class PatternParams:
    p_hi: float = 0.5  # hot fraction needed in both halves for "persistent"
    tail_days: int = 21  # quiet run at an end that makes ceased/onset
    min_hot: int = 5


@dataclass
class CandidateRecord:
    rank: int
    meter_id: str
    terminal_id: str
    dv_min_mean: float
    dv_min_max: float
    pattern: Pattern = field(default_factory=lambda: Pattern("quiet"))
    triage: str = "unreviewed"
    comment: str = ""


def included_day_mask(days: Sequence[date], exclusions: Iterable[ExclusionWindow]) -> np.ndarray:
    mask = np.ones(len(days), dtype=bool)
    for window in exclusions:
        for j, day in enumerate(days):
            if day in window:
                mask[j] = False
    return mask


def severity_scores(
    matrix: IndicatorMatrix, exclusions: Iterable[ExclusionWindow] = ()
) -> dict[str, SeverityScore]:
    """Signed max and mean of dv_min per meter over non-excluded days.

    Meters with no included present cell are absent from the result.
    """
    included = included_day_mask(matrix.days, exclusions)
    layer = matrix.layers["dv_min"]
    scores: dict[str, SeverityScore] = {}
    for i, meter_id in enumerate(matrix.meters):
        row = layer[i, included]
        row = row[~np.isnan(row)]
        if row.size == 0:
            continue
        scores[meter_id] = SeverityScore(
            dv_min_mean=float(row.mean()),
            dv_min_max=float(row.max()),
            present_days=int(row.size),
        )
    return scores


def rank_candidates(
    scores: Mapping[str, SeverityScore],
    network: Network,
    top_k: int = DEFAULT_TOP_K,
    patterns: Mapping[str, Pattern] | None = None,
) -> list[CandidateRecord]:
    """Top-k meters by dv_min_max, descending.

    Ties break by dv_min_mean descending, then meter id ascending, so the
    result never depends on iteration order.  Fewer meters than top_k
    yields a shorter list.
    """
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    order = sorted(
        scores.items(), key=lambda kv: (-kv[1].dv_min_max, -kv[1].dv_min_mean, kv[0])
    )
    records = []
    for rank, (meter_id, score) in enumerate(order[:top_k], start=1):
        records.append(
            CandidateRecord(
                rank=rank,
                meter_id=meter_id,
                terminal_id=network.meter(meter_id).bus_id,
                dv_min_mean=score.dv_min_mean,
                dv_min_max=score.dv_min_max,
                pattern=(patterns or {}).get(meter_id, Pattern("quiet")),
            )
        )
    return records


def pattern_classify(
    days: Sequence[date],
    values: Sequence[float] | np.ndarray,
    threshold: float = DEFAULT_HOT_THRESHOLD,
    params: PatternParams | None = None,
) -> Pattern:
    """Classify a daily dv_min series (NaN = missing) into a coarse pattern.

    A day is hot iff its value exceeds the threshold.  quiet: no hot days.
    persistent: hot fraction of present days >= p_hi in both window
    halves.  ceased/onset: all hot activity (at least min_hot days of it)
    ends/starts at least tail_days from the window edge; the marker is the
    last/first hot day.  Anything else is intermittent.
    """
    if not threshold > 0:
        raise ValueError("threshold must be > 0")
    params = params or PatternParams()
    vals = np.asarray(values, dtype=float)
    if vals.size != len(days):
        raise ValueError("days and values must align")
    if vals.size == 0:
        return Pattern("quiet")
    present = ~np.isnan(vals)
    hot = present & (vals > threshold)
    hot_idx = np.flatnonzero(hot)
    if hot_idx.size == 0:
        return Pattern("quiet")

    n = vals.size
    half = n // 2
    fractions = []
    for sl in (slice(0, half), slice(half, n)):
        n_present = int(present[sl].sum())
        fractions.append(int(hot[sl].sum()) / n_present if n_present else 0.0)
    if all(f >= params.p_hi for f in fractions):
        return Pattern("persistent")

    first_hot, last_hot = int(hot_idx[0]), int(hot_idx[-1])
    enough = hot_idx.size >= params.min_hot
    if enough and (n - 1 - last_hot) >= params.tail_days:
        return Pattern("ceased", days[last_hot])
    if enough and first_hot >= params.tail_days:
        return Pattern("onset", days[first_hot])
    return Pattern("intermittent")


def classify_all(
    matrix: IndicatorMatrix,
    exclusions: Iterable[ExclusionWindow] = (),
    threshold: float = DEFAULT_HOT_THRESHOLD,
    params: PatternParams | None = None,
) -> dict[str, Pattern]:
    """Pattern per meter over the dv_min layer, excluded days masked out."""
    included = included_day_mask(matrix.days, exclusions)
    masked_days = [d for d, keep in zip(matrix.days, included) if keep]
    out: dict[str, Pattern] = {}
    for meter_id in matrix.meters:
        row = matrix.row("dv_min", meter_id)[included]
        out[meter_id] = pattern_classify(masked_days, row, threshold, params)
    return out


def export_candidates(records: Sequence[CandidateRecord]) -> str:
    """Candidate list as CSV with 4-decimal indicator columns."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CANDIDATE_HEADER.split(","))
    for r in records:
        writer.writerow(
            [
                r.rank,
                r.meter_id,
                r.terminal_id,
                f"{r.dv_min_mean:.4f}",
                f"{r.dv_min_max:.4f}",
                r.pattern.render(),
                r.triage,
                r.comment,
            ]
        )
    return buf.getvalue()


def candidates_to_document(records: Sequence[CandidateRecord]) -> list[dict]:
    """JSON-able candidate rows for the service layer."""
    return [
        {
            "rank": r.rank,
            "meter_id": r.meter_id,
            "terminal_id": r.terminal_id,
            "dv_min_mean": r.dv_min_mean,
            "dv_min_max": r.dv_min_max,
            "pattern": {"kind": r.pattern.kind, "marker": (
                r.pattern.marker.isoformat() if r.pattern.marker else None
            )},
            "triage": r.triage,
            "comment": r.comment,
        }
        for r in records
    ]


def pattern_marker_valid(p: Pattern) -> bool:
    if p.kind in ("ceased", "onset"):
        return p.marker is not None
    return p.marker is None
