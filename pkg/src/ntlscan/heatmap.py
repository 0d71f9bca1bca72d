"""Meter-by-day heatmap documents and their vector rendering.

The color convention follows the review workflow: negative deviations
(measured daily minimum above the simulated one) go green, positive go
red, missing cells grey.  Values are clamped for display only; the
document always carries the raw numbers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

from .deviation import INDICATORS
from .ranking import ExclusionWindow, included_day_mask, rank_candidates, severity_scores

if TYPE_CHECKING:  # only for annotations; avoids an import cycle
    from .pipeline import AnalysisStore

DEFAULT_CLAMP = 0.15  # p.u.; the display range that keeps outliers readable

_NEGATIVE_POLE = (27, 120, 55)  # green
_POSITIVE_POLE = (165, 15, 21)  # red
_WHITE = (247, 247, 247)
MISSING_COLOR = "#b0b0b0"


@dataclass
class HeatmapDocument:
    """Renderable meter x day grid for one indicator.

    ``values`` holds raw numbers row-major with None for missing or
    blanked cells; ``ranks`` is parallel to ``meters`` when the document
    was restricted to ranked rows, else empty.
    """

    indicator: str
    meters: list[str]
    days: list[date]
    values: list[list[float | None]]
    clamp: float = DEFAULT_CLAMP
    ranks: list[int] = field(default_factory=list)
    scale: dict = field(
        default_factory=lambda: {
            "kind": "diverging",
            "negative": "green",
            "positive": "red",
            "missing": "grey",
        }
    )

    def __post_init__(self) -> None:
        if self.indicator not in INDICATORS:
            raise ValueError(f"unknown indicator: {self.indicator}")
        if not self.clamp > 0:
            raise ValueError("clamp must be > 0")
        if len(self.values) != len(self.meters):
            raise ValueError("one value row per meter required")
        for row in self.values:
            if len(row) != len(self.days):
                raise ValueError("value rows must match the day axis")
        if self.ranks and len(self.ranks) != len(self.meters):
            raise ValueError("ranks must parallel meters")


def export_heatmap(
    store: "AnalysisStore",
    indicator: str,
    top_k: int | None = None,
    exclusions: Iterable[ExclusionWindow] | None = None,
) -> HeatmapDocument:
    """Heatmap for a run: all meters in model order, or the ranked top rows.

    With ``top_k``, row order is severity rank order, recomputed with the
    effective exclusions so the row set always equals the ranking the
    rest of the toolkit would report.  Excluded day columns are blanked.
    """
    if indicator not in INDICATORS:
        raise ValueError(f"unknown indicator: {indicator}")
    matrix = store.matrix
    effective = list(store.exclusions if exclusions is None else exclusions)

    ranks: list[int] = []
    if top_k is None:
        meters = list(matrix.meters)
    else:
        records = rank_candidates(
            severity_scores(matrix, effective), store.network, top_k, store.patterns
        )
        meters = [r.meter_id for r in records]
        ranks = [r.rank for r in records]

    included = included_day_mask(matrix.days, effective)
    layer = matrix.layers[indicator]
    pos = matrix.meter_pos
    values: list[list[float | None]] = []
    for meter_id in meters:
        row = layer[pos[meter_id]]
        values.append(
            [
                None if (not included[j] or np.isnan(row[j])) else float(row[j])
                for j in range(len(matrix.days))
            ]
        )
    return HeatmapDocument(
        indicator=indicator,
        meters=meters,
        days=list(matrix.days),
        values=values,
        ranks=ranks,
    )


def color_for(value: float | None, clamp: float = DEFAULT_CLAMP) -> str:
    """Pure value-to-color mapping: green pole, white center, red pole."""
    if value is None:
        return MISSING_COLOR
    t = max(-1.0, min(1.0, value / clamp))
    pole = _POSITIVE_POLE if t >= 0 else _NEGATIVE_POLE
    a = abs(t)
    rgb = tuple(round(w + (p - w) * a) for w, p in zip(_WHITE, pole))
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def heatmap_to_document(doc: HeatmapDocument) -> dict:
    """JSON-able form served over HTTP and written by the CLI."""
    return {
        "indicator": doc.indicator,
        "meters": doc.meters,
        "ranks": doc.ranks,
        "days": [d.isoformat() for d in doc.days],
        "values": doc.values,
        "clamp": doc.clamp,
        "scale": doc.scale,
    }


def _month_ticks(days: Sequence[date]) -> list[tuple[int, str]]:
    ticks = []
    for j, d in enumerate(days):
        if j == 0 or d.day == 1:
            ticks.append((j, d.strftime("%b %Y")))
    return ticks


def render_svg(
    doc: HeatmapDocument,
    cell_width: float = 4.0,
    cell_height: float = 12.0,
    label_width: float = 90.0,
) -> str:
    """Self-contained SVG: one rect per present cell, labels, legend."""
    n_rows, n_cols = len(doc.meters), len(doc.days)
    top = 28.0
    width = label_width + n_cols * cell_width + 130.0
    height = top + max(n_rows, 1) * cell_height + 24.0

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" '
        f'height="{height:.0f}" font-family="sans-serif" font-size="9">',
        f'<rect width="{width:.0f}" height="{height:.0f}" fill="white"/>',
        f'<text x="{label_width}" y="12" font-size="11">{doc.indicator} '
        f"(p.u., clamp ±{doc.clamp:g})</text>",
    ]
    for i, meter_id in enumerate(doc.meters):
        y = top + i * cell_height
        label = f"{doc.ranks[i]}. {meter_id}" if doc.ranks else meter_id
        parts.append(
            f'<text x="{label_width - 4}" y="{y + cell_height - 3:.1f}" '
            f'text-anchor="end">{label}</text>'
        )
        row = doc.values[i]
        for j in range(n_cols):
            # missing cells are drawn too: grey communicates "no data"
            color = color_for(row[j], doc.clamp)
            x = label_width + j * cell_width
            parts.append(
                f'<rect x="{x:.1f}" y="{y:.1f}" width="{cell_width:.1f}" '
                f'height="{cell_height:.1f}" fill="{color}"/>'
            )
    axis_y = top + n_rows * cell_height + 12
    for j, label in _month_ticks(doc.days):
        x = label_width + j * cell_width
        parts.append(f'<text x="{x:.1f}" y="{axis_y:.1f}">{label}</text>')

    legend_x = label_width + n_cols * cell_width + 16
    steps = 24
    for k in range(steps):
        value = -doc.clamp + (2 * doc.clamp) * k / (steps - 1)
        parts.append(
            f'<rect x="{legend_x + k * 4:.1f}" y="{top:.1f}" width="4" height="10" '
            f'fill="{color_for(value, doc.clamp)}"/>'
        )
    parts.append(
        f'<text x="{legend_x:.1f}" y="{top + 22:.1f}">-{doc.clamp:g}</text>'
    )
    parts.append(
        f'<text x="{legend_x + steps * 4:.1f}" y="{top + 22:.1f}" '
        f'text-anchor="end">+{doc.clamp:g}</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
