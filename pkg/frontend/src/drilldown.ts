/** Per-meter drill-down: daily minimum deviation with threshold and pattern marks. */

import { fmtPu } from "./format";
import type { SeriesPayload } from "./types";

const SVG_NS = "http://www.w3.org/2000/svg";
const HEIGHT = 180;
const MARGIN = { top: 14, right: 16, bottom: 22, left: 52 };
const STEP = 7; // px per day

export class DrilldownPanel {
  constructor(private readonly root: HTMLElement) {}

  clear(): void {
    this.root.textContent = "";
  }

  render(series: SeriesPayload): void {
    this.root.textContent = "";

    const heading = document.createElement("h3");
    heading.textContent = series.meter_id;
    this.root.appendChild(heading);

    const badge = document.createElement("span");
    badge.className = `pattern-badge pattern-${series.pattern.kind}`;
    badge.textContent = series.pattern.marker
      ? `${series.pattern.kind} · ${series.pattern.marker}`
      : series.pattern.kind;
    this.root.appendChild(badge);

    const values = series.indicators.dv_min;
    const present = values.filter((v): v is number => v !== null);
    if (present.length === 0) {
      const empty = document.createElement("p");
      empty.className = "empty-state";
      empty.textContent = "no data for this meter";
      this.root.appendChild(empty);
      return;
    }

    const width = MARGIN.left + series.days.length * STEP + MARGIN.right;
    const innerH = HEIGHT - MARGIN.top - MARGIN.bottom;
    const lo = Math.min(-0.02, ...present);
    const hi = Math.max(series.threshold * 1.5, ...present);
    const y = (v: number) => MARGIN.top + ((hi - v) / (hi - lo)) * innerH;
    const x = (i: number) => MARGIN.left + i * STEP;

    const svg = document.createElementNS(SVG_NS, "svg");
    svg.setAttribute("width", String(width));
    svg.setAttribute("height", String(HEIGHT));
    svg.setAttribute("data-role", "series-chart");

    // zero and threshold reference lines; the threshold is what "hot" means
    svg.appendChild(refLine(x(0), x(series.days.length - 1), y(0), "zero-line"));
    const threshold = refLine(x(0), x(series.days.length - 1), y(series.threshold), "threshold-line");
    svg.appendChild(threshold);
    const thresholdLabel = document.createElementNS(SVG_NS, "text");
    thresholdLabel.setAttribute("x", String(4));
    thresholdLabel.setAttribute("y", String(y(series.threshold) + 4));
    thresholdLabel.setAttribute("class", "axis-label");
    thresholdLabel.textContent = series.threshold.toFixed(2);
    svg.appendChild(thresholdLabel);

    if (series.pattern.marker) {
      const at = series.days.indexOf(series.pattern.marker);
      if (at >= 0) {
        const mark = document.createElementNS(SVG_NS, "line");
        mark.setAttribute("x1", String(x(at)));
        mark.setAttribute("x2", String(x(at)));
        mark.setAttribute("y1", String(MARGIN.top));
        mark.setAttribute("y2", String(HEIGHT - MARGIN.bottom));
        mark.setAttribute("class", "pattern-marker");
        mark.setAttribute("data-marker", series.pattern.kind);
        svg.appendChild(mark);
      }
    }

    // gaps in the series stay gaps; each present stretch is its own subpath
    let path = "";
    let pen = false;
    values.forEach((v, i) => {
      if (v === null) {
        pen = false;
        return;
      }
      path += `${pen ? "L" : "M"}${x(i)},${y(v).toFixed(1)} `;
      pen = true;
    });
    const line = document.createElementNS(SVG_NS, "path");
    line.setAttribute("d", path.trim());
    line.setAttribute("class", "series-line");
    svg.appendChild(line);

    values.forEach((v, i) => {
      if (v === null) return;
      const dot = document.createElementNS(SVG_NS, "circle");
      dot.setAttribute("cx", String(x(i)));
      dot.setAttribute("cy", y(v).toFixed(1));
      dot.setAttribute("r", "2");
      dot.setAttribute("class", "series-dot");
      const day = series.days[i];
      dot.appendChild(title(`${day} · ${fmtPu(v)}`));
      svg.appendChild(dot);
    });

    const wrap = document.createElement("div");
    wrap.className = "chart-scroll";
    wrap.appendChild(svg);
    this.root.appendChild(wrap);
  }
}

function refLine(x1: number, x2: number, yPos: number, cls: string): SVGLineElement {
  const line = document.createElementNS(SVG_NS, "line");
  line.setAttribute("x1", String(x1));
  line.setAttribute("x2", String(x2));
  line.setAttribute("y1", yPos.toFixed(1));
  line.setAttribute("y2", yPos.toFixed(1));
  line.setAttribute("class", cls);
  return line;
}

function title(text: string): SVGTitleElement {
  const t = document.createElementNS(SVG_NS, "title");
  t.textContent = text;
  return t;
}
