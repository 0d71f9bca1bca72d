/** Interactive meter-by-day grid: hover readout, row selection, day brushing.
 *
 * Dragging across day columns commits an exclusion brush on release; a
 * click that never leaves its column selects the row instead, so a
 * zero-width brush can never fire a mutation.
 */

import { colorFor, MISSING_COLOR } from "./color";
import { fmtPu, monthTicks } from "./format";
import type { HeatmapDoc } from "./types";

const CELL = 14; // px, both axes
const LABEL_W = 150;
const AXIS_H = 26;
const SVG_NS = "http://www.w3.org/2000/svg";

export interface HeatmapHandlers {
  onSelectRow(meterId: string): void;
  /** [startDay, endDay): half-open ISO range covering the dragged columns */
  onBrush(startDay: string, endDay: string): void;
}

interface DragState {
  anchorCol: number;
  currentCol: number;
  meterId: string;
}

export class HeatmapView {
  private doc: HeatmapDoc | null = null;
  private drag: DragState | null = null;
  private overlay: SVGRectElement | null = null;
  private tooltip: HTMLDivElement;

  constructor(
    private readonly root: HTMLElement,
    private readonly handlers: HeatmapHandlers,
  ) {
    this.tooltip = document.createElement("div");
    this.tooltip.className = "cell-tooltip";
    this.tooltip.style.display = "none";
  }

  render(doc: HeatmapDoc): void {
    this.doc = doc;
    this.drag = null;
    this.root.textContent = "";

    if (doc.meters.length === 0) {
      const empty = document.createElement("p");
      empty.className = "empty-state";
      empty.textContent = "no rows to display";
      this.root.appendChild(empty);
      return;
    }

    const width = LABEL_W + doc.days.length * CELL;
    const height = AXIS_H + doc.meters.length * CELL;
    const svg = document.createElementNS(SVG_NS, "svg");
    svg.setAttribute("width", String(width));
    svg.setAttribute("height", String(height));
    svg.setAttribute("data-role", "heatmap-grid");

    for (const tick of monthTicks(doc.days)) {
      const label = document.createElementNS(SVG_NS, "text");
      label.setAttribute("x", String(LABEL_W + tick.index * CELL));
      label.setAttribute("y", String(AXIS_H - 8));
      label.setAttribute("class", "axis-label");
      label.textContent = tick.label;
      svg.appendChild(label);
    }

    doc.meters.forEach((meterId, row) => {
      const rank = doc.ranks[row];
      const label = document.createElementNS(SVG_NS, "text");
      label.setAttribute("x", String(LABEL_W - 8));
      label.setAttribute("y", String(AXIS_H + row * CELL + CELL - 3));
      label.setAttribute("text-anchor", "end");
      label.setAttribute("class", "row-label");
      label.setAttribute("data-meter", meterId);
      label.textContent = rank === undefined ? meterId : `${rank}. ${meterId}`;
      svg.appendChild(label);

      const values = doc.values[row] ?? [];
      doc.days.forEach((day, col) => {
        const value = values[col] ?? null;
        const rect = document.createElementNS(SVG_NS, "rect");
        rect.setAttribute("x", String(LABEL_W + col * CELL));
        rect.setAttribute("y", String(AXIS_H + row * CELL));
        rect.setAttribute("width", String(CELL - 1));
        rect.setAttribute("height", String(CELL - 1));
        rect.setAttribute("fill", value === null ? MISSING_COLOR : colorFor(value, doc.clamp));
        rect.setAttribute("data-meter", meterId);
        rect.setAttribute("data-day", day);
        rect.setAttribute("data-col", String(col));
        svg.appendChild(rect);
      });
    });

    svg.addEventListener("pointerdown", (e) => this.onPointerDown(e));
    svg.addEventListener("pointerover", (e) => this.onPointerOver(e));
    svg.addEventListener("pointerup", () => this.onPointerUp());
    svg.addEventListener("pointerleave", () => this.hideTooltip());

    this.root.appendChild(svg);
    this.root.appendChild(this.tooltip);
  }

  /** Row order currently on screen, rank order top to bottom. */
  displayedMeters(): string[] {
    return this.doc ? [...this.doc.meters] : [];
  }

  private cellOf(e: Event): { meterId: string; day: string; col: number } | null {
    const target = e.target as Element | null;
    if (!target || target.tagName !== "rect" || !target.hasAttribute("data-col")) return null;
    return {
      meterId: target.getAttribute("data-meter") ?? "",
      day: target.getAttribute("data-day") ?? "",
      col: Number(target.getAttribute("data-col")),
    };
  }

  private onPointerDown(e: Event): void {
    const cell = this.cellOf(e);
    if (!cell) return;
    this.drag = { anchorCol: cell.col, currentCol: cell.col, meterId: cell.meterId };
  }

  private onPointerOver(e: Event): void {
    const cell = this.cellOf(e);
    if (!cell || !this.doc) {
      this.hideTooltip();
      return;
    }
    const row = this.doc.meters.indexOf(cell.meterId);
    const value = this.doc.values[row]?.[cell.col] ?? null;
    this.showTooltip(cell.meterId, cell.day, value, e);
    if (this.drag) {
      this.drag.currentCol = cell.col;
      this.drawOverlay();
    }
  }

  private onPointerUp(): void {
    const drag = this.drag;
    this.drag = null;
    this.clearOverlay();
    if (!drag || !this.doc) return;
    if (drag.anchorCol === drag.currentCol) {
      this.handlers.onSelectRow(drag.meterId);
      return;
    }
    const lo = Math.min(drag.anchorCol, drag.currentCol);
    const hi = Math.max(drag.anchorCol, drag.currentCol);
    const start = this.doc.days[lo];
    const endDay = this.doc.days[hi];
    if (start === undefined || endDay === undefined) return;
    this.handlers.onBrush(start, nextDay(endDay));
  }

  private drawOverlay(): void {
    if (!this.doc || !this.drag) return;
    const svg = this.root.querySelector("svg");
    if (!svg) return;
    if (!this.overlay) {
      this.overlay = document.createElementNS(SVG_NS, "rect");
      this.overlay.setAttribute("class", "brush-overlay");
      svg.appendChild(this.overlay);
    }
    const lo = Math.min(this.drag.anchorCol, this.drag.currentCol);
    const hi = Math.max(this.drag.anchorCol, this.drag.currentCol);
    this.overlay.setAttribute("x", String(LABEL_W + lo * CELL));
    this.overlay.setAttribute("y", String(AXIS_H));
    this.overlay.setAttribute("width", String((hi - lo + 1) * CELL));
    this.overlay.setAttribute("height", String(this.doc.meters.length * CELL));
  }

  private clearOverlay(): void {
    this.overlay?.remove();
    this.overlay = null;
  }

  private showTooltip(meterId: string, day: string, value: number | null, e: Event): void {
    this.tooltip.textContent = `${meterId} · ${day} · ${fmtPu(value)}`;
    this.tooltip.style.display = "block";
    const mouse = e as MouseEvent;
    this.tooltip.style.left = `${(mouse.pageX ?? 0) + 12}px`;
    this.tooltip.style.top = `${(mouse.pageY ?? 0) + 12}px`;
  }

  private hideTooltip(): void {
    this.tooltip.style.display = "none";
  }
}

export function nextDay(isoDay: string): string {
  const d = new Date(`${isoDay}T00:00:00Z`);
  d.setUTCDate(d.getUTCDate() + 1);
  return d.toISOString().slice(0, 10);
}
