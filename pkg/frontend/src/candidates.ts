/** Ranked candidate table; ordering always comes from the server's ranks. */

import type { CandidateRow, SortMode } from "./types";

const COLUMNS = ["rank", "meter", "terminal", "dv_min mean", "dv_min max", "pattern", "triage", "comment"];

export class CandidatesTable {
  private rows: CandidateRow[] = [];

  constructor(
    private readonly root: HTMLElement,
    private readonly onSelect: (meterId: string) => void,
  ) {}

  update(rows: CandidateRow[], topK: number, sortMode: SortMode, selected: string | null): void {
    // top-k is a display filter over the server ranking, never a re-scoring
    this.rows = rows.filter((r) => r.rank <= topK);
    if (sortMode === "meter") {
      this.rows = [...this.rows].sort((a, b) => a.meter_id.localeCompare(b.meter_id));
    }
    this.render(selected);
  }

  displayedMeters(): string[] {
    return this.rows.map((r) => r.meter_id);
  }

  rowOf(meterId: string): CandidateRow | undefined {
    return this.rows.find((r) => r.meter_id === meterId);
  }

  private render(selected: string | null): void {
    this.root.textContent = "";
    const table = document.createElement("table");
    table.setAttribute("data-role", "candidate-table");

    const head = document.createElement("tr");
    for (const column of COLUMNS) {
      const th = document.createElement("th");
      th.textContent = column;
      head.appendChild(th);
    }
    table.appendChild(head);

    for (const row of this.rows) {
      const tr = document.createElement("tr");
      tr.setAttribute("data-meter", row.meter_id);
      if (row.meter_id === selected) tr.className = "selected";
      tr.addEventListener("click", () => this.onSelect(row.meter_id));

      const pattern = row.pattern.marker
        ? `${row.pattern.kind}:${row.pattern.marker}`
        : row.pattern.kind;
      const cells = [
        String(row.rank),
        row.meter_id,
        row.terminal_id,
        row.dv_min_mean.toFixed(4),
        row.dv_min_max.toFixed(4),
        pattern,
        row.triage,
        row.comment,
      ];
      cells.forEach((text, i) => {
        const td = document.createElement("td");
        td.textContent = text;
        if (i === 6) td.setAttribute("data-role", "triage-cell");
        tr.appendChild(td);
      });
      table.appendChild(tr);
    }
    this.root.appendChild(table);
  }
}
