/** Shell: run selection, indicator and filter controls, view composition.
 *
 * Every mutation round-trips through the API and the views re-render
 * from server responses; nothing is re-scored client-side.  API failures
 * raise a banner and keep the last good view on screen.
 */

import { exportUrl, getCandidates, getHeatmap, getSeries, listRuns, putExclusions } from "./api";
import { CandidatesTable } from "./candidates";
import { DrilldownPanel } from "./drilldown";
import { ExclusionsPanel } from "./exclusions";
import { HeatmapView } from "./heatmap";
import { TriagePanel } from "./triage";
import { initialViewState, INDICATORS, isIndicator, selectMeter } from "./types";
import type { CandidatesPayload, ExclusionWindow, HeatmapDoc, ViewState } from "./types";

export class App {
  readonly ready: Promise<void>;
  state: ViewState = initialViewState();

  private candidatesPayload: CandidatesPayload | null = null;
  private heatmapDoc: HeatmapDoc | null = null;

  private runSelect!: HTMLSelectElement;
  private banner!: HTMLDivElement;
  private exportLink!: HTMLAnchorElement;
  private heatmap!: HeatmapView;
  private table!: CandidatesTable;
  private drilldown!: DrilldownPanel;
  private triage!: TriagePanel;
  private exclusions!: ExclusionsPanel;

  constructor(private readonly root: HTMLElement) {
    this.buildShell();
    this.ready = this.start();
  }

  private buildShell(): void {
    this.root.textContent = "";

    const header = document.createElement("header");
    const title = document.createElement("h1");
    title.textContent = "voltage-deviation triage";
    header.appendChild(title);

    this.banner = document.createElement("div");
    this.banner.id = "error-banner";
    this.banner.style.display = "none";
    header.appendChild(this.banner);

    const controls = document.createElement("div");
    controls.className = "controls";

    this.runSelect = document.createElement("select");
    this.runSelect.id = "run-select";
    this.runSelect.addEventListener("change", () => {
      void this.loadRun(this.runSelect.value);
    });
    controls.appendChild(labeled("run", this.runSelect));

    const indicatorSelect = document.createElement("select");
    indicatorSelect.id = "indicator-select";
    for (const name of INDICATORS) {
      const option = document.createElement("option");
      option.value = name;
      option.textContent = name;
      indicatorSelect.appendChild(option);
    }
    indicatorSelect.value = this.state.indicator;
    indicatorSelect.addEventListener("change", () => {
      if (!isIndicator(indicatorSelect.value)) return;
      this.state.indicator = indicatorSelect.value;
      void this.refresh();
    });
    controls.appendChild(labeled("indicator", indicatorSelect));

    const topInput = document.createElement("input");
    topInput.id = "topk-input";
    topInput.type = "number";
    topInput.min = "1";
    topInput.value = String(this.state.topK);
    topInput.addEventListener("change", () => {
      const top = Number(topInput.value);
      if (!Number.isInteger(top) || top < 1) {
        topInput.value = String(this.state.topK); // invalid input never reaches the API
        return;
      }
      this.state.topK = top;
      void this.refresh();
    });
    controls.appendChild(labeled("top", topInput));

    const sortToggle = document.createElement("select");
    sortToggle.id = "sort-toggle";
    for (const mode of ["rank", "meter"] as const) {
      const option = document.createElement("option");
      option.value = mode;
      option.textContent = mode === "rank" ? "by rank" : "by meter id";
      sortToggle.appendChild(option);
    }
    sortToggle.addEventListener("change", () => {
      this.state.sortMode = sortToggle.value === "meter" ? "meter" : "rank";
      this.renderTable();
    });
    controls.appendChild(labeled("sort", sortToggle));

    this.exportLink = document.createElement("a");
    this.exportLink.id = "export-link";
    this.exportLink.textContent = "export candidates.csv";
    this.exportLink.setAttribute("download", "candidates.csv");
    controls.appendChild(this.exportLink);

    header.appendChild(controls);
    this.root.appendChild(header);

    const heatmapHost = section(this.root, "heatmap");
    const main = document.createElement("div");
    main.className = "panels";
    this.root.appendChild(main);
    const tableHost = section(main, "candidates");
    const drilldownHost = section(main, "drilldown");
    const triageHost = section(main, "triage");
    const exclusionsHost = section(main, "exclusions");

    this.heatmap = new HeatmapView(heatmapHost, {
      onSelectRow: (meterId) => void this.select(meterId),
      onBrush: (start, end) => void this.applyBrush(start, end),
    });
    this.table = new CandidatesTable(tableHost, (meterId) => void this.select(meterId));
    this.drilldown = new DrilldownPanel(drilldownHost);
    this.triage = new TriagePanel(triageHost, {
      onSaved: () => this.refreshCandidates(),
      onError: (message) => this.showError(message),
    });
    this.exclusions = new ExclusionsPanel(exclusionsHost, {
      onApply: (windows, version) => this.applyExclusions(windows, version),
    });
  }

  private async start(): Promise<void> {
    try {
      const runs = await listRuns();
      this.runSelect.textContent = "";
      for (const run of runs) {
        const option = document.createElement("option");
        option.value = run.run_id;
        option.textContent = `${run.run_id} (${run.created_at.slice(0, 10)})`;
        this.runSelect.appendChild(option);
      }
      const first = runs[0];
      if (first) await this.loadRun(first.run_id);
    } catch (err) {
      this.showError(err instanceof Error ? err.message : String(err));
    }
  }

  async loadRun(runId: string): Promise<void> {
    this.state = { ...initialViewState(), run: runId, topK: this.state.topK, indicator: this.state.indicator };
    this.runSelect.value = runId;
    this.exportLink.href = exportUrl(runId);
    this.drilldown.clear();
    this.triage.clear();
    await this.refresh();
  }

  /** Re-fetch heatmap and candidates for the current view settings. */
  async refresh(): Promise<void> {
    const run = this.state.run;
    if (!run) return;
    try {
      const [doc, payload] = await Promise.all([
        getHeatmap(run, this.state.indicator, this.state.topK),
        getCandidates(run),
      ]);
      this.heatmapDoc = doc;
      this.candidatesPayload = payload;
      this.clearError();
      this.renderAll();
    } catch (err) {
      // keep the last good view; only the banner changes
      this.showError(err instanceof Error ? err.message : String(err));
    }
  }

  private async refreshCandidates(): Promise<void> {
    const run = this.state.run;
    if (!run) return;
    try {
      this.candidatesPayload = await getCandidates(run);
      this.clearError();
      this.renderTable();
      const meterId = this.state.selectedMeter;
      if (meterId) {
        const row = this.table.rowOf(meterId);
        if (row) this.triage.show(run, row);
      }
    } catch (err) {
      this.showError(err instanceof Error ? err.message : String(err));
    }
  }

  private renderAll(): void {
    if (this.heatmapDoc) this.heatmap.render(this.heatmapDoc);
    this.renderTable();
    const payload = this.candidatesPayload;
    if (payload && this.heatmapDoc) {
      this.exclusions.update(
        payload.exclusions.windows,
        payload.exclusions.version,
        this.heatmapDoc.days,
      );
    }
  }

  private renderTable(): void {
    const payload = this.candidatesPayload;
    if (!payload) return;
    this.table.update(payload.candidates, this.state.topK, this.state.sortMode, this.state.selectedMeter);
    const meterId = this.state.selectedMeter;
    if (meterId && !this.table.displayedMeters().includes(meterId)) {
      this.state = selectMeter(this.state, null, []);
      this.drilldown.clear();
      this.triage.clear();
    }
  }

  async select(meterId: string): Promise<void> {
    const run = this.state.run;
    if (!run) return;
    const displayed = this.table.displayedMeters();
    this.state = selectMeter(this.state, meterId, displayed);
    if (this.state.selectedMeter === null) return;
    this.renderTable();
    try {
      const series = await getSeries(run, meterId);
      this.drilldown.render(series);
      const row = this.table.rowOf(meterId);
      if (row) this.triage.show(run, row);
      this.clearError();
    } catch (err) {
      this.showError(err instanceof Error ? err.message : String(err));
    }
  }

  /** Commit a dragged day range as one more exclusion window. */
  async applyBrush(startDay: string, endDay: string): Promise<void> {
    const { windows, version } = this.exclusions.current();
    this.state.pendingBrush = { startDay, endDay };
    await this.applyExclusions([...windows, { start: startDay, end: endDay }], version);
    this.state.pendingBrush = null;
  }

  private async applyExclusions(windows: ExclusionWindow[], version: number): Promise<void> {
    const run = this.state.run;
    if (!run) return;
    try {
      this.candidatesPayload = await putExclusions(run, version, windows);
      // ranking changed; pull the matching heatmap
      this.heatmapDoc = await getHeatmap(run, this.state.indicator, this.state.topK);
      this.clearError();
      this.renderAll();
    } catch (err) {
      this.showError(err instanceof Error ? err.message : String(err));
      await this.refresh(); // stale version: surface the server's current state
    }
  }

  displayedHeatmapMeters(): string[] {
    return this.heatmap.displayedMeters();
  }

  displayedTableMeters(): string[] {
    return this.table.displayedMeters();
  }

  private showError(message: string): void {
    this.banner.textContent = `${message} `;
    const retry = document.createElement("button");
    retry.textContent = "retry";
    retry.addEventListener("click", () => void this.refresh());
    this.banner.appendChild(retry);
    this.banner.style.display = "block";
  }

  private clearError(): void {
    this.banner.style.display = "none";
    this.banner.textContent = "";
  }
}

function labeled(text: string, control: HTMLElement): HTMLLabelElement {
  const label = document.createElement("label");
  label.textContent = `${text} `;
  label.appendChild(control);
  return label;
}

function section(parent: HTMLElement, id: string): HTMLElement {
  const el = document.createElement("section");
  el.id = id;
  parent.appendChild(el);
  return el;
}
