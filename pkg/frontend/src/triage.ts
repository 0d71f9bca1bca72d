/** Triage form with optimistic concurrency: stale submits open a merge prompt,
 * never a silent overwrite. */

import { ApiError, putTriage } from "./api";
import { isTriageStatus, TRIAGE_STATUSES } from "./types";
import type { CandidateRow, TriageConflict, TriageStatus } from "./types";

export interface TriageHandlers {
  /** called after a successful write so tables can refresh */
  onSaved(): Promise<void>;
  onError(message: string): void;
}

export class TriagePanel {
  private run: string | null = null;
  private row: CandidateRow | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly handlers: TriageHandlers,
  ) {}

  clear(): void {
    this.run = null;
    this.row = null;
    this.root.textContent = "";
  }

  show(run: string, row: CandidateRow): void {
    this.run = run;
    this.row = row;
    this.renderForm(row.triage, row.comment, row.version);
  }

  private renderForm(status: TriageStatus, comment: string, version: number): void {
    this.root.textContent = "";

    const heading = document.createElement("h3");
    heading.textContent = `triage ${this.row?.meter_id ?? ""}`;
    this.root.appendChild(heading);

    const select = document.createElement("select");
    select.setAttribute("data-role", "triage-status");
    for (const option of TRIAGE_STATUSES) {
      const el = document.createElement("option");
      el.value = option;
      el.textContent = option.replace(/_/g, " ");
      select.appendChild(el);
    }
    select.value = status; // after the options exist; option.selected pre-append is unreliable
    this.root.appendChild(select);

    const text = document.createElement("textarea");
    text.setAttribute("data-role", "triage-comment");
    text.rows = 2;
    text.value = comment;
    this.root.appendChild(text);

    const save = document.createElement("button");
    save.setAttribute("data-role", "triage-save");
    save.textContent = "save";
    save.addEventListener("click", () => {
      const chosen = select.value;
      if (!isTriageStatus(chosen)) return;
      void this.submit(chosen, text.value, version);
    });
    this.root.appendChild(save);
  }

  private async submit(status: TriageStatus, comment: string, version: number): Promise<void> {
    if (!this.run || !this.row) return;
    try {
      await putTriage(this.run, this.row.meter_id, status, comment, version);
      await this.handlers.onSaved();
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.renderConflict(err.detail as TriageConflict, { status, comment });
        return;
      }
      this.handlers.onError(err instanceof Error ? err.message : String(err));
    }
  }

  /** Someone else wrote first: show both versions, let the reviewer pick. */
  private renderConflict(server: TriageConflict, mine: { status: TriageStatus; comment: string }): void {
    this.root.textContent = "";

    const dialog = document.createElement("div");
    dialog.className = "conflict-dialog";
    dialog.setAttribute("data-role", "triage-conflict");

    const message = document.createElement("p");
    message.textContent =
      `${this.row?.meter_id ?? ""} was annotated concurrently: ` +
      `server has "${server.status}" (v${server.version}), you wrote "${mine.status}".`;
    dialog.appendChild(message);

    const takeServer = document.createElement("button");
    takeServer.setAttribute("data-role", "conflict-take-server");
    takeServer.textContent = "keep server version";
    takeServer.addEventListener("click", () => {
      this.renderForm(server.status, server.comment, server.version);
      void this.handlers.onSaved(); // refresh so the table shows the server note
    });
    dialog.appendChild(takeServer);

    const overwrite = document.createElement("button");
    overwrite.setAttribute("data-role", "conflict-overwrite");
    overwrite.textContent = "overwrite with mine";
    overwrite.addEventListener("click", () => {
      void this.submit(mine.status, mine.comment, server.version);
    });
    dialog.appendChild(overwrite);

    this.root.appendChild(dialog);
  }
}
