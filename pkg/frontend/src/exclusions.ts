/** Exclusion-window editor: list, add by date range, remove; version-guarded. */

import { validBrush } from "./format";
import type { ExclusionWindow } from "./types";

export interface ExclusionHandlers {
  /** replace the full window list on the server */
  onApply(windows: ExclusionWindow[], version: number): Promise<void>;
}

export class ExclusionsPanel {
  private windows: ExclusionWindow[] = [];
  private version = 1;
  private days: string[] = [];

  constructor(
    private readonly root: HTMLElement,
    private readonly handlers: ExclusionHandlers,
  ) {}

  update(windows: ExclusionWindow[], version: number, days: string[]): void {
    this.windows = windows;
    this.version = version;
    this.days = days;
    this.render();
  }

  current(): { windows: ExclusionWindow[]; version: number } {
    return { windows: [...this.windows], version: this.version };
  }

  private render(): void {
    this.root.textContent = "";

    const heading = document.createElement("h3");
    heading.textContent = "excluded windows";
    this.root.appendChild(heading);

    const list = document.createElement("ul");
    list.setAttribute("data-role", "exclusion-list");
    if (this.windows.length === 0) {
      const item = document.createElement("li");
      item.className = "empty-state";
      item.textContent = "none";
      list.appendChild(item);
    }
    this.windows.forEach((window, index) => {
      const item = document.createElement("li");
      item.setAttribute("data-window", `${window.start}..${window.end}`);
      item.textContent = `${window.start} .. ${window.end} `;
      const remove = document.createElement("button");
      remove.textContent = "remove";
      remove.setAttribute("data-role", "exclusion-remove");
      remove.addEventListener("click", () => {
        const next = this.windows.filter((_, i) => i !== index);
        void this.handlers.onApply(next, this.version);
      });
      item.appendChild(remove);
      list.appendChild(item);
    });
    this.root.appendChild(list);

    const start = document.createElement("input");
    start.setAttribute("data-role", "exclusion-start");
    start.placeholder = "start YYYY-MM-DD";
    const end = document.createElement("input");
    end.setAttribute("data-role", "exclusion-end");
    end.placeholder = "end YYYY-MM-DD (exclusive)";
    const error = document.createElement("span");
    error.className = "inline-error";
    error.setAttribute("data-role", "exclusion-error");

    const add = document.createElement("button");
    add.setAttribute("data-role", "exclusion-add");
    add.textContent = "exclude range";
    add.addEventListener("click", () => {
      const problem = validBrush(start.value, end.value, this.days);
      if (problem) {
        error.textContent = problem; // rejected client-side, no request
        return;
      }
      error.textContent = "";
      void this.handlers.onApply(
        [...this.windows, { start: start.value, end: end.value }],
        this.version,
      );
    });

    this.root.append(start, end, add, error);
  }
}
