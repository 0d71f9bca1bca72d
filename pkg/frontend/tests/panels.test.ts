/** Candidate table, triage concurrency, exclusion editor, drill-down chart. */

import { afterEach, beforeEach, describe, expect, test, vi } from "vitest";
import { CandidatesTable } from "../src/candidates";
import { DrilldownPanel } from "../src/drilldown";
import { ExclusionsPanel } from "../src/exclusions";
import { TriagePanel } from "../src/triage";
import type { CandidateRow, ExclusionWindow, SeriesPayload } from "../src/types";

function row(rank: number, meterId: string, over: Partial<CandidateRow> = {}): CandidateRow {
  return {
    rank,
    meter_id: meterId,
    terminal_id: `Terminal_${rank}`,
    dv_min_mean: 0.001 * rank,
    dv_min_max: 0.002 * rank,
    pattern: { kind: "quiet", marker: null },
    triage: "unreviewed",
    comment: "",
    version: 0,
    ...over,
  };
}

async function until(cond: () => boolean, label: string, timeoutMs = 5000): Promise<void> {
  const t0 = Date.now();
  while (!cond()) {
    if (Date.now() - t0 > timeoutMs) throw new Error(`timed out waiting for ${label}`);
    await new Promise((resolve) => setTimeout(resolve, 10));
  }
}

let root: HTMLElement;

beforeEach(() => {
  document.body.innerHTML = "";
  root = document.createElement("div");
  document.body.appendChild(root);
});

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("CandidatesTable", () => {
  const rows = Array.from({ length: 20 }, (_, i) => row(i + 1, `meter_${i + 1}`));

  test("top-k cuts the display, never the ranking", () => {
    const table = new CandidatesTable(root, () => {});
    table.update(rows, 15, "rank", null);
    expect(table.displayedMeters()).toHaveLength(15);
    expect(table.displayedMeters()[0]).toBe("meter_1");
    expect(table.displayedMeters()[14]).toBe("meter_15");
    expect(root.querySelector('tr[data-meter="meter_16"]')).toBeNull();

    table.update(rows, 50, "rank", null);
    expect(table.displayedMeters()).toHaveLength(20);
  });

  test("meter sort reorders the same displayed set", () => {
    const table = new CandidatesTable(root, () => {});
    table.update(rows, 15, "meter", null);
    const shown = table.displayedMeters();
    expect(shown).toHaveLength(15);
    expect(shown).toEqual([...shown].sort((a, b) => a.localeCompare(b)));
    expect(new Set(shown)).toEqual(new Set(rows.slice(0, 15).map((r) => r.meter_id)));
  });

  test("row click reports the meter id", () => {
    const picked: string[] = [];
    const table = new CandidatesTable(root, (meterId) => picked.push(meterId));
    table.update(rows.slice(0, 3), 15, "rank", null);
    (root.querySelector('tr[data-meter="meter_2"]') as HTMLElement).click();
    expect(picked).toEqual(["meter_2"]);
  });

  test("cells render scores, pattern marker and triage note", () => {
    const table = new CandidatesTable(root, () => {});
    table.update(
      [
        row(1, "m1", {
          dv_min_mean: 0.01234,
          pattern: { kind: "ceased", marker: "2021-03-02" },
          triage: "discarded",
          comment: "street lighting",
        }),
      ],
      15,
      "rank",
      "m1",
    );
    const tr = root.querySelector('tr[data-meter="m1"]') as HTMLElement;
    expect(tr.className).toBe("selected");
    const cells = [...tr.querySelectorAll("td")].map((td) => td.textContent);
    expect(cells[3]).toBe("0.0123");
    expect(cells[5]).toBe("ceased:2021-03-02");
    expect(tr.querySelector('td[data-role="triage-cell"]')?.textContent).toBe("discarded");
    expect(cells[7]).toBe("street lighting");
  });
});

describe("TriagePanel", () => {
  const CONFLICT = {
    message: "stale triage version",
    meter_id: "m1",
    version: 3,
    status: "validation_candidate",
    comment: "server note",
  };

  function okResponse(body: unknown) {
    return { ok: true, status: 200, statusText: "OK", json: async () => body };
  }

  function conflictResponse() {
    return {
      ok: false,
      status: 409,
      statusText: "Conflict",
      json: async () => ({ detail: CONFLICT }),
    };
  }

  function mount(saved: { count: number }, errors: string[] = []) {
    const panel = new TriagePanel(root, {
      onSaved: async () => {
        saved.count += 1;
      },
      onError: (message) => errors.push(message),
    });
    panel.show("r1", row(1, "m1"));
    return panel;
  }

  function form() {
    return {
      select: root.querySelector('[data-role="triage-status"]') as HTMLSelectElement,
      comment: root.querySelector('[data-role="triage-comment"]') as HTMLTextAreaElement,
      save: root.querySelector('[data-role="triage-save"]') as HTMLButtonElement,
    };
  }

  test("save sends status, comment and the row version", async () => {
    const fetchMock = vi.fn(async () => okResponse({ meter_id: "m1", version: 1 }));
    vi.stubGlobal("fetch", fetchMock);
    const saved = { count: 0 };
    mount(saved);

    const { select, comment, save } = form();
    select.value = "field_inspection_candidate";
    comment.value = "check service drop";
    save.click();
    await until(() => saved.count === 1, "onSaved");

    expect(fetchMock).toHaveBeenCalledTimes(1);
    const [url, init] = fetchMock.mock.calls[0] as unknown as [string, RequestInit];
    expect(url).toBe("/runs/r1/candidates/m1/triage");
    expect(init.method).toBe("PUT");
    expect(JSON.parse(init.body as string)).toEqual({
      status: "field_inspection_candidate",
      comment: "check service drop",
      version: 0,
    });
  });

  test("stale version opens the conflict prompt instead of overwriting", async () => {
    const fetchMock = vi.fn(async () => conflictResponse());
    vi.stubGlobal("fetch", fetchMock);
    const saved = { count: 0 };
    mount(saved);

    const { select, save } = form();
    select.value = "discarded";
    save.click();
    await until(() => root.querySelector('[data-role="triage-conflict"]') !== null, "conflict dialog");

    expect(fetchMock).toHaveBeenCalledTimes(1); // the stale write itself, nothing else
    expect(saved.count).toBe(0);
    const message = root.querySelector('[data-role="triage-conflict"] p')?.textContent ?? "";
    expect(message).toContain('"validation_candidate"');
    expect(message).toContain("v3");
    expect(message).toContain('"discarded"');
  });

  test("keep-server re-renders the server note without another write", async () => {
    const fetchMock = vi.fn(async () => conflictResponse());
    vi.stubGlobal("fetch", fetchMock);
    const saved = { count: 0 };
    mount(saved);

    form().save.click();
    await until(() => root.querySelector('[data-role="conflict-take-server"]') !== null, "dialog");
    (root.querySelector('[data-role="conflict-take-server"]') as HTMLButtonElement).click();
    await until(() => saved.count === 1, "refresh after keeping server");

    expect(fetchMock).toHaveBeenCalledTimes(1);
    const { select, comment } = form();
    expect(select.value).toBe("validation_candidate");
    expect(comment.value).toBe("server note");
  });

  test("overwrite resubmits my values at the server version", async () => {
    const fetchMock = vi
      .fn()
      .mockResolvedValueOnce(conflictResponse())
      .mockResolvedValueOnce(okResponse({ meter_id: "m1", version: 4 }));
    vi.stubGlobal("fetch", fetchMock);
    const saved = { count: 0 };
    mount(saved);

    const { select, comment, save } = form();
    select.value = "discarded";
    comment.value = "duplicate of m2";
    save.click();
    await until(() => root.querySelector('[data-role="conflict-overwrite"]') !== null, "dialog");
    (root.querySelector('[data-role="conflict-overwrite"]') as HTMLButtonElement).click();
    await until(() => saved.count === 1, "save after overwrite");

    expect(fetchMock).toHaveBeenCalledTimes(2);
    const [, init] = fetchMock.mock.calls[1] as unknown as [string, RequestInit];
    expect(JSON.parse(init!.body as string)).toEqual({
      status: "discarded",
      comment: "duplicate of m2",
      version: 3,
    });
  });

  test("other failures surface as errors, not dialogs", async () => {
    vi.stubGlobal(
      "fetch",
      vi.fn(async () => ({
        ok: false,
        status: 500,
        statusText: "Internal Server Error",
        json: async () => ({ detail: "store unavailable" }),
      })),
    );
    const saved = { count: 0 };
    const errors: string[] = [];
    mount(saved, errors);

    form().save.click();
    await until(() => errors.length === 1, "error callback");
    expect(errors[0]).toBe("store unavailable");
    expect(root.querySelector('[data-role="triage-conflict"]')).toBeNull();
    expect(saved.count).toBe(0);
  });
});

describe("ExclusionsPanel", () => {
  const DAYS = ["2021-01-01", "2021-01-02", "2021-01-03", "2021-01-04"];

  function mount(applied: [ExclusionWindow[], number][]) {
    const panel = new ExclusionsPanel(root, {
      onApply: async (windows, version) => {
        applied.push([windows, version]);
      },
    });
    return panel;
  }

  test("empty list says so", () => {
    mount([]).update([], 1, DAYS);
    expect(root.querySelector('[data-role="exclusion-list"] .empty-state')?.textContent).toBe("none");
  });

  test("windows render and remove rebuilds the list at the current version", () => {
    const applied: [ExclusionWindow[], number][] = [];
    const panel = mount(applied);
    panel.update(
      [
        { start: "2021-01-01", end: "2021-01-02" },
        { start: "2021-01-03", end: "2021-01-04" },
      ],
      4,
      DAYS,
    );
    const items = root.querySelectorAll("li[data-window]");
    expect(items).toHaveLength(2);
    expect(items[0]?.getAttribute("data-window")).toBe("2021-01-01..2021-01-02");

    (items[0]?.querySelector('[data-role="exclusion-remove"]') as HTMLButtonElement).click();
    expect(applied).toEqual([[[{ start: "2021-01-03", end: "2021-01-04" }], 4]]);
  });

  test("invalid input is rejected client-side with no request", () => {
    const applied: [ExclusionWindow[], number][] = [];
    mount(applied).update([], 2, DAYS);
    (root.querySelector('[data-role="exclusion-start"]') as HTMLInputElement).value = "01/02/2021";
    (root.querySelector('[data-role="exclusion-end"]') as HTMLInputElement).value = "2021-01-03";
    (root.querySelector('[data-role="exclusion-add"]') as HTMLButtonElement).click();
    expect(applied).toEqual([]);
    expect(root.querySelector('[data-role="exclusion-error"]')?.textContent).toMatch(/YYYY-MM-DD/);
  });

  test("valid input appends a window at the current version", () => {
    const applied: [ExclusionWindow[], number][] = [];
    mount(applied).update([{ start: "2021-01-01", end: "2021-01-02" }], 3, DAYS);
    (root.querySelector('[data-role="exclusion-start"]') as HTMLInputElement).value = "2021-01-02";
    (root.querySelector('[data-role="exclusion-end"]') as HTMLInputElement).value = "2021-01-04";
    (root.querySelector('[data-role="exclusion-add"]') as HTMLButtonElement).click();
    expect(applied).toEqual([
      [
        [
          { start: "2021-01-01", end: "2021-01-02" },
          { start: "2021-01-02", end: "2021-01-04" },
        ],
        3,
      ],
    ]);
    expect(root.querySelector('[data-role="exclusion-error"]')?.textContent).toBe("");
  });

  test("current() hands out a copy", () => {
    const panel = mount([]);
    panel.update([{ start: "2021-01-01", end: "2021-01-02" }], 5, DAYS);
    const current = panel.current();
    current.windows.pop();
    expect(panel.current().windows).toHaveLength(1);
    expect(panel.current().version).toBe(5);
  });
});

describe("DrilldownPanel", () => {
  function series(over: Partial<SeriesPayload> = {}): SeriesPayload {
    return {
      meter_id: "m1",
      days: ["2021-01-01", "2021-01-02", "2021-01-03", "2021-01-04"],
      indicators: {
        dv_mean: [0.01, 0.02, null, 0.01],
        dv_min: [0.02, 0.13, null, 0.05],
        dv_max: [0.0, 0.01, null, 0.0],
      },
      simulated: {},
      measured: {},
      pattern: { kind: "onset", marker: "2021-01-02" },
      threshold: 0.1,
      ...over,
    };
  }

  test("chart shows line, dots, threshold and pattern marker", () => {
    new DrilldownPanel(root).render(series());
    expect(root.querySelector("h3")?.textContent).toBe("m1");
    expect(root.querySelector(".pattern-badge")?.textContent).toBe("onset · 2021-01-02");
    expect(root.querySelectorAll("circle.series-dot")).toHaveLength(3); // gap day has no dot
    const d = root.querySelector("path.series-line")?.getAttribute("d") ?? "";
    expect(d.match(/M/g)).toHaveLength(2); // the null splits the line in two
    expect(root.querySelector("line.threshold-line")).not.toBeNull();
    expect(root.querySelector('line.pattern-marker[data-marker="onset"]')).not.toBeNull();
  });

  test("all-missing series renders a placeholder, no chart", () => {
    new DrilldownPanel(root).render(
      series({
        indicators: { dv_mean: [null, null, null, null], dv_min: [null, null, null, null], dv_max: [null, null, null, null] },
        pattern: { kind: "quiet", marker: null },
      }),
    );
    expect(root.querySelector(".empty-state")?.textContent).toBe("no data for this meter");
    expect(root.querySelector("svg")).toBeNull();
    expect(root.querySelector(".pattern-badge")?.textContent).toBe("quiet");
  });
});
