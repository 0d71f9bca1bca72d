/** Typed client for the analysis service; every mutation carries a version token. */

import type {
  CandidatesPayload,
  ExclusionWindow,
  HeatmapDoc,
  Indicator,
  RunSummary,
  SeriesPayload,
  TriageResult,
  TriageStatus,
} from "./types";

/** Base URL override for dev and tests; same origin by default. */
export function apiBase(): string {
  const g = globalThis as { NTLSCAN_API?: string };
  return g.NTLSCAN_API ?? "";
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: unknown,
  ) {
    super(typeof detail === "string" ? detail : `request failed with ${status}`);
  }
}

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  const response = await fetch(apiBase() + path, init);
  if (!response.ok) {
    let detail: unknown = response.statusText;
    try {
      detail = ((await response.json()) as { detail?: unknown }).detail ?? detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as T;
}

export function listRuns(): Promise<RunSummary[]> {
  return request("/runs");
}

export function getHeatmap(run: string, indicator: Indicator, top?: number): Promise<HeatmapDoc> {
  const query = top === undefined ? "" : `&top=${top}`;
  return request(`/runs/${run}/heatmap?indicator=${indicator}${query}`);
}

export function getCandidates(run: string): Promise<CandidatesPayload> {
  return request(`/runs/${run}/candidates`);
}

export function getSeries(run: string, meterId: string): Promise<SeriesPayload> {
  return request(`/runs/${run}/meters/${encodeURIComponent(meterId)}/series`);
}

export function putTriage(
  run: string,
  meterId: string,
  status: TriageStatus,
  comment: string,
  version: number,
): Promise<TriageResult> {
  return request(`/runs/${run}/candidates/${encodeURIComponent(meterId)}/triage`, {
    method: "PUT",
    headers: { "content-type": "application/json" },
    body: JSON.stringify({ status, comment, version }),
  });
}

export function putExclusions(
  run: string,
  version: number,
  windows: ExclusionWindow[],
): Promise<CandidatesPayload> {
  return request(`/runs/${run}/exclusions`, {
    method: "PUT",
    headers: { "content-type": "application/json" },
    body: JSON.stringify({ version, windows }),
  });
}

export function exportUrl(run: string): string {
  return `${apiBase()}/runs/${run}/export/candidates.csv`;
}
