/** Payload shapes of the analysis service, mirrored field for field. */

export const INDICATORS = ["dv_mean", "dv_min", "dv_max"] as const;
export type Indicator = (typeof INDICATORS)[number];

export const TRIAGE_STATUSES = [
  "unreviewed",
  "field_inspection_candidate",
  "validation_candidate",
  "discarded",
] as const;
export type TriageStatus = (typeof TRIAGE_STATUSES)[number];

export interface RunSummary {
  run_id: string;
  created_at: string;
  counts: Record<string, number>;
}

export interface HeatmapDoc {
  indicator: Indicator;
  meters: string[];
  /** parallel to meters when the document is rank-restricted, else empty */
  ranks: number[];
  days: string[]; // ISO dates
  values: (number | null)[][]; // row-major, null = missing or blanked
  clamp: number;
  scale: { kind: string; negative: string; positive: string; missing: string };
}

export interface PatternInfo {
  kind: string;
  marker: string | null; // onset or cessation day, ISO
}

export interface CandidateRow {
  rank: number;
  meter_id: string;
  terminal_id: string;
  dv_min_mean: number;
  dv_min_max: number;
  pattern: PatternInfo;
  triage: TriageStatus;
  comment: string;
  version: number; // triage note version, 0 if never annotated
}

export interface ExclusionWindow {
  start: string; // ISO, inclusive
  end: string; // ISO, exclusive
}

export interface CandidatesPayload {
  run_id: string;
  exclusions: { version: number; windows: ExclusionWindow[] };
  candidates: CandidateRow[];
}

export interface SeriesPayload {
  meter_id: string;
  days: string[];
  indicators: Record<Indicator, (number | null)[]>;
  simulated: Record<string, (number | null)[]>;
  measured: Record<string, (number | null)[]>;
  pattern: PatternInfo;
  threshold: number;
}

export interface TriageResult {
  meter_id: string;
  status: TriageStatus;
  comment: string;
  version: number;
  updated_at: string;
}

/** 409 detail for a stale triage submit: the server's current note. */
export interface TriageConflict {
  message: string;
  meter_id: string;
  version: number;
  status: TriageStatus;
  comment: string;
}

export type SortMode = "rank" | "meter";

/** Everything the view derives from; one source of truth per tab. */
export interface ViewState {
  run: string | null;
  indicator: Indicator;
  topK: number;
  sortMode: SortMode;
  selectedMeter: string | null;
  pendingBrush: { startDay: string; endDay: string } | null;
  triageDraft: { status: TriageStatus; comment: string; version: number } | null;
}

export function initialViewState(): ViewState {
  return {
    run: null,
    indicator: "dv_min",
    topK: 15,
    sortMode: "rank",
    selectedMeter: null,
    pendingBrush: null,
    triageDraft: null,
  };
}

export function isIndicator(value: string): value is Indicator {
  return (INDICATORS as readonly string[]).includes(value);
}

export function isTriageStatus(value: string): value is TriageStatus {
  return (TRIAGE_STATUSES as readonly string[]).includes(value);
}

/** Selected meter must stay within the displayed rows. */
export function selectMeter(state: ViewState, meterId: string | null, displayed: string[]): ViewState {
  if (meterId !== null && !displayed.includes(meterId)) {
    return { ...state, selectedMeter: null, triageDraft: null };
  }
  return { ...state, selectedMeter: meterId };
}
