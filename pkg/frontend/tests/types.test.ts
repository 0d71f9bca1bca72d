import { describe, expect, test } from "vitest";
import { initialViewState, isIndicator, isTriageStatus, selectMeter } from "../src/types";

describe("guards", () => {
  test("indicator names", () => {
    expect(isIndicator("dv_min")).toBe(true);
    expect(isIndicator("dv_mean")).toBe(true);
    expect(isIndicator("voltage")).toBe(false);
  });

  test("triage statuses", () => {
    expect(isTriageStatus("field_inspection_candidate")).toBe(true);
    expect(isTriageStatus("maybe")).toBe(false);
  });
});

describe("selectMeter", () => {
  test("selection must come from the displayed rows", () => {
    const state = initialViewState();
    const picked = selectMeter(state, "m2", ["m1", "m2"]);
    expect(picked.selectedMeter).toBe("m2");

    const rejected = selectMeter(picked, "m9", ["m1", "m2"]);
    expect(rejected.selectedMeter).toBeNull();
    expect(rejected.triageDraft).toBeNull();
  });

  test("null clears the selection", () => {
    const state = { ...initialViewState(), selectedMeter: "m1" };
    expect(selectMeter(state, null, []).selectedMeter).toBeNull();
  });

  test("state is copied, not mutated", () => {
    const state = initialViewState();
    const next = selectMeter(state, "m1", ["m1"]);
    expect(state.selectedMeter).toBeNull();
    expect(next).not.toBe(state);
  });
});
