import { describe, expect, it } from "vitest";

import { parseStats } from "../src/statsView.js";

const GOOD = {
  task: "quality",
  counts: { "1": 2, "2": 3, "3": 5, "4": 2 },
  shares: { "1": 16.7, "2": 25.0, "3": 41.7, "4": 16.7 },
  reference_shares: { "1": 7.8, "2": 31.4, "3": 41.9, "4": 18.8 },
};

describe("parseStats", () => {
  it("builds one live/reference bar pair per class", () => {
    const vm = parseStats(GOOD);
    expect(vm).not.toBeNull();
    expect(vm!.bars.map((b) => b.cls)).toEqual(["1", "2", "3", "4"]);
    expect(vm!.total).toBe(12);
    expect(vm!.bars[0]).toEqual({ cls: "1", count: 2, livePct: 16.7, refPct: 7.8 });
    expect(vm!.bars[3].refPct).toBe(18.8);
  });

  it("keeps counts verbatim at zero labels", () => {
    const vm = parseStats({
      task: "continuity",
      counts: { "0": 0, "1": 0 },
      shares: { "0": 0.0, "1": 0.0 },
      reference_shares: { "0": 58.5, "1": 41.5 },
    });
    expect(vm!.total).toBe(0);
    expect(vm!.bars.every((b) => b.livePct === 0)).toBe(true);
    expect(vm!.bars.map((b) => b.refPct)).toEqual([58.5, 41.5]);
  });

  it("returns null when a class key is missing", () => {
    const broken = structuredClone(GOOD) as Record<string, unknown>;
    delete (broken.counts as Record<string, unknown>)["3"];
    expect(parseStats(broken)).toBeNull();
  });

  it("returns null on wrong shapes and non-numeric entries", () => {
    expect(parseStats(null)).toBeNull();
    expect(parseStats("nope")).toBeNull();
    expect(parseStats({})).toBeNull();
    expect(parseStats({ ...GOOD, task: "beauty" })).toBeNull();
    const bad = structuredClone(GOOD) as Record<string, unknown>;
    (bad.shares as Record<string, unknown>)["2"] = "25%";
    expect(parseStats(bad)).toBeNull();
  });
});
