/**
 * Turns an /api/stats payload into the bar-pair view model: one live-share
 * bar next to one reference-share bar per class. A malformed payload (wrong
 * shape, missing class keys, non-numeric entries) yields null and the
 * caller hides the panel; labeling itself is never affected.
 */

import type { Task } from "./keymap.js";

export interface ClassBar {
  cls: string;
  count: number;
  livePct: number;
  refPct: number;
}

export interface StatsViewModel {
  task: Task;
  total: number;
  bars: ClassBar[];
}

const CLASS_KEYS: Record<Task, string[]> = {
  qualification: ["0", "1"],
  quality: ["1", "2", "3", "4"],
  continuity: ["0", "1"],
};

function numericRecord(obj: unknown, keys: string[]): Record<string, number> | null {
  if (typeof obj !== "object" || obj === null) return null;
  const rec = obj as Record<string, unknown>;
  const out: Record<string, number> = {};
  for (const key of keys) {
    const v = rec[key];
    if (typeof v !== "number" || !Number.isFinite(v)) return null;
    out[key] = v;
  }
  return out;
}

export function parseStats(payload: unknown): StatsViewModel | null {
  if (typeof payload !== "object" || payload === null) return null;
  const body = payload as Record<string, unknown>;
  const task = body.task;
  if (typeof task !== "string" || !(task in CLASS_KEYS)) return null;
  const keys = CLASS_KEYS[task as Task];
  const counts = numericRecord(body.counts, keys);
  const shares = numericRecord(body.shares, keys);
  const reference = numericRecord(body.reference_shares, keys);
  if (!counts || !shares || !reference) return null;
  const bars = keys.map((cls) => ({
    cls,
    count: counts[cls],
    livePct: shares[cls],
    refPct: reference[cls],
  }));
  return {
    task: task as Task,
    total: bars.reduce((acc, b) => acc + b.count, 0),
    bars,
  };
}
