/**
 * Keystroke-to-rating mapping per task. Every value the client ever submits
 * comes out of this table; unknown keys map to null and must be ignored.
 *
 * quality:       1 / 2 / 3 / 4  (facade rating, one to four points)
 * qualification: Q = building image (1), U = street image (0)
 * continuity:    C = continuous (1), D = discontinuous (0)
 */

export type Task = "qualification" | "quality" | "continuity";

export const TASKS: Task[] = ["qualification", "quality", "continuity"];

const KEYMAP: Record<Task, Record<string, number>> = {
  quality: { "1": 1, "2": 2, "3": 3, "4": 4 },
  qualification: { q: 1, u: 0 },
  continuity: { c: 1, d: 0 },
};

export function keyToValue(task: Task, key: string): number | null {
  const mapped = KEYMAP[task]?.[key.toLowerCase()];
  return mapped === undefined ? null : mapped;
}

/** Button labels mirroring the keyboard bindings, for mouse users. */
export function buttonsFor(task: Task): { key: string; value: number; label: string }[] {
  switch (task) {
    case "quality":
      return [1, 2, 3, 4].map((v) => ({ key: String(v), value: v, label: `${v} point${v > 1 ? "s" : ""}` }));
    case "qualification":
      return [
        { key: "Q", value: 1, label: "qualified (building)" },
        { key: "U", value: 0, label: "unqualified (street)" },
      ];
    case "continuity":
      return [
        { key: "C", value: 1, label: "continuous" },
        { key: "D", value: 0, label: "discontinuous" },
      ];
  }
}
