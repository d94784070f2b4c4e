import { describe, expect, it } from "vitest";

import {
  TARGET_TABLE,
  indexOfDifficulty,
  isInsideTarget,
  targetSequence,
} from "../src/targets.js";

const PUBLISHED_ID: Record<number, number> = {
  1: 3.61, 2: 4.8, 3: 5.44, 4: 3.61, 5: 4.8, 6: 5.44,
  7: 2.25, 8: 3.32, 9: 3.92, 10: 2.25, 11: 3.32, 12: 3.92,
  13: 1.7, 14: 2.67, 15: 3.25, 16: 1.7, 17: 2.67, 18: 3.25,
};

describe("target table", () => {
  it("holds all 18 targets inside the canvas", () => {
    expect(TARGET_TABLE).toHaveLength(18);
    for (const t of TARGET_TABLE) {
      expect(t.positionPx - t.widthPx / 2).toBeGreaterThanOrEqual(0);
      expect(t.positionPx + t.widthPx / 2).toBeLessThanOrEqual(1800);
    }
  });

  it("reproduces the published difficulties within 0.01 bits", () => {
    for (const t of TARGET_TABLE) {
      expect(Math.abs(indexOfDifficulty(t) - PUBLISHED_ID[t.id])).toBeLessThanOrEqual(0.01);
    }
  });
});

describe("click correctness rule", () => {
  const target = { id: 1, positionPx: 675, widthPx: 20 };

  it("uses a closed interval", () => {
    expect(isInsideTarget(675, target)).toBe(true);
    expect(isInsideTarget(665, target)).toBe(true);
    expect(isInsideTarget(685, target)).toBe(true);
    expect(isInsideTarget(685.01, target)).toBe(false);
    expect(isInsideTarget(664.99, target)).toBe(false);
  });
});

describe("target sequence", () => {
  it("is a permutation of the full target x rep grid", () => {
    const seq = targetSequence(10, 7);
    expect(seq).toHaveLength(180);
    const counts = new Map<number, number>();
    for (const t of seq) counts.set(t.id, (counts.get(t.id) ?? 0) + 1);
    for (const t of TARGET_TABLE) expect(counts.get(t.id)).toBe(10);
  });

  it("is reproducible from the seed", () => {
    const a = targetSequence(3, 42).map((t) => t.id);
    const b = targetSequence(3, 42).map((t) => t.id);
    const c = targetSequence(3, 43).map((t) => t.id);
    expect(a).toEqual(b);
    expect(a).not.toEqual(c);
  });
});
