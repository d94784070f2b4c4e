import { mulberry32, seededShuffle } from "./rng.js";

export interface TargetDef {
  id: number;
  positionPx: number;
  widthPx: number;
}

export const START_PX = 900;
export const CANVAS_WIDTH_PX = 1800;

/** The 18 task targets: 3 distances x 3 widths, both sides of the start. */
export const TARGET_TABLE: readonly TargetDef[] = [
  { id: 1, positionPx: 675, widthPx: 20 },
  { id: 2, positionPx: 363, widthPx: 20 },
  { id: 3, positionPx: 50, widthPx: 20 },
  { id: 4, positionPx: 1125, widthPx: 20 },
  { id: 5, positionPx: 1438, widthPx: 20 },
  { id: 6, positionPx: 1750, widthPx: 20 },
  { id: 7, positionPx: 675, widthPx: 60 },
  { id: 8, positionPx: 363, widthPx: 60 },
  { id: 9, positionPx: 50, widthPx: 60 },
  { id: 10, positionPx: 1125, widthPx: 60 },
  { id: 11, positionPx: 1438, widthPx: 60 },
  { id: 12, positionPx: 1750, widthPx: 60 },
  { id: 13, positionPx: 675, widthPx: 100 },
  { id: 14, positionPx: 363, widthPx: 100 },
  { id: 15, positionPx: 50, widthPx: 100 },
  { id: 16, positionPx: 1125, widthPx: 100 },
  { id: 17, positionPx: 1438, widthPx: 100 },
  { id: 18, positionPx: 1750, widthPx: 100 },
];

export function indexOfDifficulty(target: TargetDef): number {
  return Math.log2(1 + Math.abs(target.positionPx - START_PX) / target.widthPx);
}

/** Closed interval, same rule the simulator's click logic applies. */
export function isInsideTarget(x: number, target: TargetDef): boolean {
  return Math.abs(x - target.positionPx) <= target.widthPx / 2;
}

/** Seeded permutation of the full (target x rep) grid. */
export function targetSequence(repsPerTarget: number, orderSeed: number): TargetDef[] {
  const grid: TargetDef[] = [];
  for (const target of TARGET_TABLE) {
    for (let r = 0; r < repsPerTarget; r++) grid.push(target);
  }
  return seededShuffle(grid, mulberry32(orderSeed));
}
