/** Generate a deterministic synthetic session export for round-trip tests.
 *
 * Drives the real Session state machine with scripted pointer traces
 * (minimal-jerk profile plus seeded jitter, occasional misclick), so the
 * export exercises exactly the code path a live session uses. Everything is
 * seeded; regeneration is byte-identical.
 */

import { mkdirSync, writeFileSync } from "node:fs";
import { dirname, resolve } from "node:path";
import { fileURLToPath } from "node:url";

import { gaussian, mulberry32 } from "../src/rng.js";
import { Session } from "../src/session.js";
import { indexOfDifficulty } from "../src/targets.js";

const REPS = 2;
const SEED = 12345;
const SAMPLE_MS = 8;

function minimalJerk(t: number): number {
  // normalized 0..1 position profile
  return 10 * t ** 3 - 15 * t ** 4 + 6 * t ** 5;
}

async function main(): Promise<void> {
  const session = new Session({
    participant: "synthetic",
    repsPerTarget: REPS,
    orderSeed: SEED,
  });
  const rand = mulberry32(SEED);
  let clock = 0;

  while (!session.isComplete()) {
    const target = session.sequence[session.trialsCompleted];
    // begin the trial at the start marker
    session.pointerClick(clock, session.config.startPx, 120);

    const duration = 250 + 120 * indexOfDifficulty(target) + 40 * rand();
    const from = session.config.startPx;
    const landing =
      target.positionPx +
      Math.max(-0.45, Math.min(0.45, 0.22 * gaussian(rand))) * target.widthPx;
    const steps = Math.max(2, Math.round(duration / SAMPLE_MS));
    for (let i = 1; i <= steps; i++) {
      clock += SAMPLE_MS;
      const frac = minimalJerk(i / steps);
      const jitter = 1.5 * gaussian(rand);
      session.pointerMove(clock, from + (landing - from) * frac + jitter, 120);
    }

    if (rand() < 0.15) {
      // a stray click just outside the target edge before settling
      clock += SAMPLE_MS;
      const side = rand() < 0.5 ? -1 : 1;
      session.pointerClick(
        clock,
        target.positionPx + side * (target.widthPx / 2 + 4 + 10 * rand()),
        120
      );
      clock += 5 * SAMPLE_MS;
    }

    clock += SAMPLE_MS;
    session.pointerClick(clock, landing, 120);

    // glide back to the start marker
    for (let i = 1; i <= 10; i++) {
      clock += SAMPLE_MS;
      session.pointerMove(clock, landing + ((from - landing) * i) / 10, 120);
    }
    clock += 60;
  }

  const record = await session.export(0);
  const here = dirname(fileURLToPath(import.meta.url));
  const outPath = resolve(here, "../../../tests/data/synthetic_export.json");
  mkdirSync(dirname(outPath), { recursive: true });
  writeFileSync(outPath, JSON.stringify(record, null, 2) + "\n");
  console.log(`${record.trials.length} trials -> ${outPath}`);
}

main().catch((err) => {
  console.error(err);
  process.exit(1);
});
