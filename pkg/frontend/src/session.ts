/** DOM-free state machine of one recording session.
 *
 * A trial commences by clicking the start marker; the target then appears
 * left or right, pointer positions are sampled on movement events, clicks
 * are logged with their correctness (closed-interval rule), and after a
 * correct click the pointer must return to the start before the next trial
 * can begin. Misclicks keep the trial alive.
 */

import {
  CANVAS_WIDTH_PX,
  START_PX,
  TargetDef,
  isInsideTarget,
  targetSequence,
} from "./targets.js";
import {
  ExportRecord,
  SCHEMA_VERSION,
  SESSION_SCHEMA,
  SessionConfig,
  TrialExport,
  configHashInput,
  sha256Hex,
} from "./schema.js";

export type Phase = "await-start" | "trial" | "return-to-start" | "done";

export interface ClickResult {
  phase: Phase;
  event: "trial-started" | "hit" | "misclick" | "ignored" | "session-complete";
}

const START_TOLERANCE_PX = 12;

interface TrialData {
  target: TargetDef;
  t0: number;
  samples: Array<[number, number, number]>;
  clicks: Array<[number, number, number]>;
}

export class Session {
  readonly config: SessionConfig;
  readonly sequence: TargetDef[];
  private trials: TrialData[] = [];
  private active: TrialData | null = null;
  private flags: string[] = [];
  phase: Phase = "await-start";

  constructor(config: Partial<SessionConfig> = {}) {
    this.config = {
      participant: config.participant ?? "anonymous",
      canvasWidthPx: config.canvasWidthPx ?? CANVAS_WIDTH_PX,
      startPx: config.startPx ?? START_PX,
      repsPerTarget: config.repsPerTarget ?? 10,
      orderSeed: config.orderSeed ?? 1,
    };
    this.sequence = targetSequence(this.config.repsPerTarget, this.config.orderSeed);
  }

  get trialsCompleted(): number {
    return this.trials.length;
  }

  get trialsTotal(): number {
    return this.sequence.length;
  }

  get currentTarget(): TargetDef | null {
    return this.active?.target ?? null;
  }

  get sessionFlags(): readonly string[] {
    return this.flags;
  }

  /** Pointer movement; only sampled while a trial is running. */
  pointerMove(tMs: number, x: number, y: number): void {
    if (this.phase === "trial" && this.active) {
      this.active.samples.push([tMs - this.active.t0, x, y]);
    } else if (
      this.phase === "return-to-start" &&
      Math.abs(x - this.config.startPx) <= START_TOLERANCE_PX
    ) {
      this.phase = "await-start";
    }
  }

  pointerClick(tMs: number, x: number, y: number): ClickResult {
    switch (this.phase) {
      case "await-start": {
        if (Math.abs(x - this.config.startPx) > START_TOLERANCE_PX) {
          return { phase: this.phase, event: "ignored" };
        }
        const target = this.sequence[this.trials.length];
        this.active = { target, t0: tMs, samples: [[0, x, y]], clicks: [] };
        this.phase = "trial";
        return { phase: this.phase, event: "trial-started" };
      }
      case "trial": {
        const trial = this.active!;
        const correct = isInsideTarget(x, trial.target);
        trial.clicks.push([tMs - trial.t0, x, correct ? 1 : 0]);
        if (!correct) {
          return { phase: this.phase, event: "misclick" };
        }
        this.trials.push(trial);
        this.active = null;
        this.phase = this.trials.length >= this.sequence.length ? "done" : "return-to-start";
        return {
          phase: this.phase,
          event: this.phase === "done" ? "session-complete" : "hit",
        };
      }
      default:
        return { phase: this.phase, event: "ignored" };
    }
  }

  /** Mid-session window resizes invalidate the pixel geometry: flag, keep going. */
  flagResize(): void {
    if (!this.flags.includes("resized")) this.flags.push("resized");
  }

  isComplete(): boolean {
    return this.phase === "done";
  }

  async export(createdMs = 0): Promise<ExportRecord> {
    if (this.trials.length === 0) {
      throw new Error("nothing to export: no completed trials");
    }
    const trials: TrialExport[] = this.trials.map((t) => ({
      target_id: t.target.id,
      target_px: t.target.positionPx,
      width_px: t.target.widthPx,
      samples: t.samples,
      clicks: t.clicks,
    }));
    return {
      schema: SESSION_SCHEMA,
      version: SCHEMA_VERSION,
      session: {
        participant: this.config.participant,
        created_ms: createdMs,
        config_hash: await sha256Hex(configHashInput(this.config)),
        canvas_width_px: this.config.canvasWidthPx,
        start_px: this.config.startPx,
        reps_per_target: this.config.repsPerTarget,
        order_seed: this.config.orderSeed,
        flags: this.flags.slice(),
      },
      trials,
    };
  }
}
