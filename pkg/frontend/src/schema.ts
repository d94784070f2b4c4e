/** Export file format shared with the simulator's `ingest` command. */

export const SESSION_SCHEMA = "pointclick-session";
export const SCHEMA_VERSION = "1.0";

export interface SessionConfig {
  participant: string;
  canvasWidthPx: number;
  startPx: number;
  repsPerTarget: number;
  orderSeed: number;
}

export interface TrialExport {
  target_id: number;
  target_px: number;
  width_px: number;
  /** [t_ms since trial start, x_px, y_px] per pointer move */
  samples: Array<[number, number, number]>;
  /** [t_ms since trial start, x_px, correct 0|1] per click */
  clicks: Array<[number, number, number]>;
}

export interface ExportRecord {
  schema: typeof SESSION_SCHEMA;
  version: string;
  session: {
    participant: string;
    created_ms: number;
    config_hash: string;
    canvas_width_px: number;
    start_px: number;
    reps_per_target: number;
    order_seed: number;
    flags: string[];
  };
  trials: TrialExport[];
}

/** JSON with keys in sorted order at every level, for stable hashing. */
export function canonicalJson(value: unknown): string {
  if (value === null || typeof value !== "object") return JSON.stringify(value);
  if (Array.isArray(value)) return `[${value.map(canonicalJson).join(",")}]`;
  const entries = Object.entries(value as Record<string, unknown>)
    .sort(([a], [b]) => (a < b ? -1 : a > b ? 1 : 0))
    .map(([k, v]) => `${JSON.stringify(k)}:${canonicalJson(v)}`);
  return `{${entries.join(",")}}`;
}

export async function sha256Hex(text: string): Promise<string> {
  const data = new TextEncoder().encode(text);
  const digest = await crypto.subtle.digest("SHA-256", data);
  return Array.from(new Uint8Array(digest))
    .map((b) => b.toString(16).padStart(2, "0"))
    .join("");
}

export function configHashInput(config: SessionConfig): string {
  return canonicalJson({
    participant: config.participant,
    canvas_width_px: config.canvasWidthPx,
    start_px: config.startPx,
    reps_per_target: config.repsPerTarget,
    order_seed: config.orderSeed,
  });
}
