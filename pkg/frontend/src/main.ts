/** Canvas front-end: renders the task, feeds pointer events to the session
 * state machine, and offers the export download once the session completes.
 */

import { Session } from "./session.js";
import { TargetDef } from "./targets.js";

const canvas = document.getElementById("task") as HTMLCanvasElement;
const hud = document.getElementById("hud") as HTMLElement;
const exportButton = document.getElementById("export") as HTMLButtonElement;
const participantInput = document.getElementById("participant") as HTMLInputElement;

const ctx = canvas.getContext("2d")!;
let session = new Session({ participant: participantInput.value || "anonymous" });
let flashUntil = 0;

function toCanvasX(clientX: number): number {
  const rect = canvas.getBoundingClientRect();
  return ((clientX - rect.left) / rect.width) * session.config.canvasWidthPx;
}

function drawTarget(target: TargetDef): void {
  const scale = canvas.width / session.config.canvasWidthPx;
  ctx.fillStyle = "#d33";
  ctx.fillRect(
    (target.positionPx - target.widthPx / 2) * scale,
    0,
    target.widthPx * scale,
    canvas.height
  );
}

function render(): void {
  const scale = canvas.width / session.config.canvasWidthPx;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.fillStyle = "#f6f6f6";
  ctx.fillRect(0, 0, canvas.width, canvas.height);

  if (performance.now() < flashUntil) {
    ctx.fillStyle = "rgba(255, 80, 80, 0.35)";
    ctx.fillRect(0, 0, canvas.width, canvas.height);
  }

  if (session.phase === "await-start" || session.phase === "return-to-start") {
    ctx.strokeStyle = "#36c";
    ctx.lineWidth = 4;
    ctx.beginPath();
    ctx.moveTo(session.config.startPx * scale, 0);
    ctx.lineTo(session.config.startPx * scale, canvas.height);
    ctx.stroke();
  }
  const target = session.currentTarget;
  if (session.phase === "trial" && target) {
    drawTarget(target);
  }

  const phaseText: Record<string, string> = {
    "await-start": "click the blue start line to begin the next trial",
    trial: "click inside the red target",
    "return-to-start": "move back to the start position",
    done: "session complete - export your data",
  };
  hud.textContent =
    `trial ${Math.min(session.trialsCompleted + 1, session.trialsTotal)}/${session.trialsTotal}` +
    ` | ${phaseText[session.phase]}`;
  exportButton.disabled = session.trialsCompleted === 0;
  requestAnimationFrame(render);
}

canvas.addEventListener("pointermove", (ev) => {
  session.pointerMove(performance.now(), toCanvasX(ev.clientX), ev.offsetY);
});

canvas.addEventListener("pointerdown", (ev) => {
  const result = session.pointerClick(performance.now(), toCanvasX(ev.clientX), ev.offsetY);
  if (result.event === "misclick") {
    flashUntil = performance.now() + 150;
  }
});

window.addEventListener("resize", () => session.flagResize());

participantInput.addEventListener("change", () => {
  if (session.trialsCompleted === 0) {
    session = new Session({ participant: participantInput.value || "anonymous" });
  }
});

exportButton.addEventListener("click", async () => {
  try {
    const record = await session.export(Date.now());
    const blob = new Blob([JSON.stringify(record, null, 2)], { type: "application/json" });
    const a = document.createElement("a");
    a.href = URL.createObjectURL(blob);
    a.download = `pointclick-session-${record.session.participant}.json`;
    a.click();
    URL.revokeObjectURL(a.href);
  } catch (err) {
    hud.textContent = String(err);
  }
});

render();
