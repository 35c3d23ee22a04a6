/** Browser bootstrap: wires the session flow and agreement view to the DOM.
 *
 * Labels are only ever submitted from the four buttons (or their keyboard
 * shortcuts 1-4); everything else on this page is read-only.
 */

import { LabelServiceClient } from "./api.js";
import { summarizeAgreement } from "./agreement.js";
import { drawFrame, PlaybackModel } from "./playback.js";
import { OfflineQueue } from "./queue.js";
import { SessionFlow } from "./session.js";
import { QUALITY_LEVELS, type QualityLevel, type RunView } from "./types.js";

const api = new LabelServiceClient("");

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

let player: { stop(): void } | null = null;

function showRun(view: RunView | null): void {
  player?.stop();
  player = null;
  const video = el<HTMLVideoElement>("video");
  const canvas = el<HTMLCanvasElement>("playback");
  if (view === null) {
    el("instruction").textContent = "(run details unavailable offline)";
    video.hidden = true;
    canvas.hidden = true;
    return;
  }
  el("instruction").textContent = view.instruction;
  el("task").textContent = view.task;
  if (view.media_url) {
    video.src = view.media_url;
    video.hidden = false;
    canvas.hidden = true;
    void video.play().catch(() => undefined);
    return;
  }
  // no video: animate the recorded TCP path instead
  video.hidden = true;
  canvas.hidden = false;
  const model = new PlaybackModel(view);
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  let step = 0;
  const interval = window.setInterval(() => {
    drawFrame(ctx, model, step, canvas.width, canvas.height);
    step = (step + 1) % model.length;
  }, Math.max(20, view.dt * 1000));
  player = { stop: () => window.clearInterval(interval) };
}

function setStatus(text: string): void {
  el("status").textContent = text;
}

async function startSession(): Promise<void> {
  const annotator = el<HTMLInputElement>("annotator").value.trim();
  const session = el<HTMLInputElement>("session").value.trim() || `session-${Date.now()}`;
  if (!annotator) {
    setStatus("enter an annotator id first");
    return;
  }
  const queue = new OfflineQueue((label) => api.submitLabel(label));
  const flow = new SessionFlow(api, queue, annotator, session, {
    onRun: (run, view) => {
      el("run-id").textContent = run.run_id;
      showRun(view);
    },
    onProgress: (p) => {
      el("progress").textContent =
        `${p.done} / ${p.cap} this session` +
        (p.queued > 0 ? ` (${p.queued} queued offline)` : "");
      const bar = el<HTMLProgressElement>("progress-bar");
      bar.max = p.cap || 1;
      bar.value = p.done;
    },
    onFinished: () => {
      el("run-id").textContent = "-";
      el("instruction").textContent = "All runs labeled. Thank you!";
      player?.stop();
    },
  });

  const submit = (level: QualityLevel) => {
    if (flow.current === null) return;
    void flow.label(level).then(
      () => setStatus(""),
      (err) => setStatus(String(err)),
    );
  };
  QUALITY_LEVELS.forEach((level, index) => {
    el(`btn-${level}`).onclick = () => submit(level);
    el(`btn-${level}`).append(` [${index + 1}]`);
  });
  document.onkeydown = (event) => {
    const index = Number(event.key) - 1;
    const level = QUALITY_LEVELS[index];
    if (level && !(event.target instanceof HTMLInputElement)) submit(level);
  };
  window.addEventListener("online", () => {
    void flow.reconnect().then((n) => n && setStatus(`${n} queued labels delivered`));
  });

  el("setup").hidden = true;
  el("labeling").hidden = false;
  await flow.start();
}

async function showAgreement(): Promise<void> {
  const a = el<HTMLInputElement>("rater-a").value.trim();
  const b = el<HTMLInputElement>("rater-b").value.trim();
  try {
    const summary = summarizeAgreement(await api.agreement(a, b));
    el("agreement-headline").textContent = summary.headline;
    el("agreement-observed").textContent =
      `${summary.observed} over ${summary.items} shared runs`;
    const list = el("disagreements");
    list.innerHTML = "";
    for (const row of summary.disagreements) {
      const item = document.createElement("li");
      item.textContent = `${row["run_id"]}: ${a}=${row[a]}, ${b}=${row[b]}`;
      list.appendChild(item);
    }
  } catch (err) {
    el("agreement-headline").textContent = String(err);
    el("agreement-observed").textContent = "";
  }
}

el("start").onclick = () => void startSession();
el("show-agreement").onclick = () => void showAgreement();
