/** Trajectory playback for runs without a sidecar video.
 *
 * The model side is pure: it turns a run view into per-step frames (TCP
 * point plus object markers) and a top-down projection; the canvas renderer
 * consumes frames and never touches the run data otherwise.
 */

import type { RunView } from "./types.js";

export interface Frame {
  step: number;
  tcp: number[];
  objects: { id: string; role: string; position: number[] }[];
}

export class PlaybackModel {
  readonly frames: Frame[];

  constructor(view: RunView) {
    if (view.tcp === null) {
      throw new Error(`run ${view.run_id} has no TCP path to play back`);
    }
    if (view.tcp.length !== view.steps) {
      throw new Error(
        `run ${view.run_id}: playback timeline has ${view.tcp.length} frames` +
          ` but the trace has ${view.steps} steps`,
      );
    }
    for (const [id, track] of Object.entries(view.objects)) {
      if (track.positions.length !== view.steps) {
        throw new Error(`run ${view.run_id}: object ${id} track length mismatch`);
      }
    }
    this.frames = view.tcp.map((tcp, step) => ({
      step,
      tcp,
      objects: Object.entries(view.objects).map(([id, track]) => ({
        id,
        role: track.role,
        position: track.positions[step]!,
      })),
    }));
  }

  get length(): number {
    return this.frames.length;
  }

  frame(step: number): Frame {
    const frame = this.frames[step];
    if (frame === undefined) {
      throw new Error(`no frame ${step}`);
    }
    return frame;
  }

  /** Bounding box over everything drawn, for scaling the canvas view. */
  bounds(): { min: number[]; max: number[] } {
    const min = [Infinity, Infinity, Infinity];
    const max = [-Infinity, -Infinity, -Infinity];
    const absorb = (p: number[]) => {
      for (let i = 0; i < 3; i++) {
        min[i] = Math.min(min[i]!, p[i]!);
        max[i] = Math.max(max[i]!, p[i]!);
      }
    };
    for (const frame of this.frames) {
      absorb(frame.tcp);
      frame.objects.forEach((o) => absorb(o.position));
    }
    return { min, max };
  }
}

const ROLE_COLORS: Record<string, string> = {
  target: "#e5484d",
  secondary_target: "#f7b500",
  destination: "#46a758",
  confounder: "#8d8d8d",
};

/** Draw one frame as a top-down (x, y) view; z modulates the TCP marker. */
export function drawFrame(
  ctx: CanvasRenderingContext2D,
  model: PlaybackModel,
  step: number,
  width: number,
  height: number,
): void {
  const { min, max } = model.bounds();
  const pad = 20;
  const spanX = Math.max(max[0]! - min[0]!, 1e-6);
  const spanY = Math.max(max[1]! - min[1]!, 1e-6);
  const scale = Math.min((width - 2 * pad) / spanX, (height - 2 * pad) / spanY);
  const toCanvas = (p: number[]): [number, number] => [
    pad + (p[0]! - min[0]!) * scale,
    height - pad - (p[1]! - min[1]!) * scale,
  ];

  ctx.clearRect(0, 0, width, height);
  // trail up to the current step
  ctx.strokeStyle = "#6e56cf";
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  for (let i = 0; i <= step; i++) {
    const [x, y] = toCanvas(model.frame(i).tcp);
    if (i === 0) ctx.moveTo(x, y);
    else ctx.lineTo(x, y);
  }
  ctx.stroke();

  const frame = model.frame(step);
  for (const obj of frame.objects) {
    const [x, y] = toCanvas(obj.position);
    ctx.fillStyle = ROLE_COLORS[obj.role] ?? "#555";
    ctx.beginPath();
    ctx.arc(x, y, 6, 0, 2 * Math.PI);
    ctx.fill();
  }
  const [tx, ty] = toCanvas(frame.tcp);
  const zSpan = Math.max(max[2]! - min[2]!, 1e-6);
  const radius = 4 + (6 * (frame.tcp[2]! - min[2]!)) / zSpan;
  ctx.fillStyle = "#6e56cf";
  ctx.beginPath();
  ctx.arc(tx, ty, radius, 0, 2 * Math.PI);
  ctx.fill();
}
