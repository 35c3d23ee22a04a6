/** Headless annotation session flow.
 *
 * Fetches the next batch of unlabeled successful runs, walks the annotator
 * through them one by one, and pushes every decision through the offline
 * queue. The DOM layer only renders the state this class exposes and calls
 * `label()` on explicit user actions; nothing else ever submits.
 */

import type { LabelServiceClient } from "./api.js";
import type { OfflineQueue } from "./queue.js";
import type { NextBatch, QualityLevel, RunDescriptor, RunView } from "./types.js";

export interface SessionProgress {
  done: number; // labels in this session, including queued ones
  cap: number;
  queued: number; // awaiting reconnection
  remaining: number; // unlabeled runs still pending overall
}

export interface SessionEvents {
  onRun?(run: RunDescriptor, view: RunView | null): void;
  onProgress?(progress: SessionProgress): void;
  onFinished?(): void;
}

export class SessionFlow {
  private batch: RunDescriptor[] = [];
  private batchInfo: NextBatch | null = null;
  private labeledNow = 0;
  current: RunDescriptor | null = null;

  constructor(
    private readonly api: LabelServiceClient,
    private readonly queue: OfflineQueue,
    readonly annotatorId: string,
    readonly sessionId: string,
    private readonly events: SessionEvents = {},
  ) {}

  progress(): SessionProgress {
    const done = (this.batchInfo?.session_done ?? 0) + this.labeledNow;
    return {
      done,
      cap: this.batchInfo?.session_cap ?? 0,
      queued: this.queue.depth,
      remaining: Math.max(0, (this.batchInfo?.total_pending ?? 0) - this.labeledNow),
    };
  }

  /** Start (or resume) the session: flush anything queued from an earlier
   * interrupted session, then fetch work. */
  async start(): Promise<void> {
    await this.queue.flush();
    await this.refill();
    await this.advance();
  }

  private async refill(): Promise<void> {
    this.batchInfo = await this.api.nextBatch(this.annotatorId, this.sessionId);
    // runs we have labeled into the queue are not yet visible server-side
    const queuedIds = new Set(this.locallyLabeled);
    this.batch = this.batchInfo.runs.filter((r) => !queuedIds.has(r.run_id));
  }

  private locallyLabeled: string[] = [];

  private async advance(): Promise<void> {
    this.events.onProgress?.(this.progress());
    const next = this.batch.shift();
    if (next === undefined) {
      try {
        await this.refill();
      } catch {
        // offline: labels so far sit safely in the queue; stop offering work
        this.current = null;
        this.events.onFinished?.();
        return;
      }
      const refreshed = this.batch.shift();
      if (refreshed === undefined) {
        this.current = null;
        this.events.onFinished?.();
        return;
      }
      this.current = refreshed;
    } else {
      this.current = next;
    }
    let view: RunView | null = null;
    try {
      view = await this.api.getRun(this.current.run_id);
    } catch {
      view = null; // offline: the descriptor alone still allows labeling
    }
    this.events.onRun?.(this.current, view);
  }

  /** Record the annotator's decision for the run on screen and move on.
   * Never called except from an explicit user action. */
  async label(level: QualityLevel): Promise<void> {
    if (this.current === null) {
      throw new Error("no run is active");
    }
    const run = this.current;
    await this.queue.enqueue({
      run_id: run.run_id,
      annotator_id: this.annotatorId,
      label: level,
      session_id: this.sessionId,
    });
    this.locallyLabeled.push(run.run_id);
    this.labeledNow += 1;
    await this.advance();
  }

  /** Retry queued labels after a reconnect. */
  async reconnect(): Promise<number> {
    const delivered = await this.queue.flush();
    this.events.onProgress?.(this.progress());
    return delivered.length;
  }
}
