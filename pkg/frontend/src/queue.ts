/** Offline-tolerant label delivery.
 *
 * Every submission goes through the queue. Delivery failures keep the label
 * pending (persisted, so an interrupted session can resume); a flush retries
 * in order. Relabeling the same run replaces the pending entry, and the
 * server overwrites on redelivery, so retries can never duplicate or lose a
 * label. Acknowledged sequence numbers are kept as the client-side audit
 * trail.
 */

import type { LabelSubmission, SubmitAck } from "./types.js";

export interface KeyValueStore {
  get(key: string): string | null;
  set(key: string, value: string): void;
}

/** localStorage when present (browser), otherwise a per-session map. */
export function defaultStore(): KeyValueStore {
  if (typeof localStorage !== "undefined") {
    return {
      get: (k) => localStorage.getItem(k),
      set: (k, v) => localStorage.setItem(k, v),
    };
  }
  const map = new Map<string, string>();
  return { get: (k) => map.get(k) ?? null, set: (k, v) => map.set(k, v) };
}

export interface QueuedLabel extends LabelSubmission {
  client_tag: string; // unique id of the user action that produced the label
}

export type Delivery = { state: "delivered"; ack: SubmitAck } | { state: "queued" };

export class OfflineQueue {
  private pending: QueuedLabel[] = [];
  private readonly acks = new Map<string, SubmitAck>(); // client_tag -> ack
  private tagCounter = 0;

  constructor(
    private readonly submit: (label: LabelSubmission) => Promise<SubmitAck>,
    private readonly store: KeyValueStore = defaultStore(),
    private readonly storeKey = "vlameter.pending-labels",
  ) {
    const saved = this.store.get(this.storeKey);
    if (saved) {
      this.pending = JSON.parse(saved) as QueuedLabel[];
      this.tagCounter = this.pending.length;
    }
  }

  get depth(): number {
    return this.pending.length;
  }

  get deliveredAcks(): ReadonlyMap<string, SubmitAck> {
    return this.acks;
  }

  private persist(): void {
    this.store.set(this.storeKey, JSON.stringify(this.pending));
  }

  private nextTag(annotator: string): string {
    this.tagCounter += 1;
    return `${annotator}-${Date.now()}-${this.tagCounter}`;
  }

  /** Queue one label (replacing any pending label for the same run by the
   * same annotator) and attempt immediate delivery. */
  async enqueue(label: LabelSubmission): Promise<Delivery> {
    const entry: QueuedLabel = { ...label, client_tag: this.nextTag(label.annotator_id) };
    this.pending = this.pending.filter(
      (p) => !(p.run_id === entry.run_id && p.annotator_id === entry.annotator_id),
    );
    this.pending.push(entry);
    this.persist();
    const delivered = await this.flush();
    return delivered.find((d) => d.client_tag === entry.client_tag)
      ? { state: "delivered", ack: this.acks.get(entry.client_tag)! }
      : { state: "queued" };
  }

  /** Retry all pending labels in order; stops at the first failure so
   * ordering is preserved. Returns the labels that got through. */
  async flush(): Promise<QueuedLabel[]> {
    const delivered: QueuedLabel[] = [];
    while (this.pending.length > 0) {
      const entry = this.pending[0]!;
      try {
        const ack = await this.submit(entry);
        this.acks.set(entry.client_tag, ack);
      } catch {
        break; // still offline; keep everything from here on queued
      }
      this.pending.shift();
      delivered.push(entry);
      this.persist();
    }
    return delivered;
  }
}
