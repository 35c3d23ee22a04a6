import { describe, expect, it } from "vitest";

import { OfflineQueue, type KeyValueStore } from "../src/queue.js";
import type { LabelSubmission, SubmitAck } from "../src/types.js";

function memoryStore(): KeyValueStore {
  const map = new Map<string, string>();
  return { get: (k) => map.get(k) ?? null, set: (k, v) => map.set(k, v) };
}

/** In-memory stand-in for the service with a togglable outage. */
class FakeServer {
  online = true;
  deliverButFail = false; // simulates a response lost after delivery
  events: LabelSubmission[] = [];
  private seq = 0;

  submit = async (label: LabelSubmission): Promise<SubmitAck> => {
    if (!this.online) throw new Error("network down");
    this.events.push(label);
    this.seq += 1;
    if (this.deliverButFail) throw new Error("response lost");
    const overwrote = this.events
      .slice(0, -1)
      .some((e) => e.run_id === label.run_id && e.annotator_id === label.annotator_id);
    return { status: "ok", seq: this.seq, overwrote };
  };

  effective(): Map<string, string> {
    const map = new Map<string, string>();
    for (const e of this.events) map.set(`${e.run_id}|${e.annotator_id}`, e.label);
    return map;
  }
}

const label = (runId: string, level = "high"): LabelSubmission => ({
  run_id: runId,
  annotator_id: "ann",
  label: level as LabelSubmission["label"],
  session_id: "s1",
});

describe("OfflineQueue", () => {
  it("delivers immediately while online", async () => {
    const server = new FakeServer();
    const queue = new OfflineQueue(server.submit, memoryStore());
    const result = await queue.enqueue(label("r1"));
    expect(result.state).toBe("delivered");
    expect(queue.depth).toBe(0);
    expect(server.events).toHaveLength(1);
  });

  it("keeps labels through an outage and flushes on reconnect", async () => {
    const server = new FakeServer();
    const queue = new OfflineQueue(server.submit, memoryStore());
    server.online = false;
    for (const id of ["r1", "r2", "r3"]) {
      expect((await queue.enqueue(label(id))).state).toBe("queued");
    }
    expect(queue.depth).toBe(3);
    expect(server.events).toHaveLength(0);

    server.online = true;
    const delivered = await queue.flush();
    expect(delivered.map((d) => d.run_id)).toEqual(["r1", "r2", "r3"]);
    expect(queue.depth).toBe(0);
    expect(server.effective().size).toBe(3);
  });

  it("replaces a pending relabel of the same run instead of duplicating", async () => {
    const server = new FakeServer();
    const queue = new OfflineQueue(server.submit, memoryStore());
    server.online = false;
    await queue.enqueue(label("r1", "high"));
    await queue.enqueue(label("r1", "low"));
    expect(queue.depth).toBe(1);
    server.online = true;
    await queue.flush();
    expect(server.events).toHaveLength(1);
    expect(server.effective().get("r1|ann")).toBe("low");
  });

  it("survives an interrupted session via persistent storage", async () => {
    const server = new FakeServer();
    const store = memoryStore();
    const first = new OfflineQueue(server.submit, store);
    server.online = false;
    await first.enqueue(label("r1"));
    await first.enqueue(label("r2"));
    // "crash": a new queue instance over the same storage
    server.online = true;
    const resumed = new OfflineQueue(server.submit, store);
    expect(resumed.depth).toBe(2);
    await resumed.flush();
    expect(server.effective().size).toBe(2);
  });

  it("retry after a lost response overwrites idempotently", async () => {
    const server = new FakeServer();
    const queue = new OfflineQueue(server.submit, memoryStore());
    server.deliverButFail = true;
    expect((await queue.enqueue(label("r1", "medium"))).state).toBe("queued");
    expect(server.events).toHaveLength(1); // it did arrive
    server.deliverButFail = false;
    await queue.flush();
    // audit trail shows the retry, but the effective state has no duplicate
    expect(server.events).toHaveLength(2);
    expect(server.effective().size).toBe(1);
    expect(server.effective().get("r1|ann")).toBe("medium");
  });

  it("records acknowledged sequence numbers as the audit trail", async () => {
    const server = new FakeServer();
    const queue = new OfflineQueue(server.submit, memoryStore());
    await queue.enqueue(label("r1"));
    await queue.enqueue(label("r2"));
    const seqs = [...queue.deliveredAcks.values()].map((a) => a.seq);
    expect(seqs).toEqual([1, 2]);
  });
});
