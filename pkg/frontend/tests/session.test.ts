import { describe, expect, it } from "vitest";

import type { LabelServiceClient } from "../src/api.js";
import { OfflineQueue, type KeyValueStore } from "../src/queue.js";
import { SessionFlow } from "../src/session.js";
import type {
  LabelSubmission,
  NextBatch,
  QualityLevel,
  RunView,
  SubmitAck,
} from "../src/types.js";

function memoryStore(): KeyValueStore {
  const map = new Map<string, string>();
  return { get: (k) => map.get(k) ?? null, set: (k, v) => map.set(k, v) };
}

/** Minimal in-memory service honoring the session-cap and dedup rules. */
class FakeService {
  online = true;
  labels = new Map<string, LabelSubmission>();
  private seq = 0;

  constructor(
    readonly runIds: string[],
    readonly cap = 160,
  ) {}

  client(): LabelServiceClient {
    return {
      nextBatch: async (annotator: string, session: string): Promise<NextBatch> => {
        if (!this.online) throw new Error("down");
        const labeled = new Set(
          [...this.labels.values()]
            .filter((l) => l.annotator_id === annotator)
            .map((l) => l.run_id),
        );
        const inSession = [...this.labels.values()].filter(
          (l) => l.annotator_id === annotator && l.session_id === session,
        ).length;
        const pending = this.runIds.filter((r) => !labeled.has(r)).sort();
        return {
          runs: pending.slice(0, Math.max(0, this.cap - inSession)).map((run_id) => ({
            run_id,
            task: "pick_up",
            instruction: `label ${run_id}`,
          })),
          session_done: inSession,
          session_cap: this.cap,
          total_pending: pending.length,
        };
      },
      getRun: async (runId: string): Promise<RunView> => {
        if (!this.online) throw new Error("down");
        return {
          run_id: runId,
          task: "pick_up",
          instruction: `label ${runId}`,
          steps: 2,
          dt: 0.2,
          media_url: null,
          tcp: [
            [0, 0, 0],
            [0.1, 0, 0],
          ],
          objects: {},
        };
      },
      submitLabel: async (label: LabelSubmission): Promise<SubmitAck> => {
        if (!this.online) throw new Error("down");
        const key = `${label.run_id}|${label.annotator_id}`;
        const overwrote = this.labels.has(key);
        this.labels.set(key, label);
        this.seq += 1;
        return { status: "ok", seq: this.seq, overwrote };
      },
    } as unknown as LabelServiceClient;
  }
}

function makeFlow(service: FakeService, store = memoryStore()) {
  const api = service.client();
  const queue = new OfflineQueue(
    (label) => api.submitLabel(label),
    store,
  );
  const seen: string[] = [];
  const flow = new SessionFlow(api, queue, "ann", "s1", {
    onRun: (run) => seen.push(run.run_id),
  });
  return { flow, queue, seen };
}

describe("SessionFlow", () => {
  it("walks every pending run in deterministic order", async () => {
    const service = new FakeService(["r3", "r1", "r2"]);
    const { flow, seen } = makeFlow(service);
    await flow.start();
    while (flow.current !== null) {
      await flow.label("high");
    }
    expect(seen).toEqual(["r1", "r2", "r3"]);
    expect(service.labels.size).toBe(3);
    expect(flow.progress().remaining).toBe(0);
  });

  it("labels chosen by the user are what arrives", async () => {
    const service = new FakeService(["r1", "r2"]);
    const { flow } = makeFlow(service);
    await flow.start();
    const choices: QualityLevel[] = ["low", "false_negative"];
    for (const level of choices) {
      await flow.label(level);
    }
    expect(service.labels.get("r1|ann")?.label).toBe("low");
    expect(service.labels.get("r2|ann")?.label).toBe("false_negative");
  });

  it("keeps going offline and recovers without losing labels", async () => {
    const service = new FakeService(["r1", "r2", "r3"]);
    const { flow, queue } = makeFlow(service);
    await flow.start();
    await flow.label("high"); // online
    service.online = false;
    await flow.label("medium"); // queued
    await flow.label("low"); // queued
    expect(queue.depth).toBe(2);
    expect(flow.current).toBeNull(); // finished labeling locally
    expect(service.labels.size).toBe(1);

    service.online = true;
    const delivered = await flow.reconnect();
    expect(delivered).toBe(2);
    expect(service.labels.size).toBe(3);
    expect(service.labels.get("r2|ann")?.label).toBe("medium");
    expect(service.labels.get("r3|ann")?.label).toBe("low");
  });

  it("resumes an interrupted session from persisted state", async () => {
    const service = new FakeService(["r1", "r2"]);
    const store = memoryStore();
    const first = makeFlow(service, store);
    await first.flow.start();
    service.online = false;
    await first.flow.label("high"); // queued, then the tab "crashes"

    service.online = true;
    const second = makeFlow(service, store);
    await second.flow.start(); // start() flushes the inherited queue
    expect(service.labels.get("r1|ann")?.label).toBe("high");
    expect(second.flow.current?.run_id).toBe("r2");
  });

  it("respects the session cap", async () => {
    const service = new FakeService(["r1", "r2", "r3"], 2);
    const { flow } = makeFlow(service);
    await flow.start();
    await flow.label("high");
    await flow.label("high");
    expect(flow.current).toBeNull(); // cap reached, nothing offered
    expect(service.labels.size).toBe(2);
  });

  it("refuses to label when no run is active", async () => {
    const service = new FakeService([]);
    const { flow } = makeFlow(service);
    await flow.start();
    await expect(flow.label("high")).rejects.toThrow("no run");
  });
});
