/** Thin typed client for the label service. The fetch implementation is
 * injectable so tests can simulate outages. */

import type {
  AgreementView,
  LabelExport,
  LabelSubmission,
  NextBatch,
  RunView,
  SubmitAck,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
    readonly body: unknown = null,
  ) {
    super(message);
  }
}

export class LabelServiceClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    const body = await response.json().catch(() => null);
    if (!response.ok) {
      const message =
        body && typeof body === "object" && "error" in body
          ? String((body as { error: unknown }).error)
          : `HTTP ${response.status}`;
      throw new ApiError(message, response.status, body);
    }
    return body as T;
  }

  nextBatch(annotator: string, session: string, limit?: number): Promise<NextBatch> {
    const params = new URLSearchParams({ annotator, session });
    if (limit !== undefined) params.set("limit", String(limit));
    return this.request<NextBatch>(`/runs/next?${params}`);
  }

  getRun(runId: string): Promise<RunView> {
    return this.request<RunView>(`/runs/${encodeURIComponent(runId)}`);
  }

  submitLabel(label: LabelSubmission): Promise<SubmitAck> {
    return this.request<SubmitAck>("/labels", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(label),
    });
  }

  agreement(a: string, b: string): Promise<AgreementView> {
    const params = new URLSearchParams({ a, b });
    return this.request<AgreementView>(`/agreement?${params}`);
  }

  exportLabels(partial = false): Promise<LabelExport> {
    return this.request<LabelExport>(`/export${partial ? "?partial=1" : ""}`);
  }

  exportCsv(file: "labels" | "resolved", partial = false): Promise<string> {
    const params = new URLSearchParams({ format: "csv", file });
    if (partial) params.set("partial", "1");
    return this.fetchImpl(`${this.baseUrl}/export?${params}`).then(async (r) => {
      if (!r.ok) throw new ApiError(`HTTP ${r.status}`, r.status);
      return r.text();
    });
  }
}
