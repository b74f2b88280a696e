/**
 * Typed client for the curation service HTTP API (see ../API.md).
 *
 * The station never constructs dataset content: every caption shown comes
 * straight from the service, and every mutation carries an idempotency key
 * so network retries record exactly one decision.
 */

export type Verdict = "accept" | "reject" | "edit";
export type ReviewReason =
  | "low_similarity_margin"
  | "subtitle_aligned"
  | "sampled_audit";

export interface ReviewView {
  item_id: string;
  record_id: string;
  proposed_text: string;
  provenance: string[];
  reason: ReviewReason;
  state: "pending" | "accepted" | "rejected" | "edited";
  edited_text: string | null;
  image_url: string;
  queue_depth: number;
}

export interface ReviewCounts {
  pending: number;
  accepted: number;
  rejected: number;
  edited: number;
}

export interface StatsReport {
  pair_count: number;
  distinct_concepts: number;
  per_source: Record<string, number>;
  instruction_sample_count: number;
  review: ReviewCounts;
}

export interface Job {
  job_id: string;
  kind: string;
  state: "queued" | "running" | "done" | "failed";
  progress: { done: number; total: number };
  error: string | null;
  params: Record<string, unknown>;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    detail?: string,
  ) {
    super(detail ? `${code}: ${detail}` : code);
  }
}

export function newIdempotencyKey(): string {
  if (typeof crypto !== "undefined" && "randomUUID" in crypto) {
    return crypto.randomUUID();
  }
  return `ik-${Date.now()}-${Math.random().toString(36).slice(2)}`;
}

async function raiseFor(response: Response): Promise<never> {
  let code = `Http${response.status}`;
  let detail: string | undefined;
  try {
    const body = (await response.json()) as { error?: string; detail?: string };
    if (body.error) code = body.error;
    detail = body.detail;
  } catch {
    // non-JSON error body; keep the status code
  }
  throw new ApiError(response.status, code, detail);
}

export class ReviewApi {
  constructor(
    private baseUrl: string,
    private token?: string,
  ) {}

  private headers(json: boolean): Record<string, string> {
    const headers: Record<string, string> = {};
    if (json) headers["Content-Type"] = "application/json";
    if (this.token) headers["X-Api-Token"] = this.token;
    return headers;
  }

  imageUrl(view: ReviewView): string {
    return this.baseUrl + view.image_url;
  }

  /** Next pending item, or null when the queue is empty (204). */
  async fetchNext(reviewer: string): Promise<ReviewView | null> {
    const url = `${this.baseUrl}/review/next?reviewer=${encodeURIComponent(reviewer)}`;
    const response = await fetch(url, { headers: this.headers(false) });
    if (response.status === 204) return null;
    if (!response.ok) await raiseFor(response);
    return (await response.json()) as ReviewView;
  }

  async submitDecision(
    itemId: string,
    verdict: Verdict,
    idempotencyKey: string,
    editedText?: string,
    reviewer?: string,
  ): Promise<ReviewView> {
    const body: Record<string, unknown> = {
      verdict,
      idempotency_key: idempotencyKey,
    };
    if (editedText !== undefined) body.edited_text = editedText;
    if (reviewer) body.reviewer = reviewer;
    const response = await fetch(
      `${this.baseUrl}/review/${encodeURIComponent(itemId)}/decision`,
      { method: "POST", headers: this.headers(true), body: JSON.stringify(body) },
    );
    if (!response.ok) await raiseFor(response);
    return (await response.json()) as ReviewView;
  }

  async fetchStats(): Promise<StatsReport> {
    const response = await fetch(`${this.baseUrl}/stats`, {
      headers: this.headers(false),
    });
    if (!response.ok) await raiseFor(response);
    return (await response.json()) as StatsReport;
  }

  async submitJob(kind: string, params: Record<string, unknown>): Promise<Job> {
    const response = await fetch(`${this.baseUrl}/jobs`, {
      method: "POST",
      headers: this.headers(true),
      body: JSON.stringify({ kind, params }),
    });
    if (!response.ok) await raiseFor(response);
    return (await response.json()) as Job;
  }

  async getJob(jobId: string): Promise<Job> {
    const response = await fetch(`${this.baseUrl}/jobs/${jobId}`, {
      headers: this.headers(false),
    });
    if (!response.ok) await raiseFor(response);
    return (await response.json()) as Job;
  }

  async waitForJob(jobId: string, timeoutMs = 60_000): Promise<Job> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const job = await this.getJob(jobId);
      if (job.state === "done" || job.state === "failed") return job;
      if (Date.now() > deadline) throw new Error(`job ${jobId} timed out`);
      await new Promise((resolve) => setTimeout(resolve, 100));
    }
  }
}
