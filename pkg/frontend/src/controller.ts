/**
 * Review session state machine: one item in focus, decisions relayed to
 * the service, next item auto-fetched on success.
 *
 * Each decision attempt mints one idempotency key up front and reuses it
 * for retries of that same attempt, so a double submission (user mash or
 * network retry) records exactly one decision server-side. AlreadyDecided
 * is surfaced as a notice and the queue simply advances.
 */

import { ApiError, ReviewApi, ReviewView, StatsReport, Verdict, newIdempotencyKey } from "./api.js";
import { KeyAction } from "./keys.js";

export type Status = "loading" | "item" | "empty" | "disconnected";

export interface SessionCounts {
  accepted: number;
  rejected: number;
  edited: number;
}

export interface SessionState {
  status: Status;
  item: ReviewView | null;
  editing: boolean;
  draft: string;
  notice: string | null;
  queueDepth: number;
  submitting: boolean;
  session: SessionCounts;
  stats: StatsReport | null;
}

export class ReviewSession {
  state: SessionState = {
    status: "loading",
    item: null,
    editing: false,
    draft: "",
    notice: null,
    queueDepth: 0,
    submitting: false,
    session: { accepted: 0, rejected: 0, edited: 0 },
    stats: null,
  };

  private pendingKey: string | null = null;

  constructor(
    private api: ReviewApi,
    private reviewer: string,
    private onChange: (state: SessionState) => void = () => {},
  ) {}

  private emit() {
    this.onChange(this.state);
  }

  async loadNext(): Promise<void> {
    this.state.status = "loading";
    this.state.editing = false;
    this.state.submitting = false;
    this.pendingKey = null;
    this.emit();
    try {
      const item = await this.api.fetchNext(this.reviewer);
      this.state.item = item;
      this.state.queueDepth = item ? item.queue_depth : 0;
      this.state.status = item ? "item" : "empty";
    } catch {
      this.state.item = null;
      this.state.status = "disconnected";
    }
    this.emit();
  }

  async refreshStats(): Promise<void> {
    try {
      this.state.stats = await this.api.fetchStats();
      this.emit();
    } catch {
      // the sidebar is best-effort; decisions still work without it
    }
  }

  startEdit(): void {
    if (this.state.status !== "item" || !this.state.item) return;
    this.state.editing = true;
    this.state.draft = this.state.item.proposed_text;
    this.emit();
  }

  cancelEdit(): void {
    this.state.editing = false;
    this.state.draft = "";
    this.emit();
  }

  updateDraft(text: string): void {
    this.state.draft = text;
  }

  async decide(verdict: Verdict, editedText?: string): Promise<void> {
    const item = this.state.item;
    if (!item || this.state.submitting) return;
    if (verdict === "edit" && !(editedText ?? "").trim()) {
      this.state.notice = "Edited caption must not be empty.";
      this.emit();
      return;
    }
    // One key per decision attempt; reused if this same attempt retries.
    if (!this.pendingKey) this.pendingKey = newIdempotencyKey();
    this.state.submitting = true;
    this.state.notice = null;
    this.emit();
    try {
      const updated = await this.api.submitDecision(
        item.item_id,
        verdict,
        this.pendingKey,
        editedText,
        this.reviewer,
      );
      this.bumpSession(updated.state);
      await this.loadNext();
      void this.refreshStats();
    } catch (error) {
      if (error instanceof ApiError && error.code === "AlreadyDecided") {
        this.state.notice = "Item was already decided elsewhere; skipping ahead.";
        await this.loadNext();
        return;
      }
      this.state.submitting = false;
      this.state.status = error instanceof ApiError ? "item" : "disconnected";
      this.state.notice =
        error instanceof ApiError ? error.message : "Connection lost; retry when the service is back.";
      this.emit();
    }
  }

  private bumpSession(state: ReviewView["state"]): void {
    if (state === "accepted") this.state.session.accepted += 1;
    else if (state === "rejected") this.state.session.rejected += 1;
    else if (state === "edited") this.state.session.edited += 1;
  }

  async handleAction(action: KeyAction): Promise<void> {
    switch (action) {
      case "accept":
        return this.decide("accept");
      case "reject":
        return this.decide("reject");
      case "edit":
        this.startEdit();
        return;
      case "save_edit":
        await this.decide("edit", this.state.draft);
        return;
      case "cancel_edit":
        this.cancelEdit();
        return;
      default:
        return;
    }
  }
}
