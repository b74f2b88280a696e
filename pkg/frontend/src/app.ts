/**
 * DOM wiring for the review station. Single-item focus view: image on the
 * left, caption + provenance on the right, A/R/E keyboard shortcuts, and
 * a stats sidebar fed by GET /stats.
 *
 * The API base defaults to the page origin; override with ?api=http://host:port
 * when the station is served separately from the curation service.
 */

import { ReviewApi } from "./api.js";
import { ReviewSession, SessionState } from "./controller.js";
import { actionForKey } from "./keys.js";

const REASON_LABELS: Record<string, string> = {
  subtitle_aligned: "subtitle-aligned",
  low_similarity_margin: "similarity margin",
  sampled_audit: "audit sample",
};

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function apiBase(): string {
  const override = new URLSearchParams(window.location.search).get("api");
  return (override ?? window.location.origin).replace(/\/$/, "");
}

function render(api: ReviewApi, state: SessionState): void {
  const banner = el<HTMLDivElement>("banner");
  const card = el<HTMLDivElement>("card");
  const idle = el<HTMLDivElement>("idle");
  const notice = el<HTMLDivElement>("notice");

  banner.hidden = state.status !== "disconnected";
  idle.hidden = state.status !== "empty";
  card.hidden = state.status !== "item";
  notice.hidden = !state.notice;
  notice.textContent = state.notice ?? "";
  el<HTMLSpanElement>("queue-depth").textContent = String(state.queueDepth);

  const session = state.session;
  el<HTMLSpanElement>("session-counts").textContent =
    `${session.accepted} accepted / ${session.rejected} rejected / ${session.edited} edited`;
  if (state.stats) {
    const review = state.stats.review;
    el<HTMLDivElement>("stats").textContent =
      `corpus: ${state.stats.pair_count} pairs, ${state.stats.distinct_concepts} concepts | ` +
      `review totals: ${review.accepted} accepted, ${review.rejected} rejected, ` +
      `${review.edited} edited, ${review.pending} pending`;
  }

  if (state.status === "item" && state.item) {
    const item = state.item;
    el<HTMLImageElement>("item-image").src = api.imageUrl(item);
    el<HTMLParagraphElement>("proposed-text").textContent = item.proposed_text;
    el<HTMLSpanElement>("reason-badge").textContent = REASON_LABELS[item.reason] ?? item.reason;
    el<HTMLSpanElement>("reason-badge").dataset.reason = item.reason;
    const chain = el<HTMLUListElement>("provenance");
    chain.replaceChildren(
      ...item.provenance.map((tag) => {
        const li = document.createElement("li");
        li.textContent = tag;
        return li;
      }),
    );
    const editor = el<HTMLTextAreaElement>("editor");
    el<HTMLDivElement>("edit-pane").hidden = !state.editing;
    el<HTMLDivElement>("decision-buttons").hidden = state.editing;
    if (state.editing && document.activeElement !== editor) {
      editor.value = state.draft;
      editor.focus();
    }
  }
}

function main(): void {
  const api = new ReviewApi(apiBase());
  const reviewer =
    new URLSearchParams(window.location.search).get("reviewer") ?? "anonymous";
  const session = new ReviewSession(api, reviewer, (state) => render(api, state));

  el<HTMLButtonElement>("accept").addEventListener("click", () => void session.decide("accept"));
  el<HTMLButtonElement>("reject").addEventListener("click", () => void session.decide("reject"));
  el<HTMLButtonElement>("edit").addEventListener("click", () => session.startEdit());
  el<HTMLButtonElement>("save-edit").addEventListener("click", () => {
    session.updateDraft(el<HTMLTextAreaElement>("editor").value);
    void session.decide("edit", el<HTMLTextAreaElement>("editor").value);
  });
  el<HTMLButtonElement>("cancel-edit").addEventListener("click", () => session.cancelEdit());
  el<HTMLButtonElement>("retry").addEventListener("click", () => void session.loadNext());

  document.addEventListener("keydown", (event) => {
    const target = event.target as HTMLElement | null;
    const action = actionForKey(
      {
        key: event.key,
        ctrlOrMeta: event.ctrlKey || event.metaKey,
        inTextField:
          !!target && (target.tagName === "TEXTAREA" || target.tagName === "INPUT"),
      },
      session.state.editing,
    );
    if (!action) return;
    event.preventDefault();
    if (action === "save_edit") {
      session.updateDraft(el<HTMLTextAreaElement>("editor").value);
    }
    void session.handleAction(action);
  });

  void session.loadNext();
  void session.refreshStats();
}

document.addEventListener("DOMContentLoaded", main);
