import { describe, expect, it } from "vitest";

import { ApiError, ReviewView } from "../src/api.js";
import { ReviewSession } from "../src/controller.js";

function view(id: string, depth: number): ReviewView {
  return {
    item_id: id,
    record_id: `rec-${id}`,
    proposed_text: `caption for ${id}`,
    provenance: ["ingested:raw", "selected"],
    reason: "sampled_audit",
    state: "pending",
    edited_text: null,
    image_url: `/images/rec-${id}`,
    queue_depth: depth,
  };
}

interface Submission {
  itemId: string;
  verdict: string;
  key: string;
  editedText?: string;
}

class FakeApi {
  queue: ReviewView[];
  submissions: Submission[] = [];
  failNextFetch = false;
  decidedElsewhere = new Set<string>();

  constructor(items: ReviewView[]) {
    this.queue = [...items];
  }

  async fetchNext(): Promise<ReviewView | null> {
    if (this.failNextFetch) {
      this.failNextFetch = false;
      throw new TypeError("fetch failed");
    }
    return this.queue.length ? { ...this.queue[0], queue_depth: this.queue.length } : null;
  }

  async submitDecision(
    itemId: string,
    verdict: "accept" | "reject" | "edit",
    key: string,
    editedText?: string,
  ): Promise<ReviewView> {
    if (this.decidedElsewhere.has(itemId)) {
      throw new ApiError(409, "AlreadyDecided");
    }
    this.submissions.push({ itemId, verdict, key, editedText });
    const item = this.queue.shift()!;
    const state = verdict === "accept" ? "accepted" : verdict === "reject" ? "rejected" : "edited";
    return { ...item, state, edited_text: editedText ?? null };
  }

  async fetchStats() {
    return {
      pair_count: 0,
      distinct_concepts: 0,
      per_source: {},
      instruction_sample_count: 0,
      review: { pending: this.queue.length, accepted: 0, rejected: 0, edited: 0 },
    };
  }

  imageUrl(v: ReviewView): string {
    return v.image_url;
  }
}

function makeSession(api: FakeApi): ReviewSession {
  return new ReviewSession(api as never, "tester");
}

describe("review session", () => {
  it("loads the first pending item with queue depth", async () => {
    const api = new FakeApi([view("i1", 2), view("i2", 1)]);
    const session = makeSession(api);
    await session.loadNext();
    expect(session.state.status).toBe("item");
    expect(session.state.item?.item_id).toBe("i1");
    expect(session.state.queueDepth).toBe(2);
  });

  it("shows the idle state on an empty queue", async () => {
    const session = makeSession(new FakeApi([]));
    await session.loadNext();
    expect(session.state.status).toBe("empty");
    expect(session.state.queueDepth).toBe(0);
  });

  it("accept advances to the next item and counts the session", async () => {
    const api = new FakeApi([view("i1", 2), view("i2", 1)]);
    const session = makeSession(api);
    await session.loadNext();
    await session.decide("accept");
    expect(api.submissions).toHaveLength(1);
    expect(api.submissions[0].verdict).toBe("accept");
    expect(api.submissions[0].key).toBeTruthy();
    expect(session.state.item?.item_id).toBe("i2");
    expect(session.state.session.accepted).toBe(1);
  });

  it("edit flow prefills the draft and submits edited text", async () => {
    const api = new FakeApi([view("i1", 1)]);
    const session = makeSession(api);
    await session.loadNext();
    session.startEdit();
    expect(session.state.editing).toBe(true);
    expect(session.state.draft).toBe("caption for i1");
    session.updateDraft("a corrected caption");
    await session.decide("edit", "a corrected caption");
    expect(api.submissions[0].verdict).toBe("edit");
    expect(api.submissions[0].editedText).toBe("a corrected caption");
    expect(session.state.session.edited).toBe(1);
    expect(session.state.status).toBe("empty");
  });

  it("refuses an empty edit", async () => {
    const api = new FakeApi([view("i1", 1)]);
    const session = makeSession(api);
    await session.loadNext();
    await session.decide("edit", "   ");
    expect(api.submissions).toHaveLength(0);
    expect(session.state.notice).toMatch(/must not be empty/);
  });

  it("AlreadyDecided is a non-fatal notice and advances", async () => {
    const api = new FakeApi([view("i1", 2), view("i2", 1)]);
    const session = makeSession(api);
    await session.loadNext();
    api.decidedElsewhere.add("i1");
    api.queue.shift(); // another reviewer took it
    await session.decide("accept");
    expect(session.state.notice).toMatch(/already decided/i);
    expect(session.state.item?.item_id).toBe("i2");
    expect(api.submissions).toHaveLength(0);
  });

  it("connection failure shows the retryable banner state", async () => {
    const api = new FakeApi([view("i1", 1)]);
    api.failNextFetch = true;
    const session = makeSession(api);
    await session.loadNext();
    expect(session.state.status).toBe("disconnected");
    await session.loadNext(); // retry succeeds
    expect(session.state.status).toBe("item");
  });

  it("keyboard actions route through the same decision path", async () => {
    const api = new FakeApi([view("i1", 2), view("i2", 1)]);
    const session = makeSession(api);
    await session.loadNext();
    await session.handleAction("reject");
    expect(api.submissions[0].verdict).toBe("reject");
    await session.handleAction("edit");
    expect(session.state.editing).toBe(true);
    await session.handleAction("cancel_edit");
    expect(session.state.editing).toBe(false);
  });
});
