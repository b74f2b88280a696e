import { describe, expect, it } from "vitest";

import { actionForKey } from "../src/keys.js";

describe("keyboard mapping", () => {
  it("maps A/R/E outside edit mode", () => {
    expect(actionForKey({ key: "a" }, false)).toBe("accept");
    expect(actionForKey({ key: "A" }, false)).toBe("accept");
    expect(actionForKey({ key: "r" }, false)).toBe("reject");
    expect(actionForKey({ key: "e" }, false)).toBe("edit");
    expect(actionForKey({ key: "x" }, false)).toBeNull();
  });

  it("ignores decision keys while typing in a text field", () => {
    expect(actionForKey({ key: "a", inTextField: true }, false)).toBeNull();
    expect(actionForKey({ key: "r", inTextField: true }, false)).toBeNull();
  });

  it("edit mode only reacts to save/cancel chords", () => {
    expect(actionForKey({ key: "a" }, true)).toBeNull();
    expect(actionForKey({ key: "Escape" }, true)).toBe("cancel_edit");
    expect(actionForKey({ key: "Enter", ctrlOrMeta: true }, true)).toBe("save_edit");
    expect(actionForKey({ key: "Enter" }, true)).toBeNull();
  });
});
