/**
 * Keyboard mapping for the review flow, kept as pure logic so it can be
 * tested without a DOM. A = accept, R = reject, E = open the editor;
 * in edit mode Ctrl/Cmd+Enter saves and Escape cancels.
 */

export type KeyAction =
  | "accept"
  | "reject"
  | "edit"
  | "save_edit"
  | "cancel_edit"
  | null;

export interface KeyInput {
  key: string;
  ctrlOrMeta?: boolean;
  inTextField?: boolean;
}

export function actionForKey(input: KeyInput, editing: boolean): KeyAction {
  const key = input.key.toLowerCase();
  if (editing) {
    if (key === "escape") return "cancel_edit";
    if (key === "enter" && input.ctrlOrMeta) return "save_edit";
    return null;
  }
  // Never steal plain letters from an active text field.
  if (input.inTextField) return null;
  if (key === "a") return "accept";
  if (key === "r") return "reject";
  if (key === "e") return "edit";
  return null;
}
