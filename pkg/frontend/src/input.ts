// User-input rules: what may be sent, and when.  Pure functions so the
// guards (playing-phase only, non-empty text, done confirmation) are
// testable without a DOM.

import {
  ClientMessage,
  Direction,
  doneMessage,
  moveMessage,
  sayMessage,
} from "./protocol.js";
import { ClientState } from "./state.js";

export interface TypedResult {
  message: ClientMessage | null;
  clearInput: boolean;
}

// Return key in the chat box: send the trimmed text, or nothing when empty.
export function returnPressed(state: ClientState, rawText: string): TypedResult {
  if (state.phase !== "playing") {
    return { message: null, clearInput: false };
  }
  const text = rawText.trim();
  if (!text) {
    return { message: null, clearInput: false };
  }
  return { message: sayMessage(text), clearInput: true };
}

export function exitClicked(state: ClientState, direction: Direction): ClientMessage | null {
  if (state.phase !== "playing" || !state.observation) return null;
  if (!state.observation.exits.includes(direction)) return null;
  return moveMessage(direction);
}

// The done control is irreversible once both players press it, so it asks
// for confirmation first; `confirm` is injected (window.confirm in the browser).
export function doneClicked(state: ClientState, confirm: () => boolean): ClientMessage | null {
  if (state.phase !== "playing" || state.donePressed) return null;
  if (!confirm()) return null;
  return doneMessage();
}
