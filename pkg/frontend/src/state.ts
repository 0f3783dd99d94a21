// Client-side game state: a pure reducer over server messages.
// Chat history is append-only; everything the UI shows derives from here.

import { Direction, ServerMessage } from "./protocol.js";

export type Phase = "connecting" | "waiting" | "playing" | "finished";

export type Speaker = "self" | "partner" | "gm" | "system";

export interface ChatLine {
  who: Speaker;
  text: string;
}

export interface Observation {
  image: string;
  exits: Direction[];
}

export interface ClientState {
  phase: Phase;
  gameId: string | null;
  targetType: string | null;
  observation: Observation | null;
  chat: ChatLine[];
  donePressed: boolean;
  outcome: string | null;
  dismissed: boolean;
}

export function initialState(): ClientState {
  return {
    phase: "connecting",
    gameId: null,
    targetType: null,
    observation: null,
    chat: [],
    donePressed: false,
    outcome: null,
    dismissed: false,
  };
}

function withChat(state: ClientState, who: Speaker, text: string): ClientState {
  return { ...state, chat: [...state.chat, { who, text }] };
}

export function connectionOpened(state: ClientState): ClientState {
  return { ...state, phase: state.phase === "connecting" ? "waiting" : state.phase };
}

export function connectionClosed(state: ClientState): ClientState {
  if (state.phase === "finished") return state;
  return withChat({ ...state, phase: "finished" }, "system", "Connection closed.");
}

export function markDonePressed(state: ClientState): ClientState {
  return { ...state, donePressed: true };
}

// Every server message type has a rule here; unknown types become a
// diagnostic chat row rather than a crash.
export function applyServerMessage(state: ClientState, msg: ServerMessage): ClientState {
  switch (msg.type) {
    case "paired":
      return {
        ...state,
        phase: "playing",
        gameId: msg.game_id ?? null,
        targetType: msg.target_type ?? null,
      };
    case "gm":
      return withChat(state, "gm", msg.text ?? "");
    case "observation":
      return {
        ...state,
        observation: {
          image: msg.image ?? "",
          exits: (msg.exits ?? []) as Direction[],
        },
        // moving again after pressing done re-opens the decision
        donePressed: false,
      };
    case "partner_say":
      return withChat(state, "partner", msg.text ?? "");
    case "say_echo":
      return withChat(state, "self", msg.text ?? "");
    case "error":
      return withChat(state, "system", `error (${msg.code ?? "?"}): ${msg.text ?? ""}`);
    case "outcome":
      return withChat(
        { ...state, phase: "finished", outcome: msg.kind ?? null },
        "system",
        `Game over: ${msg.kind ?? "unknown"}`,
      );
    case "dismissed":
      return withChat(
        { ...state, phase: "finished", dismissed: true },
        "system",
        "Dismissed: no partner arrived.",
      );
    default:
      return withChat(state, "system", `[unrecognized message type "${msg.type}"]`);
  }
}
