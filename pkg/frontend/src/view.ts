// View model: everything the DOM layer needs, derived from ClientState.
// Keeping this pure lets the rendering rules (exit buttons match exits,
// GM styling, placeholder cards) be tested headlessly.

import { DIRECTIONS, Direction } from "./protocol.js";
import { ChatLine, ClientState } from "./state.js";

export interface ExitButton {
  direction: Direction;
  enabled: boolean;
}

export interface ImageCard {
  // URL to show, or null to render the placeholder card instead
  assetUrl: string | null;
  identifier: string;
  // readable label derived from synthetic identifiers ("kitchen_03" -> "kitchen")
  label: string;
}

export interface ViewModel {
  statusLine: string;
  targetBanner: string | null;
  imageCard: ImageCard | null;
  exitButtons: ExitButton[];
  chat: ChatLine[];
  inputEnabled: boolean;
  doneEnabled: boolean;
  outcome: { kind: string; success: boolean } | null;
}

export function labelFromIdentifier(identifier: string): string {
  const match = /^(.+)_\d+$/.exec(identifier);
  const alias = match ? match[1] : identifier;
  return alias.replace(/__/g, "/").replace(/_/g, " ");
}

const STATUS: Record<string, string> = {
  connecting: "Connecting to the server...",
  waiting: "Waiting for a partner...",
  playing: "Find each other!",
  finished: "Game over.",
};

export function render(state: ClientState, assetBase: string | null): ViewModel {
  const playing = state.phase === "playing";

  let imageCard: ImageCard | null = null;
  if (state.observation) {
    const id = state.observation.image;
    imageCard = {
      assetUrl: assetBase ? `${assetBase.replace(/\/$/, "")}/${encodeURIComponent(id)}` : null,
      identifier: id,
      label: labelFromIdentifier(id),
    };
  }

  const exits = state.observation?.exits ?? [];
  const exitButtons = DIRECTIONS.map((direction) => ({
    direction,
    enabled: playing && exits.includes(direction),
  }));

  return {
    statusLine: STATUS[state.phase] ?? state.phase,
    targetBanner: state.targetType
      ? `Meet in a room of type: ${state.targetType.replace(/_/g, " ")}`
      : null,
    imageCard,
    exitButtons,
    chat: state.chat,
    inputEnabled: playing,
    doneEnabled: playing && !state.donePressed,
    outcome: state.outcome
      ? { kind: state.outcome, success: state.outcome === "success" }
      : null,
  };
}
