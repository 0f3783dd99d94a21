// Wire protocol shared with the game server: JSON messages, one per
// WebSocket text frame, every message tagged with schema_version.

export const SCHEMA_VERSION = 1;

export const DIRECTIONS = ["north", "south", "east", "west"] as const;
export type Direction = (typeof DIRECTIONS)[number];

export interface ServerMessage {
  type: string;
  schema_version: number;
  // paired
  game_id?: string;
  target_type?: string;
  // gm / partner_say / say_echo / error
  text?: string;
  code?: string;
  // observation
  image?: string;
  exits?: Direction[];
  // outcome
  kind?: string;
}

export interface ClientMessage {
  type: "hello" | "say" | "move" | "done" | "bye";
  schema_version: number;
  token?: string;
  text?: string;
  direction?: Direction;
}

export function helloMessage(token: string): ClientMessage {
  return { type: "hello", schema_version: SCHEMA_VERSION, token };
}

export function sayMessage(text: string): ClientMessage {
  return { type: "say", schema_version: SCHEMA_VERSION, text };
}

export function moveMessage(direction: Direction): ClientMessage {
  return { type: "move", schema_version: SCHEMA_VERSION, direction };
}

export function doneMessage(): ClientMessage {
  return { type: "done", schema_version: SCHEMA_VERSION };
}

export function byeMessage(): ClientMessage {
  return { type: "bye", schema_version: SCHEMA_VERSION };
}

export function makeToken(): string {
  const bytes = new Uint8Array(16);
  if (typeof crypto !== "undefined" && crypto.getRandomValues) {
    crypto.getRandomValues(bytes);
  } else {
    for (let i = 0; i < bytes.length; i++) bytes[i] = Math.floor(Math.random() * 256);
  }
  return Array.from(bytes, (b) => b.toString(16).padStart(2, "0")).join("");
}

export function parseServerMessage(raw: string): ServerMessage | null {
  try {
    const data = JSON.parse(raw);
    if (data && typeof data === "object" && typeof data.type === "string") {
      return data as ServerMessage;
    }
  } catch {
    // fall through
  }
  return null;
}
