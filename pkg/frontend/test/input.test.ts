import { describe, expect, it } from "vitest";

import { doneClicked, exitClicked, returnPressed } from "../src/input.js";
import { SCHEMA_VERSION } from "../src/protocol.js";
import { applyServerMessage, connectionOpened, initialState, markDonePressed } from "../src/state.js";

function playing() {
  let state = connectionOpened(initialState());
  state = applyServerMessage(state, {
    type: "paired", schema_version: SCHEMA_VERSION, game_id: "g", target_type: "kitchen",
  });
  state = applyServerMessage(state, {
    type: "observation", schema_version: SCHEMA_VERSION,
    image: "kitchen_01", exits: ["north", "west"],
  });
  return state;
}

describe("chat input", () => {
  it("return sends the trimmed text and clears the box", () => {
    const result = returnPressed(playing(), "  see a mirror  ");
    expect(result.message).toEqual({
      type: "say", schema_version: SCHEMA_VERSION, text: "see a mirror",
    });
    expect(result.clearInput).toBe(true);
  });

  it("empty input sends nothing", () => {
    const result = returnPressed(playing(), "   ");
    expect(result.message).toBeNull();
    expect(result.clearInput).toBe(false);
  });

  it("input is dead outside the playing phase", () => {
    expect(returnPressed(initialState(), "hello").message).toBeNull();
    const finished = applyServerMessage(playing(), {
      type: "outcome", schema_version: SCHEMA_VERSION, kind: "success",
    });
    expect(returnPressed(finished, "hello").message).toBeNull();
  });
});

describe("movement controls", () => {
  it("clicking an advertised exit sends a move", () => {
    expect(exitClicked(playing(), "north")).toEqual({
      type: "move", schema_version: SCHEMA_VERSION, direction: "north",
    });
  });

  it("directions without an exit are inert", () => {
    expect(exitClicked(playing(), "south")).toBeNull();
  });

  it("no moves before an observation arrives", () => {
    expect(exitClicked(connectionOpened(initialState()), "north")).toBeNull();
  });
});

describe("done control", () => {
  it("asks for confirmation before sending", () => {
    let asked = false;
    const message = doneClicked(playing(), () => { asked = true; return true; });
    expect(asked).toBe(true);
    expect(message).toEqual({ type: "done", schema_version: SCHEMA_VERSION });
  });

  it("declining the confirm sends nothing", () => {
    expect(doneClicked(playing(), () => false)).toBeNull();
  });

  it("cannot double-press done", () => {
    const state = markDonePressed(playing());
    expect(doneClicked(state, () => true)).toBeNull();
  });
});
