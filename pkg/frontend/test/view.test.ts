import { describe, expect, it } from "vitest";

import { SCHEMA_VERSION } from "../src/protocol.js";
import { applyServerMessage, connectionOpened, initialState, markDonePressed } from "../src/state.js";
import { labelFromIdentifier, render } from "../src/view.js";

function playing(exits: string[] = ["north", "west"]) {
  let state = connectionOpened(initialState());
  state = applyServerMessage(state, {
    type: "paired", schema_version: SCHEMA_VERSION, game_id: "g", target_type: "utility_room",
  });
  state = applyServerMessage(state, {
    type: "observation", schema_version: SCHEMA_VERSION, image: "utility_room_02", exits,
  });
  return state;
}

describe("exit buttons", () => {
  it("exactly the advertised exits are enabled", () => {
    const vm = render(playing(["north", "west"]), null);
    const enabled = vm.exitButtons.filter((b) => b.enabled).map((b) => b.direction);
    expect(enabled.sort()).toEqual(["north", "west"]);
    expect(vm.exitButtons).toHaveLength(4);
  });

  it("all four disabled once the game is over", () => {
    const finished = applyServerMessage(playing(), {
      type: "outcome", schema_version: SCHEMA_VERSION, kind: "success",
    });
    const vm = render(finished, null);
    expect(vm.exitButtons.every((b) => !b.enabled)).toBe(true);
    expect(vm.inputEnabled).toBe(false);
  });
});

describe("image pane", () => {
  it("builds an asset url when a base is configured", () => {
    const vm = render(playing(), "https://assets.example/ade20k/");
    expect(vm.imageCard?.assetUrl).toBe("https://assets.example/ade20k/utility_room_02");
  });

  it("falls back to a placeholder card without an asset base", () => {
    const vm = render(playing(), null);
    expect(vm.imageCard?.assetUrl).toBeNull();
    expect(vm.imageCard?.identifier).toBe("utility_room_02");
    expect(vm.imageCard?.label).toBe("utility room");
  });

  it("derives readable labels from synthetic identifiers", () => {
    expect(labelFromIdentifier("jacuzzi__indoor_00")).toBe("jacuzzi/indoor");
    expect(labelFromIdentifier("wine_cellar__bottle_storage_07")).toBe("wine cellar/bottle storage");
    expect(labelFromIdentifier("ade20k-7781.jpg")).toBe("ade20k-7781.jpg");
  });
});

describe("banners", () => {
  it("shows the target type while playing", () => {
    const vm = render(playing(), null);
    expect(vm.targetBanner).toBe("Meet in a room of type: utility room");
  });

  it("success outcome renders a success banner", () => {
    const finished = applyServerMessage(playing(), {
      type: "outcome", schema_version: SCHEMA_VERSION, kind: "success",
    });
    const vm = render(finished, null);
    expect(vm.outcome).toEqual({ kind: "success", success: true });
  });

  it("failure outcomes are not success-styled", () => {
    const finished = applyServerMessage(playing(), {
      type: "outcome", schema_version: SCHEMA_VERSION, kind: "same_type_different_room",
    });
    expect(render(finished, null).outcome?.success).toBe(false);
  });
});

describe("chat and done state", () => {
  it("gm rows keep their speaker for styling", () => {
    const state = applyServerMessage(playing(), {
      type: "gm", schema_version: SCHEMA_VERSION, text: "You cannot go north from here.",
    });
    const vm = render(state, null);
    expect(vm.chat.at(-1)).toEqual({ who: "gm", text: "You cannot go north from here." });
  });

  it("done button disabled after pressing", () => {
    expect(render(playing(), null).doneEnabled).toBe(true);
    expect(render(markDonePressed(playing()), null).doneEnabled).toBe(false);
  });
});
