// DOM layer: applies a ViewModel to the page.  All browser-only code lives
// here and in main.ts; everything above it is testable in plain node.

import { Direction } from "./protocol.js";
import { ViewModel } from "./view.js";

export interface Handlers {
  onSend(text: string): void;
  onMove(direction: Direction): void;
  onDone(): void;
}

export interface Page {
  apply(vm: ViewModel): void;
  readInput(): string;
  clearInput(): void;
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

export function bindPage(handlers: Handlers): Page {
  const status = el<HTMLDivElement>("status");
  const banner = el<HTMLDivElement>("banner");
  const image = el<HTMLImageElement>("room-image");
  const placeholder = el<HTMLDivElement>("room-placeholder");
  const chat = el<HTMLDivElement>("chat");
  const input = el<HTMLInputElement>("chat-input");
  const doneButton = el<HTMLButtonElement>("done-button");
  const outcome = el<HTMLDivElement>("outcome");
  const exitButtons = new Map<Direction, HTMLButtonElement>();
  for (const direction of ["north", "south", "east", "west"] as Direction[]) {
    const button = el<HTMLButtonElement>(`exit-${direction}`);
    button.addEventListener("click", () => handlers.onMove(direction));
    exitButtons.set(direction, button);
  }

  input.addEventListener("keydown", (event) => {
    if (event.key === "Enter") {
      handlers.onSend(input.value);
    }
  });
  doneButton.addEventListener("click", () => handlers.onDone());

  let renderedChatLines = 0;

  return {
    apply(vm: ViewModel): void {
      status.textContent = vm.statusLine;
      banner.textContent = vm.targetBanner ?? "";
      banner.hidden = vm.targetBanner === null;

      if (vm.imageCard) {
        placeholder.hidden = false;
        placeholder.querySelector(".placeholder-label")!.textContent = vm.imageCard.label;
        placeholder.querySelector(".placeholder-id")!.textContent = vm.imageCard.identifier;
        if (vm.imageCard.assetUrl) {
          image.src = vm.imageCard.assetUrl;
          image.hidden = false;
          image.onload = () => { placeholder.hidden = true; };
          image.onerror = () => { image.hidden = true; placeholder.hidden = false; };
        } else {
          image.hidden = true;
        }
      } else {
        image.hidden = true;
        placeholder.hidden = true;
      }

      for (const { direction, enabled } of vm.exitButtons) {
        exitButtons.get(direction)!.disabled = !enabled;
      }

      // chat history is append-only: only add the new rows
      for (const line of vm.chat.slice(renderedChatLines)) {
        const row = document.createElement("div");
        row.className = `line line-${line.who}`;
        row.textContent = line.who === "gm" ? `GM: ${line.text}` : line.text;
        chat.appendChild(row);
      }
      renderedChatLines = vm.chat.length;
      chat.scrollTop = chat.scrollHeight;

      input.disabled = !vm.inputEnabled;
      doneButton.disabled = !vm.doneEnabled;

      if (vm.outcome) {
        outcome.hidden = false;
        outcome.className = vm.outcome.success ? "outcome success" : "outcome failure";
        outcome.textContent = vm.outcome.success
          ? `Success! ${vm.targetBanner ?? ""}`
          : `Game over: ${vm.outcome.kind.replace(/_/g, " ")}`;
      } else {
        outcome.hidden = true;
      }
    },
    readInput: () => input.value,
    clearInput: () => { input.value = ""; },
  };
}
