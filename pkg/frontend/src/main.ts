// Entry point: read configuration from query parameters, open the socket,
// and loop state -> view -> DOM.
//
//   index.html?server=ws://localhost:8100&asset_base=https://assets.example/ade20k

import { bindPage } from "./dom.js";
import { doneClicked, exitClicked, returnPressed } from "./input.js";
import { byeMessage, ClientMessage, helloMessage, makeToken, parseServerMessage } from "./protocol.js";
import {
  applyServerMessage,
  connectionClosed,
  connectionOpened,
  initialState,
  markDonePressed,
} from "./state.js";
import { render } from "./view.js";

const params = new URLSearchParams(window.location.search);
const serverUrl = params.get("server") ?? `ws://${window.location.hostname}:8100`;
const assetBase = params.get("asset_base");

let state = initialState();
const socket = new WebSocket(serverUrl);

function send(message: ClientMessage): void {
  if (socket.readyState === WebSocket.OPEN) {
    socket.send(JSON.stringify(message));
  }
}

const page = bindPage({
  onSend(text) {
    const result = returnPressed(state, text);
    if (result.message) send(result.message);
    if (result.clearInput) page.clearInput();
  },
  onMove(direction) {
    const message = exitClicked(state, direction);
    if (message) send(message);
  },
  onDone() {
    const message = doneClicked(state, () =>
      window.confirm("Declare that you have met? The game ends once both players do."));
    if (message) {
      send(message);
      update(markDonePressed(state));
    }
  },
});

function update(next: typeof state): void {
  state = next;
  page.apply(render(state, assetBase));
}

socket.addEventListener("open", () => {
  send(helloMessage(makeToken()));
  update(connectionOpened(state));
});

socket.addEventListener("message", (event) => {
  const msg = parseServerMessage(String(event.data));
  if (msg) update(applyServerMessage(state, msg));
});

socket.addEventListener("close", () => {
  update(connectionClosed(state));
});

window.addEventListener("beforeunload", () => {
  send(byeMessage());
});

update(state);
