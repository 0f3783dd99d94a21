// End-to-end: the client state machine plays a real game against a live
// scripted bot through the real server.  The TCP bot lane carries the same
// message bodies as the WebSocket lane, so the reducer under test sees
// exactly what a browser would.

import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { ChildProcess, spawn } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { connect, Socket } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { doneClicked, returnPressed } from "../src/input.js";
import { ClientMessage, helloMessage, makeToken, parseServerMessage } from "../src/protocol.js";
import { applyServerMessage, ClientState, connectionOpened, initialState, markDonePressed } from "../src/state.js";
import { render } from "../src/view.js";

let server: ChildProcess;
let bot: ChildProcess | null = null;
let botPort = 0;

function startServer(): Promise<number> {
  return new Promise((resolve, reject) => {
    const logDir = mkdtempSync(join(tmpdir(), "meetup-e2e-"));
    server = spawn("python3", [
      "-m", "meetup.cli", "serve",
      "--port", "0", "--bot-port", "0",
      "--log-dir", logDir, "--time-limit", "30",
    ], { stdio: ["ignore", "pipe", "pipe"] });
    let buffer = "";
    const onData = (chunk: Buffer) => {
      buffer += chunk.toString();
      const match = /tcp on [^:]+:(\d+)/.exec(buffer);
      if (match) resolve(Number(match[1]));
    };
    server.stdout!.on("data", onData);
    server.stderr!.on("data", onData);
    server.on("exit", (code) => reject(new Error(`server exited early (${code}): ${buffer}`)));
    setTimeout(() => reject(new Error(`server never reported its port: ${buffer}`)), 10_000);
  });
}

beforeAll(async () => {
  botPort = await startServer();
}, 15_000);

afterAll(() => {
  bot?.kill();
  server?.kill();
});

class ClientHarness {
  state: ClientState = initialState();
  socket!: Socket;
  private pending = "";
  private waiters: Array<() => void> = [];

  connect(port: number): Promise<void> {
    return new Promise((resolve) => {
      this.socket = connect(port, "127.0.0.1", () => {
        this.state = connectionOpened(this.state);
        this.send(helloMessage(makeToken()));
        resolve();
      });
      this.socket.on("data", (chunk) => this.onData(chunk.toString()));
    });
  }

  send(message: ClientMessage): void {
    this.socket.write(JSON.stringify(message) + "\n");
  }

  private onData(text: string): void {
    this.pending += text;
    const lines = this.pending.split("\n");
    this.pending = lines.pop() ?? "";
    for (const line of lines) {
      if (!line.trim()) continue;
      const msg = parseServerMessage(line);
      if (msg) {
        const chatBefore = [...this.state.chat];
        this.state = applyServerMessage(this.state, msg);
        // append-only chat invariant holds against live traffic
        expect(this.state.chat.slice(0, chatBefore.length)).toEqual(chatBefore);
      }
    }
    this.waiters.forEach((w) => w());
  }

  async waitFor(predicate: (state: ClientState) => boolean, timeoutMs = 15_000): Promise<void> {
    if (predicate(this.state)) return;
    await new Promise<void>((resolve, reject) => {
      const timer = setTimeout(
        () => reject(new Error(`timed out; state=${JSON.stringify(this.state)}`)), timeoutMs);
      this.waiters.push(() => {
        if (predicate(this.state)) {
          clearTimeout(timer);
          resolve();
        }
      });
    });
  }
}

describe("full game against a live bot", () => {
  it("plays to an outcome with the view consistent throughout", async () => {
    const client = new ClientHarness();
    await client.connect(botPort);

    bot = spawn("python3", [
      "-m", "meetup.cli", "bot",
      "--port", String(botPort),
      "--policy", "wanderer", "--max-steps", "2", "--poll", "0.1", "--seed", "7",
    ], { stdio: "ignore" });

    await client.waitFor((s) => s.phase === "playing" && s.observation !== null);
    expect(client.state.targetType).toBeTruthy();

    // exit buttons always mirror the latest observation
    let vm = render(client.state, null);
    const enabled = vm.exitButtons.filter((b) => b.enabled).map((b) => b.direction);
    expect(enabled.sort()).toEqual([...client.state.observation!.exits].sort());
    expect(vm.imageCard?.identifier).toBe(client.state.observation!.image);

    // GM announced the target type in a gm-styled row
    await client.waitFor((s) => s.chat.some((l) => l.who === "gm"));
    expect(vm.chat.every((l) => l.who !== "partner" || l.text.length > 0)).toBe(true);

    // say something; the echo comes back as a self row
    const typed = returnPressed(client.state, "hello from the browser client");
    expect(typed.message).not.toBeNull();
    client.send(typed.message!);
    await client.waitFor((s) =>
      s.chat.some((l) => l.who === "self" && l.text === "hello from the browser client"));

    // declare done (confirmed); the bot's move budget runs out and it dones too
    const done = doneClicked(client.state, () => true);
    expect(done).not.toBeNull();
    client.send(done!);
    client.state = markDonePressed(client.state);

    await client.waitFor((s) => s.phase === "finished", 20_000);
    expect(client.state.outcome).toMatch(
      /^(success|same_type_different_room|not_in_target_type|aborted)$/);

    vm = render(client.state, null);
    expect(vm.exitButtons.every((b) => !b.enabled)).toBe(true);
    expect(vm.inputEnabled).toBe(false);
    expect(vm.outcome?.kind).toBe(client.state.outcome);

    client.socket.destroy();
  }, 30_000);
});
