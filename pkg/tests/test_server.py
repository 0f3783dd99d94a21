import asyncio
import json
import secrets

import pytest
from websockets.asyncio.client import connect as ws_connect

from meetup.board import generate_board
from meetup.engine import replay
from meetup.server import LobbyState, MeetupServer, SCHEMA_VERSION, pair_waiting


class TestPairWaiting:
    def test_two_waiters_one_pair(self):
        lobby = LobbyState([("t1", 0.0), ("t2", 1.0)], waiting_timeout=120.0)
        pairs, dismissed = pair_waiting(lobby, now=2.0)
        assert pairs == [("t1", "t2")]
        assert dismissed == []
        assert lobby.waiting == []

    def test_three_waiters_fifo(self):
        lobby = LobbyState([("t1", 0.0), ("t2", 1.0), ("t3", 2.0)], waiting_timeout=120.0)
        pairs, dismissed = pair_waiting(lobby, now=3.0)
        assert pairs == [("t1", "t2")]
        assert dismissed == []
        assert lobby.waiting == [("t3", 2.0)]

    def test_aged_waiter_dismissed(self):
        lobby = LobbyState([("t1", 0.0)], waiting_timeout=10.0)
        pairs, dismissed = pair_waiting(lobby, now=11.0)
        assert pairs == []
        assert dismissed == ["t1"]
        assert lobby.waiting == []

    def test_waiter_within_timeout_kept(self):
        lobby = LobbyState([("t1", 0.0)], waiting_timeout=10.0)
        pairs, dismissed = pair_waiting(lobby, now=10.0)
        assert (pairs, dismissed) == ([], [])
        assert lobby.waiting == [("t1", 0.0)]

    def test_four_waiters_two_pairs(self):
        lobby = LobbyState([(f"t{i}", float(i)) for i in range(4)], waiting_timeout=120.0)
        pairs, _ = pair_waiting(lobby, now=5.0)
        assert pairs == [("t0", "t1"), ("t2", "t3")]


class BotClient:
    """Newline-framed JSON test client that captures everything it receives."""

    def __init__(self, name="bot"):
        self.name = name
        self.token = f"{name}-{secrets.token_hex(16)}"
        self.received: list[dict] = []
        self.reader = None
        self.writer = None

    async def connect(self, port, *, hello=True, token=None, schema_version=SCHEMA_VERSION):
        self.reader, self.writer = await asyncio.open_connection("127.0.0.1", port)
        if hello:
            await self.send("hello", token=token or self.token,
                            schema_version=schema_version)

    async def send(self, msg_type, **fields):
        msg = {"type": msg_type, "schema_version": SCHEMA_VERSION}
        msg.update(fields)
        self.writer.write(json.dumps(msg).encode() + b"\n")
        await self.writer.drain()

    async def send_raw(self, text):
        self.writer.write(text.encode() + b"\n")
        await self.writer.drain()

    async def recv(self, timeout=3.0):
        line = await asyncio.wait_for(self.reader.readline(), timeout)
        if not line:
            return None
        msg = json.loads(line)
        self.received.append(msg)
        return msg

    async def recv_until(self, msg_type, timeout=3.0):
        while True:
            msg = await self.recv(timeout)
            if msg is None:
                raise AssertionError(f"{self.name}: connection closed waiting for {msg_type}")
            if msg["type"] == msg_type:
                return msg

    async def drain(self, duration=0.2):
        """Capture whatever arrives within a quiet period."""
        while True:
            try:
                msg = await self.recv(timeout=duration)
            except asyncio.TimeoutError:
                return
            if msg is None:
                return

    def of_kind(self, msg_type):
        return [m for m in self.received if m["type"] == msg_type]

    async def close(self):
        if self.writer is not None:
            self.writer.close()
            try:
                await self.writer.wait_closed()
            except (ConnectionResetError, OSError):
                pass


async def start_server(tmp_path, **kwargs):
    kwargs.setdefault("tick_interval", 0.05)
    kwargs.setdefault("time_limit", 300.0)
    server = MeetupServer(log_dir=tmp_path, **kwargs)
    await server.start(host="127.0.0.1", port=0, bot_port=0)
    return server


async def paired_clients(server, names=("a", "b")):
    """Two connected clients, paired into one game; both have seen observation."""
    first, second = BotClient(names[0]), BotClient(names[1])
    await first.connect(server.bot_port)
    await first.recv_until("gm")  # waiting notice
    await second.connect(server.bot_port)
    for client in (first, second):
        await client.recv_until("paired")
        await client.recv_until("observation")
    return first, second


class TestServerIntegration:
    def test_pairing_and_announcement(self, tmp_path):
        async def scenario():
            server = await start_server(tmp_path, seed_base=5)
            try:
                a, b = await paired_clients(server)
                board = generate_board(5)  # seed_base + game 0
                for client in (a, b):
                    paired = client.of_kind("paired")[0]
                    assert paired["target_type"] == board.target_type.name
                    obs = client.of_kind("observation")[0]
                    assert set(obs) == {"type", "schema_version", "image", "exits"}
                assert a.of_kind("paired")[0]["game_id"] == b.of_kind("paired")[0]["game_id"]
            finally:
                await a.close()
                await b.close()
                await server.stop()

        asyncio.run(scenario())

    def test_say_echo_and_partner_delivery(self, tmp_path):
        async def scenario():
            server = await start_server(tmp_path)
            a, b = await paired_clients(server)
            try:
                await a.send("say", text="hi there")
                echo = await a.recv_until("say_echo")
                assert echo["text"] == "hi there"
                heard = await b.recv_until("partner_say")
                assert heard["text"] == "hi there"
            finally:
                await a.close()
                await b.close()
                await server.stop()

        asyncio.run(scenario())

    def test_moves_stay_private(self, tmp_path):
        async def scenario():
            server = await start_server(tmp_path)
            a, b = await paired_clients(server)
            try:
                exits = a.of_kind("observation")[0]["exits"]
                await a.send("move", direction=exits[0])
                obs = await a.recv_until("observation")
                assert obs["exits"]
                await b.drain(0.3)
                # B saw only its own initial observation
                assert len(b.of_kind("observation")) == 1
            finally:
                await a.close()
                await b.close()
                await server.stop()

        asyncio.run(scenario())

    def test_invalid_move_is_gm_notice_to_mover_only(self, tmp_path):
        async def scenario():
            # seed 1's board starts player A in a single-exit room
            server = await start_server(tmp_path, seed_base=1)
            a, b = await paired_clients(server)
            try:
                exits = set(a.of_kind("observation")[0]["exits"])
                blocked = next(d for d in ("north", "south", "east", "west")
                               if d not in exits)
                before_b = len(b.received)
                await a.send("move", direction=blocked)
                notice = await a.recv_until("gm")
                assert blocked in notice["text"]
                await b.drain(0.2)
                assert len(b.received) == before_b
            finally:
                await a.close()
                await b.close()
                await server.stop()

        asyncio.run(scenario())

    def test_full_episode_logs_and_replays(self, tmp_path):
        async def scenario():
            server = await start_server(tmp_path, seed_base=42)
            a, b = await paired_clients(server)
            try:
                await a.send("say", text="meet me")
                await b.recv_until("partner_say")
                await a.send("done")
                await a.recv_until("gm")
                await b.send("done")
                out_a = await a.recv_until("outcome")
                out_b = await b.recv_until("outcome")
                assert out_a["kind"] == out_b["kind"]
                game_id = a.of_kind("paired")[0]["game_id"]
            finally:
                await a.close()
                await b.close()
                await server.stop()

            log_path = tmp_path / f"{game_id}.jsonl"
            assert log_path.exists()
            from meetup.engine import parse_event_line
            events = [parse_event_line(line)
                      for line in log_path.read_text().splitlines()]
            board = generate_board(42)
            state = replay(events, board)
            assert state.phase == "finished"
            assert state.outcome.kind.value == out_a["kind"]
            says = [e.payload["text"] for e in events if e.kind == "say"]
            assert says == ["meet me"]

        asyncio.run(scenario())

    def test_malformed_messages_keep_connection_open(self, tmp_path):
        async def scenario():
            server = await start_server(tmp_path)
            a, b = await paired_clients(server)
            try:
                await a.send_raw("this is not json")
                err = await a.recv_until("error")
                assert err["code"] == "malformed"
                await a.send("teleport")
                err = await a.recv_until("error")
                assert err["code"] == "malformed"
                await a.send("say", text="   ")
                err = await a.recv_until("error")
                assert err["code"] == "malformed"
                # connection still works
                await a.send("say", text="still alive")
                echo = await a.recv_until("say_echo")
                assert echo["text"] == "still alive"
                # none of it was logged as events
                game_id = a.of_kind("paired")[0]["game_id"]
            finally:
                await a.close()
                await b.close()
                await server.stop()
            lines = (tmp_path / f"{game_id}.jsonl").read_text().splitlines()
            says = [json.loads(l) for l in lines if json.loads(l)["kind"] == "say"]
            assert len(says) == 1

        asyncio.run(scenario())

    def test_bad_handshakes_rejected(self, tmp_path):
        async def scenario():
            server = await start_server(tmp_path)
            try:
                short = BotClient("short")
                await short.connect(server.bot_port, token="tiny")
                err = await short.recv()
                assert err["code"] == "unknown_token"
                assert await short.recv() is None  # closed
                await short.close()

                old = BotClient("old")
                await old.connect(server.bot_port, schema_version=99)
                err = await old.recv()
                assert err["code"] == "unsupported_version"
                await old.close()

                dup1, dup2 = BotClient("dup"), BotClient("dup2")
                dup2.token = dup1.token
                await dup1.connect(server.bot_port)
                await dup1.recv_until("gm")
                await dup2.connect(server.bot_port)
                err = await dup2.recv()
                assert err["code"] == "unknown_token"
                await dup1.close()
                await dup2.close()
            finally:
                await server.stop()

        asyncio.run(scenario())

    def test_waiting_timeout_dismisses(self, tmp_path):
        async def scenario():
            server = await start_server(tmp_path, waiting_timeout=0.2)
            lonely = BotClient("lonely")
            try:
                await lonely.connect(server.bot_port)
                await lonely.recv_until("dismissed", timeout=3.0)
                texts = [m.get("text", "") for m in lonely.of_kind("gm")]
                assert any("dismissed" in t.lower() for t in texts)
            finally:
                await lonely.close()
                await server.stop()

        asyncio.run(scenario())

    def test_disconnect_aborts_and_notifies_partner(self, tmp_path):
        async def scenario():
            server = await start_server(tmp_path)
            a, b = await paired_clients(server)
            game_id = a.of_kind("paired")[0]["game_id"]
            try:
                await a.close()
                out = await b.recv_until("outcome", timeout=3.0)
                assert out["kind"] == "aborted"
            finally:
                await b.close()
                await server.stop()
            lines = (tmp_path / f"{game_id}.jsonl").read_text().splitlines()
            events = [json.loads(l) for l in lines]
            assert events[-1]["kind"] == "outcome"
            assert events[-1]["payload"]["reason"] == "player_left"
            assert any(e["kind"] == "leave" and e["actor"] == "A" for e in events)

        asyncio.run(scenario())

    def test_game_time_limit_enforced_by_ticker(self, tmp_path):
        async def scenario():
            server = await start_server(tmp_path, time_limit=0.2)
            a, b = await paired_clients(server)
            try:
                out = await b.recv_until("outcome", timeout=3.0)
                assert out["kind"] == "aborted"
            finally:
                await a.close()
                await b.close()
                await server.stop()

        asyncio.run(scenario())

    def test_two_concurrent_episodes_are_isolated(self, tmp_path):
        async def scenario():
            server = await start_server(tmp_path)
            a, b = await paired_clients(server, ("g1a", "g1b"))
            c, d = await paired_clients(server, ("g2c", "g2d"))
            try:
                gid1 = a.of_kind("paired")[0]["game_id"]
                gid2 = c.of_kind("paired")[0]["game_id"]
                assert gid1 != gid2
                await a.send("say", text="game one secret")
                await c.send("say", text="game two secret")
                await b.recv_until("partner_say")
                await d.recv_until("partner_say")
                for client in (c, d):
                    texts = [m.get("text", "") for m in client.received]
                    assert not any("game one" in t for t in texts)
            finally:
                for client in (a, b, c, d):
                    await client.close()
                await server.stop()
            log1 = (tmp_path / f"{gid1}.jsonl").read_text()
            log2 = (tmp_path / f"{gid2}.jsonl").read_text()
            assert all(json.loads(l)["game_id"] == gid1 for l in log1.splitlines())
            assert all(json.loads(l)["game_id"] == gid2 for l in log2.splitlines())

        asyncio.run(scenario())

    def test_every_log_line_is_complete_json(self, tmp_path):
        async def scenario():
            server = await start_server(tmp_path)
            a, b = await paired_clients(server)
            game_id = a.of_kind("paired")[0]["game_id"]
            await a.send("say", text="one")
            await b.recv_until("partner_say")
            await a.close()  # mid-episode drop
            await b.recv_until("outcome")
            await b.close()
            await server.stop()
            return game_id

        game_id = asyncio.run(scenario())
        lines = (tmp_path / f"{game_id}.jsonl").read_text().splitlines()
        for line in lines:
            json.loads(line)  # every persisted line is complete

        asyncio.run(asyncio.sleep(0))

    def test_websocket_transport_speaks_same_protocol(self, tmp_path):
        async def scenario():
            server = await start_server(tmp_path)
            bot = BotClient("tcp-side")
            try:
                async with ws_connect(f"ws://127.0.0.1:{server.ws_port}") as ws:
                    await ws.send(json.dumps({
                        "type": "hello", "schema_version": SCHEMA_VERSION,
                        "token": "ws-" + secrets.token_hex(16),
                    }))
                    first = json.loads(await ws.recv())
                    assert first["type"] == "gm"
                    await bot.connect(server.bot_port)
                    paired = json.loads(await ws.recv())
                    assert paired["type"] == "paired"
                    await bot.recv_until("observation")
                    await ws.recv()  # announcement gm
                    obs = json.loads(await ws.recv())
                    assert obs["type"] == "observation"
                    await ws.send(json.dumps({
                        "type": "say", "schema_version": SCHEMA_VERSION,
                        "text": "over websocket"}))
                    echo = json.loads(await ws.recv())
                    assert echo == {"type": "say_echo", "schema_version": SCHEMA_VERSION,
                                    "text": "over websocket"}
                    heard = await bot.recv_until("partner_say")
                    assert heard["text"] == "over websocket"
            finally:
                await bot.close()
                await server.stop()

        asyncio.run(scenario())
