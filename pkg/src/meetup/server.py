"""Network front-end: lobby pairing, message routing, persistence.

Browser clients speak JSON text frames over WebSocket; bot clients may use
the newline-framed JSON variant on a second TCP port.  Both carry identical
message bodies.  All per-episode processing happens synchronously on the
event loop, so one episode's events are strictly ordered; outbound messages
go through per-connection queues so replies never interleave.

The game master lives inside the server: its utterances are engine events
with actor ``GM`` and reach clients as ``gm`` messages.
"""

from __future__ import annotations

import asyncio
import json
import logging
import secrets
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO

from websockets.asyncio.server import serve as ws_serve
from websockets.exceptions import ConnectionClosed

from .board import Direction, generate_board
from .catalog import TypeCatalog, builtin_catalog
from .engine import (
    Done,
    Event,
    GameAlreadyFinished,
    GameState,
    GmTemplates,
    DEFAULT_TEMPLATES,
    Move,
    PUBLIC,
    Say,
    abort,
    apply_action,
    check_timeout,
    new_game,
)

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
MIN_TOKEN_LENGTH = 16


class ServerError(Exception):
    pass


class MalformedMessage(ServerError):
    pass


class UnknownToken(ServerError):
    pass


def message(msg_type: str, **fields) -> dict:
    out = {"type": msg_type, "schema_version": SCHEMA_VERSION}
    out.update(fields)
    return out


@dataclass
class LobbyState:
    """FIFO waiting area with a dismissal timeout."""

    waiting: list[tuple[str, float]] = field(default_factory=list)
    waiting_timeout: float = 120.0


def pair_waiting(lobby: LobbyState, now: float) -> tuple[list[tuple[str, str]], list[str]]:
    """Pair the earliest waiters FIFO; dismiss unpaired waiters past the timeout.

    Removes paired and dismissed tokens from the lobby and returns
    (pairs to start, tokens to dismiss).
    """
    pairs: list[tuple[str, str]] = []
    while len(lobby.waiting) >= 2:
        (a, _), (b, _) = lobby.waiting[0], lobby.waiting[1]
        del lobby.waiting[:2]
        pairs.append((a, b))
    dismissed = [tok for tok, joined in lobby.waiting
                 if now - joined > lobby.waiting_timeout]
    lobby.waiting = [(tok, joined) for tok, joined in lobby.waiting
                     if tok not in dismissed]
    return pairs, dismissed


class WsConn:
    """JSON messages over a websockets connection."""

    def __init__(self, connection):
        self._conn = connection

    async def send_text(self, text: str) -> None:
        await self._conn.send(text)

    async def recv_text(self) -> str | None:
        try:
            data = await self._conn.recv()
        except ConnectionClosed:
            return None
        return data if isinstance(data, str) else data.decode("utf-8")

    async def close(self) -> None:
        await self._conn.close()


class TcpConn:
    """Newline-framed JSON messages over a plain TCP stream."""

    def __init__(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        self._reader = reader
        self._writer = writer

    async def send_text(self, text: str) -> None:
        self._writer.write(text.encode("utf-8") + b"\n")
        await self._writer.drain()

    async def recv_text(self) -> str | None:
        try:
            line = await self._reader.readline()
        except (ConnectionResetError, OSError):
            return None
        if not line:
            return None
        return line.decode("utf-8").rstrip("\r\n")

    async def close(self) -> None:
        try:
            self._writer.close()
            await self._writer.wait_closed()
        except (ConnectionResetError, OSError):
            pass


@dataclass
class Session:
    token: str
    conn: object
    outbox: asyncio.Queue = field(default_factory=asyncio.Queue)
    game_id: str | None = None
    role: str | None = None
    closed: bool = False

    def send(self, msg: dict) -> None:
        if not self.closed:
            self.outbox.put_nowait(msg)


@dataclass
class LiveGame:
    state: GameState
    sessions: dict[str, Session]  # role -> session
    sink: IO[str]
    sink_path: Path

    def partner_of(self, role: str) -> str:
        return "B" if role == "A" else "A"


class MeetupServer:
    """Lobby, routing, and persistence for any number of concurrent episodes."""

    def __init__(self, *, log_dir: str | Path, seed_base: int = 0,
                 time_limit: float = 300.0, waiting_timeout: float = 120.0,
                 node_count: int = 10, catalog: TypeCatalog | None = None,
                 manifest: dict[str, list[str]] | None = None,
                 templates: GmTemplates = DEFAULT_TEMPLATES,
                 tick_interval: float = 1.0,
                 clock=time.monotonic):
        self.log_dir = Path(log_dir)
        self.log_dir.mkdir(parents=True, exist_ok=True)
        self.seed_base = seed_base
        self.time_limit = time_limit
        self.node_count = node_count
        self.catalog = catalog or builtin_catalog()
        self.manifest = manifest
        self.templates = templates
        self.tick_interval = tick_interval
        self.clock = clock
        self.lobby = LobbyState(waiting_timeout=waiting_timeout)
        self.sessions: dict[str, Session] = {}
        self.games: dict[str, LiveGame] = {}
        self.game_counter = 0
        self.run_id = secrets.token_hex(4)
        self._ws_server = None
        self._tcp_server = None
        self._ticker: asyncio.Task | None = None

    # -- lifecycle ---------------------------------------------------------

    async def start(self, host: str = "127.0.0.1", port: int = 0,
                    bot_port: int = 0) -> None:
        self._ws_server = await ws_serve(self._handle_ws, host, port)
        self._tcp_server = await asyncio.start_server(self._handle_tcp, host, bot_port)
        self._ticker = asyncio.create_task(self._tick_loop())

    @property
    def ws_port(self) -> int:
        return self._ws_server.sockets[0].getsockname()[1]

    @property
    def bot_port(self) -> int:
        return self._tcp_server.sockets[0].getsockname()[1]

    async def stop(self) -> None:
        if self._ticker:
            self._ticker.cancel()
        for game in list(self.games.values()):
            self._finalize(game)
        for session in list(self.sessions.values()):
            session.closed = True
        if self._ws_server:
            self._ws_server.close()
            await self._ws_server.wait_closed()
        if self._tcp_server:
            self._tcp_server.close()
            await self._tcp_server.wait_closed()

    async def _tick_loop(self) -> None:
        while True:
            await asyncio.sleep(self.tick_interval)
            now = self.clock()
            self._lobby_sweep(now)
            for game in list(self.games.values()):
                events = check_timeout(game.state, now, self.templates)
                if events:
                    self._persist(game, events)
                    self._deliver(game, events)
                    self._finalize(game)

    # -- connection handling -----------------------------------------------

    async def _handle_ws(self, connection) -> None:
        await self._run_connection(WsConn(connection))

    async def _handle_tcp(self, reader: asyncio.StreamReader,
                          writer: asyncio.StreamWriter) -> None:
        await self._run_connection(TcpConn(reader, writer))

    async def _sender(self, session: Session) -> None:
        try:
            while True:
                msg = await session.outbox.get()
                await session.conn.send_text(json.dumps(msg, separators=(",", ":")))
        except (ConnectionClosed, ConnectionResetError, OSError, asyncio.CancelledError):
            pass

    async def _recv_message(self, conn) -> dict | None:
        """Next parsed message; None on closed connection; raises MalformedMessage."""
        text = await conn.recv_text()
        if text is None:
            return None
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise MalformedMessage(f"invalid JSON: {exc}")
        if not isinstance(data, dict) or not isinstance(data.get("type"), str):
            raise MalformedMessage("message must be an object with a string 'type'")
        return data

    async def _run_connection(self, conn) -> None:
        session = await self._handshake(conn)
        if session is None:
            await conn.close()
            return
        sender = asyncio.create_task(self._sender(session))
        try:
            while not session.closed:
                try:
                    msg = await self._recv_message(conn)
                except MalformedMessage as exc:
                    session.send(message("error", code="malformed", text=str(exc)))
                    continue
                if msg is None:
                    break
                self._dispatch(session, msg)
        finally:
            self._handle_disconnect(session)
            await asyncio.sleep(0)  # let queued messages drain
            sender.cancel()
            await conn.close()

    async def _handshake(self, conn) -> Session | None:
        try:
            msg = await self._recv_message(conn)
        except MalformedMessage as exc:
            await conn.send_text(json.dumps(
                message("error", code="malformed", text=str(exc))))
            return None
        if msg is None:
            return None
        if msg.get("type") != "hello":
            await conn.send_text(json.dumps(
                message("error", code="malformed", text="expected hello")))
            return None
        if msg.get("schema_version") != SCHEMA_VERSION:
            await conn.send_text(json.dumps(message(
                "error", code="unsupported_version",
                text=f"server speaks schema_version {SCHEMA_VERSION}")))
            return None
        token = msg.get("token")
        if not isinstance(token, str) or len(token) < MIN_TOKEN_LENGTH:
            await conn.send_text(json.dumps(message(
                "error", code="unknown_token",
                text=f"token must be a string of at least {MIN_TOKEN_LENGTH} characters")))
            return None
        if token in self.sessions:
            await conn.send_text(json.dumps(message(
                "error", code="unknown_token", text="token already in use")))
            return None
        session = Session(token=token, conn=conn)
        self.sessions[token] = session
        now = self.clock()
        self.lobby.waiting.append((token, now))
        session.send(message("gm", text="Waiting for a partner to join."))
        self._lobby_sweep(now)
        return session

    # -- lobby ---------------------------------------------------------------

    def _lobby_sweep(self, now: float) -> None:
        pairs, dismissed = pair_waiting(self.lobby, now)
        for token in dismissed:
            session = self.sessions.get(token)
            if session:
                session.send(message("gm", text=self.templates.waiting_dismissed))
                session.send(message("dismissed"))
                session.closed = True
                del self.sessions[token]
        for token_a, token_b in pairs:
            self._start_game(token_a, token_b, now)

    def _start_game(self, token_a: str, token_b: str, now: float) -> None:
        board = generate_board(
            self.seed_base + self.game_counter,
            node_count=self.node_count,
            catalog=self.catalog,
            manifest=self.manifest,
        )
        game_id = f"{self.run_id}-{self.game_counter:04d}"
        self.game_counter += 1
        state, init_events = new_game(
            board, game_id=game_id, time_limit=self.time_limit,
            clock_now=now, templates=self.templates)
        joins = [Event(now, game_id, role, "join", PUBLIC, {}) for role in ("A", "B")]
        state.event_log[:0] = joins

        sink_path = self.log_dir / f"{game_id}.jsonl"
        sink = sink_path.open("w", encoding="utf-8")
        game = LiveGame(state=state, sessions={}, sink=sink, sink_path=sink_path)
        for role, token in (("A", token_a), ("B", token_b)):
            session = self.sessions[token]
            session.game_id = game_id
            session.role = role
            game.sessions[role] = session
        self.games[game_id] = game

        self._persist(game, joins + init_events)
        for role in ("A", "B"):
            game.sessions[role].send(message(
                "paired", game_id=game_id, target_type=board.target_type.name))
        self._deliver(game, init_events)

    # -- routing ---------------------------------------------------------------

    def _dispatch(self, session: Session, msg: dict) -> None:
        kind = msg["type"]
        if kind == "hello":
            session.send(message("error", code="malformed", text="already registered"))
            return
        if kind == "bye":
            session.closed = True
            return
        if kind not in ("say", "move", "done"):
            session.send(message("error", code="malformed",
                                 text=f"unknown message kind {kind!r}"))
            return
        game = self.games.get(session.game_id) if session.game_id else None
        if game is None:
            session.send(message("error", code="not_in_game",
                                 text="no active game for this session"))
            return

        if kind == "say":
            text = msg.get("text")
            if not isinstance(text, str) or not text.strip():
                session.send(message("error", code="malformed",
                                     text="say requires non-empty text"))
                return
            action = Say(text)
        elif kind == "move":
            try:
                action = Move(Direction(msg.get("direction")))
            except ValueError:
                session.send(message("error", code="malformed",
                                     text=f"unknown direction {msg.get('direction')!r}"))
                return
        else:
            action = Done()

        try:
            events = apply_action(game.state, session.role, action,
                                  now=self.clock(), templates=self.templates)
        except GameAlreadyFinished:
            session.send(message("error", code="finished", text="the game is over"))
            return
        self._persist(game, events)
        self._deliver(game, events)
        if game.state.phase == "finished":
            self._finalize(game)

    def _deliver(self, game: LiveGame, events: list[Event]) -> None:
        """Translate engine events to wire messages, honoring visibility."""
        for event in events:
            if event.kind == "say":
                speaker = event.actor
                text = event.payload["text"]
                game.sessions[speaker].send(message("say_echo", text=text))
                game.sessions[game.partner_of(speaker)].send(
                    message("partner_say", text=text))
            elif event.kind == "gm_public":
                for session in game.sessions.values():
                    session.send(message("gm", text=event.payload["text"]))
            elif event.kind == "gm_private":
                target = game.sessions.get(event.payload.get("to"))
                if target is None:
                    continue
                if event.payload.get("notice") == "observation":
                    target.send(message("observation",
                                        image=event.payload["image"],
                                        exits=event.payload["exits"]))
                else:
                    target.send(message("gm", text=event.payload["text"]))
            elif event.kind == "outcome":
                for session in game.sessions.values():
                    session.send(message("outcome", kind=event.payload["kind"]))
                    session.send(message("gm", text=event.payload["text"]))
            # move/done/join/leave events produce no wire messages themselves

    # -- persistence -------------------------------------------------------

    def _persist(self, game: LiveGame, events: list[Event]) -> None:
        """Append events to the per-game sink, one complete line each."""
        try:
            for event in events:
                game.sink.write(event.to_line() + "\n")
                game.sink.flush()
        except OSError as exc:
            logger.error("sink failure for %s: %s", game.state.game_id, exc)
            self._sink_failure(game)

    def _sink_failure(self, game: LiveGame) -> None:
        if game.state.phase == "active":
            events = abort(game.state, "player_left", self.clock(), self.templates)
            self._deliver(game, events)
        self._finalize(game)

    def _finalize(self, game: LiveGame) -> None:
        self.games.pop(game.state.game_id, None)
        try:
            game.sink.close()
        except OSError:
            pass
        for session in game.sessions.values():
            session.game_id = None
            session.role = None

    def _handle_disconnect(self, session: Session) -> None:
        session.closed = True
        self.sessions.pop(session.token, None)
        self.lobby.waiting = [
            (tok, ts) for tok, ts in self.lobby.waiting if tok != session.token
        ]
        game = self.games.get(session.game_id) if session.game_id else None
        if game is None:
            return
        now = self.clock()
        leave = Event(now, game.state.game_id, session.role, "leave", PUBLIC, {})
        game.state.event_log.append(leave)
        self._persist(game, [leave])
        if game.state.phase == "active":
            events = abort(game.state, "player_left", now, self.templates)
            self._persist(game, events)
            self._deliver(game, events)
        self._finalize(game)


async def run_server(*, host: str = "0.0.0.0", port: int, bot_port: int,
                     **kwargs) -> None:
    """Start a server and block forever (the CLI entry point)."""
    server = MeetupServer(**kwargs)
    await server.start(host=host, port=port, bot_port=bot_port)
    logger.info("listening: ws on %s:%s, tcp on %s:%s",
                host, server.ws_port, host, server.bot_port)
    try:
        await asyncio.Event().wait()
    finally:
        await server.stop()
