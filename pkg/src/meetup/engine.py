"""Event-sourced rules engine for one episode.

The engine is clock-free (timestamps come from the caller) and performs no
I/O: every action application mutates a ``GameState`` and returns the newly
emitted events.  The accumulated event log fully determines the state, and
``replay`` reconstructs it, validating every transition on the way.

Game-master utterances are rendered from ``GmTemplates`` and logged with
actor ``GM`` so logs read like chat transcripts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import IO, Iterable, Union

from .board import Coord, Direction, Gameboard, exits, validate_board

PLAYERS = ("A", "B")
GM = "GM"

PUBLIC = "public"
PRIVATE = "private-to-actor"

EVENT_KINDS = ("join", "say", "move", "done", "gm_public", "gm_private", "outcome", "leave")

# Kinds with a fixed visibility; the rest default sensibly (join/leave public,
# done private) but are not constrained.
_FORCED_VISIBILITY = {
    "move": PRIVATE,
    "gm_private": PRIVATE,
    "say": PUBLIC,
    "gm_public": PUBLIC,
    "outcome": PUBLIC,
}

DEFAULT_TIME_LIMIT = 300.0


class EngineError(Exception):
    pass


class InvalidBoard(EngineError):
    def __init__(self, violations: list[str]):
        super().__init__(f"board failed validation: {violations}")
        self.violations = violations


class GameAlreadyFinished(EngineError):
    pass


class CorruptLog(EngineError):
    pass


@dataclass
class GmTemplates:
    """Named text templates for everything the game master says."""

    target_announcement: str = "You have to meet in a room of type {target}."
    exits_notice: str = "Exits: {exits}."
    invalid_move: str = "You cannot go {direction} from here."
    done_ack: str = "Noted. The game ends once your partner also declares done."
    outcome_success: str = "You met in a room of type {target}. Success!"
    outcome_failure: str = "The game is over without a meetup: {detail}"
    waiting_dismissed: str = "No partner arrived in time; you have been dismissed."


DEFAULT_TEMPLATES = GmTemplates()


def display_type(name: str) -> str:
    """Human-readable form of a room type name ("utility_room" -> "utility room")."""
    return name.replace("_", " ")


@dataclass(frozen=True)
class Say:
    text: str


@dataclass(frozen=True)
class Move:
    direction: Direction


@dataclass(frozen=True)
class Done:
    pass


Action = Union[Say, Move, Done]


class OutcomeKind(str, Enum):
    SUCCESS = "success"
    SAME_TYPE_DIFFERENT_ROOM = "same_type_different_room"
    NOT_IN_TARGET_TYPE = "not_in_target_type"
    ABORTED = "aborted"


@dataclass(frozen=True)
class Outcome:
    kind: OutcomeKind
    reason: str | None = None  # "timeout" | "player_left" for ABORTED


@dataclass(frozen=True)
class Observation:
    """What a player privately sees on entering a room."""

    room: Coord
    image: str
    exits: tuple[Direction, ...]


@dataclass(frozen=True)
class Event:
    ts: float
    game_id: str
    actor: str  # "A" | "B" | "GM"
    kind: str
    visibility: str
    payload: dict

    def to_dict(self) -> dict:
        return {
            "ts": self.ts,
            "game_id": self.game_id,
            "actor": self.actor,
            "kind": self.kind,
            "visibility": self.visibility,
            "payload": self.payload,
        }

    def to_line(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Event):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __hash__(self) -> int:
        return hash((self.ts, self.game_id, self.actor, self.kind))


_EVENT_KEYS = ("ts", "game_id", "actor", "kind", "visibility", "payload")


def event_from_dict(data: dict) -> Event:
    """Parse one event record, rejecting anything off-schema."""
    if not isinstance(data, dict) or set(data) != set(_EVENT_KEYS):
        raise ValueError(f"event record must have exactly the keys {_EVENT_KEYS}")
    if data["kind"] not in EVENT_KINDS:
        raise ValueError(f"unknown event kind {data['kind']!r}")
    forced = _FORCED_VISIBILITY.get(data["kind"])
    if forced is not None and data["visibility"] != forced:
        raise ValueError(f"kind {data['kind']!r} must have visibility {forced!r}")
    if data["visibility"] not in (PUBLIC, PRIVATE):
        raise ValueError(f"unknown visibility {data['visibility']!r}")
    if not isinstance(data["payload"], dict):
        raise ValueError("payload must be an object")
    return Event(
        ts=float(data["ts"]),
        game_id=str(data["game_id"]),
        actor=str(data["actor"]),
        kind=data["kind"],
        visibility=data["visibility"],
        payload=data["payload"],
    )


def parse_event_line(line: str) -> Event:
    return event_from_dict(json.loads(line))


def dump_events(events: Iterable[Event]) -> str:
    return "".join(e.to_line() + "\n" for e in events)


def write_events(events: Iterable[Event], fh: IO[str]) -> None:
    for event in events:
        fh.write(event.to_line() + "\n")
    fh.flush()


@dataclass
class GameState:
    board: Gameboard
    game_id: str
    positions: dict[str, Coord]
    done_flags: dict[str, bool]
    phase: str  # "active" | "finished"
    outcome: Outcome | None
    started_at: float
    time_limit: float
    event_log: list[Event] = field(default_factory=list)

    def observation_for(self, player: str) -> Observation:
        room = self.positions[player]
        return Observation(room, self.board.images[room], tuple(exits(self.board, room)))

    def summary(self) -> dict:
        """The replayable essence of the state, for equality checks."""
        return {
            "game_id": self.game_id,
            "positions": dict(self.positions),
            "done_flags": dict(self.done_flags),
            "phase": self.phase,
            "outcome": self.outcome,
            "n_events": len(self.event_log),
        }


def _emit(state: GameState, ts: float, actor: str, kind: str, visibility: str,
          payload: dict) -> Event:
    if state.event_log and ts < state.event_log[-1].ts:
        raise ValueError(f"clock went backwards: {ts} < {state.event_log[-1].ts}")
    event = Event(ts, state.game_id, actor, kind, visibility, payload)
    state.event_log.append(event)
    return event


def _observation_payload(state: GameState, player: str,
                         templates: GmTemplates) -> dict:
    obs = state.observation_for(player)
    exit_names = [d.value for d in obs.exits]
    return {
        "to": player,
        "notice": "observation",
        "text": templates.exits_notice.format(exits=", ".join(exit_names)),
        "room": [obs.room.col, obs.room.row],
        "image": obs.image,
        "exits": exit_names,
    }


def new_game(board: Gameboard, *, game_id: str, time_limit: float = DEFAULT_TIME_LIMIT,
             clock_now: float = 0.0,
             templates: GmTemplates = DEFAULT_TEMPLATES) -> tuple[GameState, list[Event]]:
    """Start an episode: place players at the starts and brief them.

    Emits exactly one public target-type announcement and one private
    observation per player.
    """
    violations = validate_board(board)
    if violations:
        raise InvalidBoard(violations)
    state = GameState(
        board=board,
        game_id=game_id,
        positions={"A": board.starts[0], "B": board.starts[1]},
        done_flags={"A": False, "B": False},
        phase="active",
        outcome=None,
        started_at=clock_now,
        time_limit=time_limit,
    )
    events = [
        _emit(state, clock_now, GM, "gm_public", PUBLIC, {
            "text": templates.target_announcement.format(
                target=display_type(board.target_type.name)),
            "target_type": board.target_type.name,
            "time_limit": time_limit,
        }),
        _emit(state, clock_now, GM, "gm_private", PRIVATE,
              _observation_payload(state, "A", templates)),
        _emit(state, clock_now, GM, "gm_private", PRIVATE,
              _observation_payload(state, "B", templates)),
    ]
    return state, events


def classify_outcome(state: GameState) -> Outcome:
    """Three-way goal classification from the final positions."""
    pos_a, pos_b = state.positions["A"], state.positions["B"]
    a_in_target = state.board.is_target_room(pos_a)
    b_in_target = state.board.is_target_room(pos_b)
    if pos_a == pos_b and a_in_target:
        return Outcome(OutcomeKind.SUCCESS)
    if a_in_target and b_in_target:
        return Outcome(OutcomeKind.SAME_TYPE_DIFFERENT_ROOM)
    return Outcome(OutcomeKind.NOT_IN_TARGET_TYPE)


def _outcome_text(outcome: Outcome, state: GameState, templates: GmTemplates) -> str:
    if outcome.kind is OutcomeKind.SUCCESS:
        return templates.outcome_success.format(
            target=display_type(state.board.target_type.name))
    details = {
        OutcomeKind.SAME_TYPE_DIFFERENT_ROOM:
            "you are in different rooms of the right type.",
        OutcomeKind.NOT_IN_TARGET_TYPE:
            "at least one of you is not in a room of the target type.",
        OutcomeKind.ABORTED: f"the game was aborted ({outcome.reason}).",
    }
    return templates.outcome_failure.format(detail=details[outcome.kind])


def _finish(state: GameState, outcome: Outcome, now: float,
            templates: GmTemplates) -> Event:
    state.phase = "finished"
    state.outcome = outcome
    return _emit(state, now, GM, "outcome", PUBLIC, {
        "kind": outcome.kind.value,
        "reason": outcome.reason,
        "text": _outcome_text(outcome, state, templates),
    })


def abort(state: GameState, reason: str, now: float,
          templates: GmTemplates = DEFAULT_TEMPLATES) -> list[Event]:
    """Finish an active game as Aborted (reason "timeout" or "player_left")."""
    if state.phase != "active":
        raise GameAlreadyFinished(state.game_id)
    return [_finish(state, Outcome(OutcomeKind.ABORTED, reason), now, templates)]


def check_timeout(state: GameState, now: float,
                  templates: GmTemplates = DEFAULT_TEMPLATES) -> list[Event]:
    """Abort with reason timeout if the clock ran out; no-op otherwise."""
    if state.phase == "active" and now - state.started_at > state.time_limit:
        return abort(state, "timeout", now, templates)
    return []


def apply_action(state: GameState, player: str, action: Action, now: float,
                 templates: GmTemplates = DEFAULT_TEMPLATES) -> list[Event]:
    """Apply one player action, returning the emitted events.

    If the time limit has been exceeded the game is finished as
    Aborted(timeout) and the action itself is discarded.
    """
    if state.phase != "active":
        raise GameAlreadyFinished(state.game_id)
    if player not in PLAYERS:
        raise ValueError(f"unknown player {player!r}")

    timeout_events = check_timeout(state, now, templates)
    if timeout_events:
        return timeout_events

    if isinstance(action, Say):
        text = action.text.strip()
        if not text:
            raise ValueError("say text must be non-empty (reject at the protocol layer)")
        return [_emit(state, now, player, "say", PUBLIC, {"text": text})]

    if isinstance(action, Move):
        here = state.positions[player]
        if action.direction not in exits(state.board, here):
            return [_emit(state, now, GM, "gm_private", PRIVATE, {
                "to": player,
                "notice": "invalid_move",
                "text": templates.invalid_move.format(direction=action.direction.value),
                "direction": action.direction.value,
            })]
        there = action.direction.step(here)
        state.positions[player] = there
        state.done_flags[player] = False  # the mover's situation changed
        move_event = _emit(state, now, player, "move", PRIVATE, {
            "direction": action.direction.value,
            "from": [here.col, here.row],
            "to": [there.col, there.row],
        })
        obs_event = _emit(state, now, GM, "gm_private", PRIVATE,
                          _observation_payload(state, player, templates))
        return [move_event, obs_event]

    if isinstance(action, Done):
        state.done_flags[player] = True
        events = [
            _emit(state, now, player, "done", PRIVATE, {}),
            _emit(state, now, GM, "gm_private", PRIVATE, {
                "to": player,
                "notice": "done_ack",
                "text": templates.done_ack,
            }),
        ]
        if all(state.done_flags.values()):
            events.append(_finish(state, classify_outcome(state), now, templates))
        return events

    raise TypeError(f"unknown action {action!r}")


def visible_to(events: Iterable[Event], player: str) -> list[Event]:
    """Filter a log down to what one player is allowed to see."""
    out = []
    for event in events:
        if event.visibility == PUBLIC:
            out.append(event)
        elif event.kind == "gm_private":
            if event.payload.get("to") == player:
                out.append(event)
        elif event.actor == player:
            out.append(event)
    return out


def replay(events: list[Event], board: Gameboard,
           templates: GmTemplates = DEFAULT_TEMPLATES) -> GameState:
    """Rebuild the final state from a log, validating every transition.

    Raises CorruptLog on out-of-order timestamps, impossible moves, or
    inconsistent outcomes.  An empty log yields the initial state.
    """
    state = GameState(
        board=board,
        game_id=events[0].game_id if events else "",
        positions={"A": board.starts[0], "B": board.starts[1]},
        done_flags={"A": False, "B": False},
        phase="active",
        outcome=None,
        started_at=events[0].ts if events else 0.0,
        time_limit=DEFAULT_TIME_LIMIT,
    )
    last_ts = None
    for event in events:
        if last_ts is not None and event.ts < last_ts:
            raise CorruptLog(f"timestamps decrease at {event.ts}")
        last_ts = event.ts
        if event.game_id != state.game_id:
            raise CorruptLog(f"event from foreign game {event.game_id!r}")
        forced = _FORCED_VISIBILITY.get(event.kind)
        if forced is not None and event.visibility != forced:
            raise CorruptLog(f"kind {event.kind!r} must be {forced!r}")
        if event.kind == "outcome" and state.phase == "finished":
            raise CorruptLog("second outcome event")
        if event.kind in ("say", "move", "done") and state.phase == "finished":
            raise CorruptLog(f"{event.kind} event after the game finished")

        if event.kind == "gm_public":
            if "time_limit" in event.payload:
                state.time_limit = float(event.payload["time_limit"])
        elif event.kind == "move":
            actor = event.actor
            if actor not in PLAYERS:
                raise CorruptLog(f"move by non-player {actor!r}")
            here = state.positions[actor]
            if event.payload.get("from") != [here.col, here.row]:
                raise CorruptLog(f"move from {event.payload.get('from')} but player at {here}")
            try:
                direction = Direction(event.payload.get("direction"))
            except ValueError as exc:
                raise CorruptLog(str(exc)) from exc
            there = direction.step(here)
            if event.payload.get("to") != [there.col, there.row]:
                raise CorruptLog(f"move lands at {event.payload.get('to')}, expected {there}")
            if direction not in exits(board, here):
                raise CorruptLog(f"move through a wall at {here} going {direction.value}")
            state.positions[actor] = there
            state.done_flags[actor] = False
        elif event.kind == "done":
            if event.actor not in PLAYERS:
                raise CorruptLog(f"done by non-player {event.actor!r}")
            state.done_flags[event.actor] = True
        elif event.kind == "outcome":
            kind = OutcomeKind(event.payload["kind"])
            outcome = Outcome(kind, event.payload.get("reason"))
            if kind is not OutcomeKind.ABORTED:
                if not all(state.done_flags.values()):
                    raise CorruptLog("outcome without both done flags")
                expected = classify_outcome(state)
                if expected.kind is not kind:
                    raise CorruptLog(
                        f"outcome says {kind.value} but positions imply {expected.kind.value}")
            state.phase = "finished"
            state.outcome = outcome
        state.event_log.append(event)
    return state
