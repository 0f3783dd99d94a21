"""Scripted agent policies and a deterministic episode simulator.

Three policies span the behavior spectrum:

* ``OraclePolicy`` cheats: it reads the full board and both positions (an
  upper bound and test oracle, never a model of play).
* ``WandererPolicy`` is the lower bound: random walking plus one canned
  announcement per target-typed room.
* ``DescriberPolicy`` is an honest heuristic: it locates itself, exchanges
  image fingerprints, backtracks to a room its partner reported, and only
  declares done after sending and receiving matching fingerprints.

Honest policies receive an ``AgentView``/``AgentMemory`` pair and nothing
else; board topology and partner position are reachable only through the
cheating interface, which the runner hands exclusively to policies marked
``cheating = True``.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Protocol, runtime_checkable

from .board import Coord, DIRECTION_ORDER, Direction, Gameboard, generate_board, make_edge
from .engine import (
    Action,
    Done,
    Event,
    GameState,
    Move,
    Outcome,
    PUBLIC,
    Say,
    abort,
    apply_action,
    display_type,
    dump_events,
    new_game,
)


class Unreachable(Exception):
    """No path between two nodes (cannot happen on a valid board)."""


def bfs_shortest_path(board: Gameboard, start: Coord, goal: Coord) -> list[Direction]:
    """Minimal-length walk from start to goal; ties broken north, south, east, west."""
    for node in (start, goal):
        if node not in board.nodes:
            raise Unreachable(f"{node} not on board")
    dist = {goal: 0}
    frontier = [goal]
    while frontier:
        nxt: list[Coord] = []
        for node in frontier:
            for nb in board.graph.neighbors(node):
                if nb not in dist:
                    dist[nb] = dist[node] + 1
                    nxt.append(nb)
        frontier = nxt
    if start not in dist:
        raise Unreachable(f"no path from {start} to {goal}")
    path: list[Direction] = []
    here = start
    while here != goal:
        for d in DIRECTION_ORDER:
            there = d.step(here)
            if make_edge(here, there) in board.graph.edges and dist.get(there) == dist[here] - 1:
                path.append(d)
                here = there
                break
    return path


class Fingerprint(NamedTuple):
    """Coord-free room identity: what a player can actually remember."""

    image: str
    exits: tuple[str, ...]


@dataclass(frozen=True)
class AgentView:
    """Everything a player may legitimately see at one decision point."""

    image: str
    exits: tuple[Direction, ...]
    target_type: str
    messages: tuple[tuple[str, str], ...]  # new (sender, text) since last decision
    clock: float
    room_type: str | None = None  # present only in the type-annotated variant


@dataclass
class AgentMemory:
    """Tracked experience: own walk, the transcript, partner belief, strategy."""

    own_path: list[Fingerprint] = field(default_factory=list)
    moves_taken: list[Direction] = field(default_factory=list)
    public_transcript: list[tuple[str, str]] = field(default_factory=list)
    partner_belief: dict = field(default_factory=dict)
    strategy: str = "none"  # none | i_seek | you_seek | both_wander


def update_partner_belief(memory: AgentMemory, text: str) -> None:
    """Parse the canned message grammar into the partner-belief record."""
    lowered = text.lower().strip()
    for prefix in ("i am in a ", "i'm in a "):
        if lowered.startswith(prefix):
            memory.partner_belief["last_reported_type"] = lowered[len(prefix):].strip()
            return
    if lowered.startswith("i see "):
        memory.partner_belief["last_reported_image"] = lowered[len("i see "):].strip()


@runtime_checkable
class AgentPolicy(Protocol):
    cheating: bool
    name: str

    def decide(self, view: AgentView, memory: AgentMemory,
               rng: random.Random) -> Action | None: ...


@dataclass(frozen=True)
class CheatView:
    """Full game state, handed only to cheating policies."""

    board: Gameboard
    positions: dict[str, Coord]
    me: str


class OraclePolicy:
    """Both players walk shortest paths to one agreed target room, then done.

    Deliberately violates the observability constraints (it reads the board
    and both positions); exists as an upper bound and a test oracle.
    """

    cheating = True
    name = "oracle"

    def __init__(self) -> None:
        self._done_sent = False

    def decide(self, view: AgentView, memory: AgentMemory, rng: random.Random,
               cheat: CheatView) -> Action | None:
        rendezvous = min(cheat.board.target_rooms())
        mine = cheat.positions[cheat.me]
        if mine != rendezvous:
            path = bfs_shortest_path(cheat.board, mine, rendezvous)
            return Move(path[0])
        partner = "B" if cheat.me == "A" else "A"
        if cheat.positions[partner] != rendezvous:
            return None  # wait for the partner to arrive
        if self._done_sent:
            return None
        self._done_sent = True
        return Done()


class WandererPolicy:
    """Random walker: announces target-typed rooms, dones on affirmation or cap."""

    cheating = False
    name = "wanderer"

    def __init__(self, move_prob: float = 0.7, max_steps: int = 25) -> None:
        self.move_prob = move_prob
        self.max_steps = max_steps
        self._steps = 0
        self._done_sent = False
        self._announced: set[str] = set()

    def decide(self, view: AgentView, memory: AgentMemory,
               rng: random.Random) -> Action | None:
        if self._done_sent:
            return None
        if self._steps >= self.max_steps:
            self._done_sent = True
            return Done()
        in_target = view.room_type == view.target_type
        if in_target and view.image not in self._announced:
            self._announced.add(view.image)
            return Say(f"i am in a {display_type(view.target_type)}")
        if in_target and memory.partner_belief.get("last_reported_type") == \
                display_type(view.target_type):
            self._done_sent = True
            return Done()
        if rng.random() < self.move_prob:
            self._steps += 1
            return Move(rng.choice(view.exits))
        return None


class DescriberPolicy:
    """Honest heuristic: self-locate, exchange fingerprints, meet, then done.

    Done fires only after this agent has both sent its fingerprint for the
    current room and received a matching one.  If the partner reported a
    room this agent walked through, it backtracks there along its own
    recorded moves; otherwise it explores exits it has not taken yet.
    """

    cheating = False
    name = "describer"

    def __init__(self, patience: int = 3) -> None:
        self.patience = patience
        self._opened = False
        self._done_sent = False
        self._fp_sent: set[str] = set()
        self._said_here = False
        self._last_image: str | None = None
        self._waited = 0
        self._explored: dict[str, set[Direction]] = {}
        self._plan: list[Direction] = []

    def _enter_room(self, image: str) -> None:
        if image != self._last_image:
            self._last_image = image
            self._said_here = False
            self._waited = 0

    def decide(self, view: AgentView, memory: AgentMemory,
               rng: random.Random) -> Action | None:
        if self._done_sent:
            return None
        self._enter_room(view.image)

        if not self._opened:
            self._opened = True
            label = view.room_type or "room"
            return Say(f"i'm in a {display_type(label)}")

        partner_image = memory.partner_belief.get("last_reported_image")
        if view.image in self._fp_sent and partner_image == view.image:
            self._done_sent = True
            return Done()

        if self._plan:
            return Move(self._plan.pop(0))

        in_target = view.room_type == view.target_type
        if in_target:
            if not self._said_here:
                self._said_here = True
                self._fp_sent.add(view.image)
                return Say(f"i see {view.image}")
            if partner_image and partner_image != view.image:
                plan = self._backtrack_plan(memory, partner_image)
                if plan:
                    memory.strategy = "i_seek"
                    self._plan = plan
                    return Move(self._plan.pop(0))
            if self._waited < self.patience:
                self._waited += 1
                return None

        return self._explore(view, rng)

    def _backtrack_plan(self, memory: AgentMemory, image: str) -> list[Direction]:
        """Reverse own recorded moves back to the last visit of *image*."""
        for i in range(len(memory.own_path) - 1, -1, -1):
            if memory.own_path[i].image == image:
                return [d.opposite for d in reversed(memory.moves_taken[i:])]
        return []

    def _explore(self, view: AgentView, rng: random.Random) -> Action:
        taken = self._explored.setdefault(view.image, set())
        fresh = [d for d in view.exits if d not in taken]
        direction = rng.choice(fresh or list(view.exits))
        taken.add(direction)
        return Move(direction)


POLICIES = {
    "oracle": OraclePolicy,
    "wanderer": WandererPolicy,
    "describer": DescriberPolicy,
}


def make_policy(name: str) -> AgentPolicy:
    try:
        return POLICIES[name]()
    except KeyError:
        raise ValueError(f"unknown policy {name!r}; choose from {sorted(POLICIES)}")


@dataclass
class EpisodeLog:
    game_id: str
    seed: int
    events: list[Event]
    outcome: Outcome
    action_counts: dict[str, dict[str, int]]  # player -> {"moves": n, "says": n}

    def to_ndjson(self) -> str:
        return dump_events(self.events)


@dataclass
class BatchStats:
    n_episodes: int
    outcome_counts: dict[str, int]
    mean_moves: float
    mean_says: float

    def to_dict(self) -> dict:
        return {
            "n_episodes": self.n_episodes,
            "outcome_counts": dict(sorted(self.outcome_counts.items())),
            "mean_moves": self.mean_moves,
            "mean_says": self.mean_says,
        }


def _fingerprint(state: GameState, player: str) -> Fingerprint:
    obs = state.observation_for(player)
    return Fingerprint(obs.image, tuple(d.value for d in obs.exits))


def run_episode(board: Gameboard, policy_a: AgentPolicy, policy_b: AgentPolicy,
                seed: int, *, step_cap: int = 200, time_limit: float = 300.0,
                latency_range: tuple[float, float] = (0.5, 8.0),
                game_id: str | None = None,
                annotate_room_types: bool = True) -> EpisodeLog:
    """Play one episode with alternating decision ticks on a simulated clock.

    Per-tick latency is drawn uniformly from latency_range (seeded), so the
    produced logs carry realistic turn gaps.  Bit-deterministic for a fixed
    seed, timestamps included.
    """
    game_id = game_id or f"sim-{seed}"
    clock_rng = random.Random(f"{seed}:clock")
    rngs = {"A": random.Random(f"{seed}:A"), "B": random.Random(f"{seed}:B")}
    policies = {"A": policy_a, "B": policy_b}

    state, init_events = new_game(board, game_id=game_id, time_limit=time_limit,
                                  clock_now=0.0)
    joins = [
        Event(0.0, game_id, p, "join", PUBLIC, {"policy": policies[p].name})
        for p in ("A", "B")
    ]
    state.event_log[:0] = joins
    log: list[Event] = joins + init_events

    memories = {"A": AgentMemory(), "B": AgentMemory()}
    inboxes: dict[str, list[tuple[str, str]]] = {"A": [], "B": []}
    for p in ("A", "B"):
        memories[p].own_path.append(_fingerprint(state, p))

    clock = 0.0
    ticks = 0
    player = "A"
    while state.phase == "active" and ticks < step_cap:
        ticks += 1
        clock += clock_rng.uniform(*latency_range)
        obs = state.observation_for(player)
        room_type = state.board.room_type(state.positions[player]).name \
            if annotate_room_types else None
        view = AgentView(
            image=obs.image,
            exits=obs.exits,
            target_type=state.board.target_type.name,
            messages=tuple(inboxes[player]),
            clock=clock,
            room_type=room_type,
        )
        inboxes[player].clear()
        policy = policies[player]
        if policy.cheating:
            cheat = CheatView(state.board, dict(state.positions), player)
            action = policy.decide(view, memories[player], rngs[player], cheat)
        else:
            action = policy.decide(view, memories[player], rngs[player])
        if action is not None:
            events = apply_action(state, player, action, now=clock)
            log.extend(events)
            partner = "B" if player == "A" else "A"
            for event in events:
                if event.kind == "say":
                    memories[player].public_transcript.append(("self", event.payload["text"]))
                    memories[partner].public_transcript.append(("partner", event.payload["text"]))
                    inboxes[partner].append(("partner", event.payload["text"]))
                    update_partner_belief(memories[partner], event.payload["text"])
                elif event.kind == "move":
                    memories[player].own_path.append(_fingerprint(state, player))
                    memories[player].moves_taken.append(Direction(event.payload["direction"]))
        player = "B" if player == "A" else "A"

    if state.phase == "active":
        log.extend(abort(state, "timeout", now=clock))

    counts = {
        p: {
            "moves": sum(1 for e in log if e.kind == "move" and e.actor == p),
            "says": sum(1 for e in log if e.kind == "say" and e.actor == p),
        }
        for p in ("A", "B")
    }
    assert state.outcome is not None
    return EpisodeLog(game_id, seed, log, state.outcome, counts)


def run_batch(n_boards: int, policy_a_name: str, policy_b_name: str, seed: int, *,
              out_dir: str | Path | None = None, step_cap: int = 200,
              time_limit: float = 300.0, node_count: int = 10,
              latency_range: tuple[float, float] = (0.5, 8.0)) -> tuple[list[EpisodeLog], BatchStats]:
    """Run independent seeded episodes on freshly generated boards.

    With out_dir set, writes one event-log file per episode (the same
    newline-delimited format the server persists) plus batch_summary.json.
    """
    episodes: list[EpisodeLog] = []
    for i in range(n_boards):
        episode_seed = seed + i
        board = generate_board(episode_seed, node_count=node_count)
        episode = run_episode(
            board,
            make_policy(policy_a_name),
            make_policy(policy_b_name),
            episode_seed,
            step_cap=step_cap,
            time_limit=time_limit,
            latency_range=latency_range,
            game_id=f"sim-{seed}-{i:04d}",
        )
        episodes.append(episode)

    counts: dict[str, int] = {}
    for ep in episodes:
        counts[ep.outcome.kind.value] = counts.get(ep.outcome.kind.value, 0) + 1
    total_moves = sum(ep.action_counts[p]["moves"] for ep in episodes for p in ("A", "B"))
    total_says = sum(ep.action_counts[p]["says"] for ep in episodes for p in ("A", "B"))
    stats = BatchStats(
        n_episodes=len(episodes),
        outcome_counts=counts,
        mean_moves=total_moves / len(episodes) if episodes else 0.0,
        mean_says=total_says / len(episodes) if episodes else 0.0,
    )

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for ep in episodes:
            (out / f"{ep.game_id}.jsonl").write_text(ep.to_ndjson(), encoding="utf-8")
        summary = stats.to_dict()
        summary["episodes"] = [
            {
                "game_id": ep.game_id,
                "seed": ep.seed,
                "outcome": ep.outcome.kind.value,
                "moves": {p: ep.action_counts[p]["moves"] for p in ("A", "B")},
                "says": {p: ep.action_counts[p]["says"] for p in ("A", "B")},
            }
            for ep in episodes
        ]
        (out / "batch_summary.json").write_text(
            json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    return episodes, stats
