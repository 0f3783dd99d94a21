"""Network bot: plays one episode over the server's TCP bot port.

Drives a non-cheating policy (wanderer or describer) with views built purely
from wire messages.  Room-type labels come from synthetic image identifiers
(``kitchen_03`` -> ``kitchen``); with a real manifest the label is absent
and the policies fall back to exploring.
"""

from __future__ import annotations

import asyncio
import json
import logging
import random
import re
import secrets

from .agents import AgentMemory, AgentView, Fingerprint, make_policy, update_partner_belief
from .board import Direction
from .catalog import builtin_catalog
from .engine import Done, Move, Say
from .server import SCHEMA_VERSION, message

logger = logging.getLogger(__name__)

_SYNTHETIC_ID = re.compile(r"^(?P<alias>.+)_\d+$")
_KNOWN_TYPES = {name.replace("/", "__"): name for name in builtin_catalog().all_types}


def type_from_synthetic_id(image: str) -> str | None:
    """Recover the room type from a synthetic manifest identifier, if it is one."""
    match = _SYNTHETIC_ID.match(image)
    if not match:
        return None
    return _KNOWN_TYPES.get(match.group("alias"))


class BotPlayer:
    """One connection, one episode, one policy."""

    def __init__(self, host: str, port: int, policy_name: str, *,
                 seed: int | None = None, poll_interval: float = 0.3,
                 max_steps: int | None = None):
        if policy_name == "oracle":
            raise ValueError("the oracle needs the full board; it cannot play over the wire")
        self.host = host
        self.port = port
        self.policy = make_policy(policy_name)
        if max_steps is not None and hasattr(self.policy, "max_steps"):
            self.policy.max_steps = max_steps
        self.rng = random.Random(seed)
        self.poll_interval = poll_interval
        self.memory = AgentMemory()
        self.inbox: list[tuple[str, str]] = []
        self.observation: dict | None = None
        self.target_type: str | None = None
        self.outcome: str | None = None
        self.awaiting_observation = False
        self._clock = 0.0

    async def play(self) -> str | None:
        """Connect, wait for a partner, play to the outcome; returns its kind."""
        reader, writer = await asyncio.open_connection(self.host, self.port)

        async def send(msg: dict) -> None:
            writer.write(json.dumps(msg).encode() + b"\n")
            await writer.drain()

        await send(message("hello", token=secrets.token_hex(16)))
        try:
            while self.outcome is None:
                try:
                    line = await asyncio.wait_for(reader.readline(), self.poll_interval)
                except asyncio.TimeoutError:
                    action_msg = self._decide()
                    if action_msg is not None:
                        await send(action_msg)
                    continue
                if not line:
                    break
                self._absorb(json.loads(line))
        finally:
            writer.close()
            try:
                await writer.wait_closed()
            except (ConnectionResetError, OSError):
                pass
        return self.outcome

    def _absorb(self, msg: dict) -> None:
        mtype = msg.get("type")
        if mtype == "paired":
            self.target_type = msg.get("target_type")
            logger.info("paired into %s (target %s)", msg.get("game_id"), self.target_type)
        elif mtype == "observation":
            self.observation = msg
            fp = Fingerprint(msg["image"], tuple(msg["exits"]))
            if not self.memory.own_path or self.awaiting_observation:
                self.memory.own_path.append(fp)
            self.awaiting_observation = False
        elif mtype == "partner_say":
            self.inbox.append(("partner", msg["text"]))
            self.memory.public_transcript.append(("partner", msg["text"]))
            update_partner_belief(self.memory, msg["text"])
        elif mtype == "say_echo":
            self.memory.public_transcript.append(("self", msg["text"]))
        elif mtype == "outcome":
            self.outcome = msg.get("kind")
            logger.info("game over: %s", self.outcome)
        elif mtype == "dismissed":
            self.outcome = "dismissed"
        elif mtype == "gm":
            self.inbox.append(("gm", msg.get("text", "")))

    def _decide(self) -> dict | None:
        if self.observation is None or self.awaiting_observation:
            return None
        self._clock += self.poll_interval
        view = AgentView(
            image=self.observation["image"],
            exits=tuple(Direction(d) for d in self.observation["exits"]),
            target_type=self.target_type or "",
            messages=tuple(self.inbox),
            clock=self._clock,
            room_type=type_from_synthetic_id(self.observation["image"]),
        )
        self.inbox.clear()
        action = self.policy.decide(view, self.memory, self.rng)
        if action is None:
            return None
        if isinstance(action, Say):
            self.memory.public_transcript.append(("self", action.text))
            return message("say", text=action.text)
        if isinstance(action, Move):
            self.awaiting_observation = True
            self.memory.moves_taken.append(action.direction)
            return message("move", direction=action.direction.value)
        if isinstance(action, Done):
            return message("done")
        return None


async def play_games(host: str, port: int, policy_name: str, *, games: int = 1,
                     seed: int | None = None, poll_interval: float = 0.3,
                     max_steps: int | None = None) -> list[str | None]:
    """Play consecutive episodes (a fresh connection and policy each time)."""
    outcomes = []
    for i in range(games):
        player = BotPlayer(host, port, policy_name,
                           seed=None if seed is None else seed + i,
                           poll_interval=poll_interval, max_steps=max_steps)
        outcomes.append(await player.play())
    return outcomes
