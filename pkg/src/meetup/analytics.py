"""Corpus statistics over recorded episodes.

Every statistic is a pure function of the event logs and is defined so that
an independent reimplementation walking the raw events reproduces it
exactly:

* results are invariant under reordering of input files (dialogues are
  processed sorted by game id);
* aggregate formulas are written out explicitly (mean = sum/len; population
  standard deviation; median = middle element or mean of the two middle
  elements; Q3 by linear interpolation at position 0.75*(n-1)) instead of
  delegating to library routines with unspecified arithmetic.

Tokenization: lowercase, split on whitespace, strip leading/trailing
punctuation per token (word-internal apostrophes survive), drop empties.
"""

from __future__ import annotations

import json
import logging
import math
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, NamedTuple

from .engine import Event, parse_event_line

logger = logging.getLogger(__name__)

GM = "GM"


class AnalyticsError(Exception):
    pass


class NoFilesFound(AnalyticsError):
    pass


class EmptyCorpus(AnalyticsError):
    pass


def tokenize(text: str) -> list[str]:
    """Lowercased whitespace tokens with edge punctuation stripped."""
    tokens = []
    for raw in text.lower().split():
        tok = _strip_edge_punctuation(raw)
        if tok:
            tokens.append(tok)
    return tokens


def _strip_edge_punctuation(tok: str) -> str:
    start, end = 0, len(tok)
    while start < end and unicodedata.category(tok[start]).startswith("P"):
        start += 1
    while end > start and unicodedata.category(tok[end - 1]).startswith("P"):
        end -= 1
    return tok[start:end]


class Turn(NamedTuple):
    actor: str
    ts: float
    text: str


class PrivateAction(NamedTuple):
    actor: str
    ts: float
    kind: str  # "move" | "done"
    room: tuple[int, int] | None  # destination room for moves


@dataclass
class DialogueLog:
    """One episode reduced to what the statistics need."""

    game_id: str
    turns: list[Turn]
    private_actions: list[PrivateAction]
    rejected_moves: list[tuple[str, float]]
    outcome: str | None
    outcome_reason: str | None
    worker_ids: dict[str, str]
    start_ts: float
    end_ts: float
    initial_rooms: dict[str, tuple[int, int]]
    target_type: str | None


def dialogue_from_events(events: list[Event]) -> DialogueLog:
    """Reduce a validated event log to a DialogueLog."""
    if not events:
        raise ValueError("empty event list")
    turns: list[Turn] = []
    private_actions: list[PrivateAction] = []
    rejected: list[tuple[str, float]] = []
    worker_ids: dict[str, str] = {}
    initial_rooms: dict[str, tuple[int, int]] = {}
    outcome = None
    outcome_reason = None
    target_type = None
    for event in events:
        if event.kind == "say" and event.actor != GM:
            turns.append(Turn(event.actor, event.ts, event.payload["text"]))
        elif event.kind == "move":
            to = event.payload["to"]
            private_actions.append(PrivateAction(event.actor, event.ts, "move", (to[0], to[1])))
        elif event.kind == "done":
            private_actions.append(PrivateAction(event.actor, event.ts, "done", None))
        elif event.kind == "join":
            wid = event.payload.get("worker_id")
            if wid:
                worker_ids[event.actor] = str(wid)
        elif event.kind == "gm_public":
            if target_type is None:
                target_type = event.payload.get("target_type")
        elif event.kind == "gm_private":
            notice = event.payload.get("notice")
            to_player = event.payload.get("to")
            if notice == "observation" and to_player not in initial_rooms:
                room = event.payload.get("room")
                if isinstance(room, list) and len(room) == 2:
                    initial_rooms[to_player] = (room[0], room[1])
        if event.kind == "outcome":
            outcome = event.payload.get("kind")
            outcome_reason = event.payload.get("reason")
    return DialogueLog(
        game_id=events[0].game_id,
        turns=turns,
        private_actions=private_actions,
        rejected_moves=rejected_from_events(events),
        outcome=outcome,
        outcome_reason=outcome_reason,
        worker_ids=worker_ids,
        start_ts=events[0].ts,
        end_ts=events[-1].ts,
        initial_rooms=initial_rooms,
        target_type=target_type,
    )


def rejected_from_events(events: Iterable[Event]) -> list[tuple[str, float]]:
    return [
        (e.payload.get("to"), e.ts)
        for e in events
        if e.kind == "gm_private" and e.payload.get("notice") == "invalid_move"
    ]


def _validate_event_file(events: list[Event]) -> None:
    """File-level schema checks; raises ValueError on the first violation."""
    if not events:
        raise ValueError("file contains no events")
    game_id = events[0].game_id
    last_ts = None
    outcomes = 0
    for event in events:
        if event.game_id != game_id:
            raise ValueError(f"mixed game ids {game_id!r} and {event.game_id!r}")
        if last_ts is not None and event.ts < last_ts:
            raise ValueError(f"timestamps decrease at {event.ts}")
        last_ts = event.ts
        if event.kind == "outcome":
            outcomes += 1
    if outcomes != 1:
        raise ValueError(f"expected exactly one outcome event, found {outcomes}")


def load_logs(directory: str | Path,
              on_skip: Callable[[Path, str], None] | None = None) -> list[DialogueLog]:
    """One DialogueLog per event file; invalid files are reported and skipped."""
    directory = Path(directory)
    paths = sorted(p for pattern in ("*.jsonl", "*.ndjson") for p in directory.glob(pattern))
    if not paths:
        raise NoFilesFound(f"no event-log files in {directory}")
    if on_skip is None:
        on_skip = lambda path, reason: logger.warning("skipping %s: %s", path, reason)
    logs: list[DialogueLog] = []
    for path in paths:
        try:
            events = [
                parse_event_line(line)
                for line in path.read_text(encoding="utf-8").splitlines()
                if line.strip()
            ]
            _validate_event_file(events)
        except (ValueError, json.JSONDecodeError) as exc:
            on_skip(path, str(exc))
            continue
        logs.append(dialogue_from_events(events))
    return logs


# Pinned aggregate formulas (mirrored verbatim by the brute-force checker).

def _mean(xs: list[float]) -> float:
    return sum(xs) / len(xs)


def _median(xs: list[float]) -> float:
    s = sorted(xs)
    mid = len(s) // 2
    if len(s) % 2:
        return s[mid]
    return (s[mid - 1] + s[mid]) / 2


def _pstdev(xs: list[float]) -> float:
    m = _mean(xs)
    return math.sqrt(sum((x - m) ** 2 for x in xs) / len(xs))


def _q3(xs: list[float]) -> float:
    s = sorted(xs)
    pos = 0.75 * (len(s) - 1)
    j = math.floor(pos)
    frac = pos - j
    if j + 1 < len(s):
        return s[j] + frac * (s[j + 1] - s[j])
    return s[j]


COMPLETED_OUTCOMES = ("success", "same_type_different_room", "not_in_target_type")


@dataclass
class CorpusStats:
    n_dialogues: int
    outcome_fractions: dict[str, float]
    mean_turns: float
    mean_tokens_per_dialogue: float
    mean_seconds: float
    total_turns: int
    mean_tokens_per_turn: float | None
    n_types: int
    type_token_ratio: float | None
    vocab_overlap_iou: list[float]
    mean_vocab_overlap_iou: float | None
    mean_moves_per_dialogue: float
    move_say_ratio: float | None
    median_room_dwell_s: float | None
    mean_silent_rooms: float | None
    mean_turns_when_talking: float | None
    contribution_ratio_tokens: float | None
    contribution_ratio_turns: float | None
    crosstalk_per_dialogue: float
    mean_gap_s: float | None
    gap_sd: float | None
    mean_gap_first3q: float | None
    n_questions: int
    questions_per_dialogue: float
    games_per_worker: dict[int, int]

    def to_dict(self) -> dict:
        out = dict(self.__dict__)
        out["games_per_worker"] = {str(k): v for k, v in sorted(self.games_per_worker.items())}
        return out


def _room_visits(log: DialogueLog, player: str) -> list[tuple[float, float, tuple[int, int]]]:
    """Chronological (enter_ts, leave_ts, room) intervals for one player.

    The final visit is closed at the dialogue's last timestamp.  Without an
    initial-room record there is no timeline for this player.
    """
    if player not in log.initial_rooms:
        return []
    visits = []
    enter = log.start_ts
    room = log.initial_rooms[player]
    for action in log.private_actions:
        if action.kind == "move" and action.actor == player:
            visits.append((enter, action.ts, room))
            enter = action.ts
            room = action.room
    visits.append((enter, log.end_ts, room))
    return visits


def _says_per_visit(log: DialogueLog, player: str,
                    visits: list[tuple[float, float, tuple[int, int]]]) -> list[int]:
    """Number of this player's turns falling inside each visit interval."""
    counts = [0] * len(visits)
    for turn in log.turns:
        if turn.actor != player:
            continue
        idx = 0
        for i, (enter, _leave, _room) in enumerate(visits):
            if turn.ts >= enter:
                idx = i
        counts[idx] += 1
    return counts


def _different_speaker_gaps(log: DialogueLog) -> list[float]:
    gaps = []
    for prev, cur in zip(log.turns, log.turns[1:]):
        if prev.actor != cur.actor:
            gaps.append(cur.ts - prev.ts)
    return gaps


def is_question(text: str) -> bool:
    stripped = text.rstrip()
    return bool(stripped) and stripped[-1] == "?"


def corpus_stats(logs: list[DialogueLog], *, crosstalk_threshold: float = 2.0,
                 count_rejected_moves: bool = False) -> CorpusStats:
    """All corpus statistics; see the class for field-by-field definitions."""
    if not logs:
        raise EmptyCorpus("no dialogues to analyze")
    logs = sorted(logs, key=lambda d: d.game_id)

    n = len(logs)
    completed = [d for d in logs if d.outcome in COMPLETED_OUTCOMES]
    outcome_fractions = {
        kind: (sum(1 for d in completed if d.outcome == kind) / len(completed)
               if completed else 0.0)
        for kind in COMPLETED_OUTCOMES
    }

    turn_counts = [len(d.turns) for d in logs]
    tokens_per_dialogue = []
    all_tokens: list[str] = []
    per_turn_tokens: list[int] = []
    for d in logs:
        count = 0
        for turn in d.turns:
            toks = tokenize(turn.text)
            count += len(toks)
            all_tokens.extend(toks)
            per_turn_tokens.append(len(toks))
        tokens_per_dialogue.append(count)

    total_turns = sum(turn_counts)
    total_tokens = len(all_tokens)
    n_types = len(set(all_tokens))

    ious = []
    for d in logs:
        vocab = {"A": set(), "B": set()}
        for turn in d.turns:
            if turn.actor in vocab:
                vocab[turn.actor].update(tokenize(turn.text))
        union = vocab["A"] | vocab["B"]
        ious.append(len(vocab["A"] & vocab["B"]) / len(union) if union else 0.0)

    moves_per_dialogue = []
    for d in logs:
        count = sum(1 for a in d.private_actions if a.kind == "move")
        if count_rejected_moves:
            count += len(d.rejected_moves)
        moves_per_dialogue.append(count)
    total_moves = sum(moves_per_dialogue)

    dwells: list[float] = []
    silent_per_player: list[int] = []  # zero-say visits, one tally per (dialogue, player)
    talking_turn_counts: list[int] = []
    for d in logs:
        for player in ("A", "B"):
            visits = _room_visits(d, player)
            if not visits:
                continue
            for enter, leave, _room in visits:
                dwells.append(leave - enter)
            says = _says_per_visit(d, player, visits)
            silent_per_player.append(sum(1 for s in says if s == 0))
            talking_turn_counts.extend(s for s in says if s > 0)

    ratio_tokens = []
    ratio_turns = []
    for d in logs:
        tok = {"A": 0, "B": 0}
        trn = {"A": 0, "B": 0}
        for turn in d.turns:
            if turn.actor in tok:
                tok[turn.actor] += len(tokenize(turn.text))
                trn[turn.actor] += 1
        if min(tok.values()) > 0:
            ratio_tokens.append(max(tok.values()) / min(tok.values()))
        if min(trn.values()) > 0:
            ratio_turns.append(max(trn.values()) / min(trn.values()))

    crosstalk_counts = []
    gaps_all: list[float] = []
    for d in logs:
        count = 0
        for prev, cur in zip(d.turns, d.turns[1:]):
            if prev.actor != cur.actor and cur.ts - prev.ts <= crosstalk_threshold:
                count += 1
        crosstalk_counts.append(count)
        gaps_all.extend(_different_speaker_gaps(d))

    n_questions = sum(1 for d in logs for turn in d.turns if is_question(turn.text))

    games_count: dict[str, int] = {}
    for d in logs:
        for wid in set(d.worker_ids.values()):
            games_count[wid] = games_count.get(wid, 0) + 1
    games_per_worker: dict[int, int] = {}
    for wid in sorted(games_count):
        k = games_count[wid]
        games_per_worker[k] = games_per_worker.get(k, 0) + 1

    if gaps_all:
        q3 = _q3(gaps_all)
        first3q = [g for g in gaps_all if g <= q3]
    else:
        first3q = []

    return CorpusStats(
        n_dialogues=n,
        outcome_fractions=outcome_fractions,
        mean_turns=_mean([float(c) for c in turn_counts]),
        mean_tokens_per_dialogue=_mean([float(c) for c in tokens_per_dialogue]),
        mean_seconds=_mean([d.end_ts - d.start_ts for d in logs]),
        total_turns=total_turns,
        mean_tokens_per_turn=(total_tokens / total_turns) if total_turns else None,
        n_types=n_types,
        type_token_ratio=(n_types / total_tokens) if total_tokens else None,
        vocab_overlap_iou=ious,
        mean_vocab_overlap_iou=_mean(ious) if ious else None,
        mean_moves_per_dialogue=_mean([float(c) for c in moves_per_dialogue]),
        move_say_ratio=(total_moves / total_turns) if total_turns else None,
        median_room_dwell_s=_median(dwells) if dwells else None,
        mean_silent_rooms=_mean([float(c) for c in silent_per_player]) if silent_per_player else None,
        mean_turns_when_talking=_mean([float(c) for c in talking_turn_counts]) if talking_turn_counts else None,
        contribution_ratio_tokens=_mean(ratio_tokens) if ratio_tokens else None,
        contribution_ratio_turns=_mean(ratio_turns) if ratio_turns else None,
        crosstalk_per_dialogue=_mean([float(c) for c in crosstalk_counts]),
        mean_gap_s=_mean(gaps_all) if gaps_all else None,
        gap_sd=_pstdev(gaps_all) if gaps_all else None,
        mean_gap_first3q=_mean(first3q) if first3q else None,
        n_questions=n_questions,
        questions_per_dialogue=n_questions / n,
        games_per_worker=games_per_worker,
    )


PREFIX_POPULATIONS = ("first_turns", "final_before_done", "questions", "all_turns")


def prefix_histogram(logs: list[DialogueLog], which: str, k: int = 3) -> list[tuple[str, int]]:
    """(prefix, count) pairs, descending by count then lexicographic.

    The prefix of a turn is its first k tokens joined by spaces (all of them
    when the turn is shorter).  final_before_done selects, per dialogue, the
    last turn preceding the first done action.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if which not in PREFIX_POPULATIONS:
        raise ValueError(f"which must be one of {PREFIX_POPULATIONS}")
    logs = sorted(logs, key=lambda d: d.game_id)
    population: list[Turn] = []
    if which == "first_turns":
        population = [d.turns[0] for d in logs if d.turns]
    elif which == "final_before_done":
        for d in logs:
            done_ts = [a.ts for a in d.private_actions if a.kind == "done"]
            if not done_ts:
                continue
            first_done = min(done_ts)
            before = [t for t in d.turns if t.ts < first_done]
            if before:
                population.append(before[-1])
    elif which == "questions":
        population = [t for d in logs for t in d.turns if is_question(t.text)]
    else:
        population = [t for d in logs for t in d.turns]

    counts: dict[str, int] = {}
    for turn in population:
        prefix = " ".join(tokenize(turn.text)[:k])
        counts[prefix] = counts.get(prefix, 0) + 1
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))


# Best-effort importer for externally published corpora.

_SPEAKER_KEYS = ("speaker", "user", "author", "actor", "from", "sender")
_TEXT_KEYS = ("text", "msg", "message", "utterance", "content")
_TS_KEYS = ("ts", "time", "timestamp")
_GM_NAMES = {"gm", "game master", "game_master", "gamemaster", "system"}


def _published_message(rec: dict) -> tuple[str | None, str | None, float | None]:
    speaker = next((str(rec[k]) for k in _SPEAKER_KEYS if rec.get(k) is not None), None)
    text = next((str(rec[k]) for k in _TEXT_KEYS if rec.get(k) is not None), None)
    ts = None
    for k in _TS_KEYS:
        if isinstance(rec.get(k), (int, float)):
            ts = float(rec[k])
            break
    return speaker, text, ts


def _published_to_dialogue(rec: dict, fallback_id: str) -> DialogueLog | None:
    messages = None
    for key in ("messages", "turns", "events", "log"):
        if isinstance(rec.get(key), list):
            messages = rec[key]
            break
    if messages is None:
        return None
    turns: list[Turn] = []
    private: list[PrivateAction] = []
    speakers: list[str] = []
    counter = 0.0
    for msg in messages:
        if not isinstance(msg, dict):
            continue
        speaker, text, ts = _published_message(msg)
        if ts is None:
            counter += 1.0
            ts = counter
        else:
            counter = ts
        mtype = str(msg.get("type") or msg.get("kind") or msg.get("action") or "").lower()
        if speaker is None:
            continue
        if speaker.lower() in _GM_NAMES:
            continue
        if speaker not in speakers:
            speakers.append(speaker)
        role = "A" if speakers and speaker == speakers[0] else "B"
        if mtype in ("move", "nav", "navigation", "command"):
            private.append(PrivateAction(role, ts, "move", None))
        elif mtype in ("done", "solve", "end"):
            private.append(PrivateAction(role, ts, "done", None))
        elif text is not None:
            turns.append(Turn(role, ts, text))
    if len(speakers) < 2 or not turns:
        return None
    raw_outcome = str(rec.get("outcome") or rec.get("result") or rec.get("status") or "").lower()
    outcome = None
    for kind in COMPLETED_OUTCOMES + ("aborted",):
        if kind in raw_outcome or raw_outcome == kind:
            outcome = kind
            break
    if raw_outcome in ("success", "succeeded", "won", "win", "solved"):
        outcome = "success"
    all_ts = [t.ts for t in turns] + [a.ts for a in private]
    worker_ids = {}
    players = rec.get("players") or rec.get("workers")
    if isinstance(players, dict):
        for role, wid in zip(("A", "B"), players.values()):
            worker_ids[role] = str(wid)
    elif isinstance(players, list):
        for role, wid in zip(("A", "B"), players):
            worker_ids[role] = str(wid)
    return DialogueLog(
        game_id=str(rec.get("game_id") or rec.get("id") or rec.get("name") or fallback_id),
        turns=sorted(turns, key=lambda t: t.ts),
        private_actions=sorted(private, key=lambda a: a.ts),
        rejected_moves=[],
        outcome=outcome,
        outcome_reason=None,
        worker_ids=worker_ids,
        start_ts=min(all_ts) if all_ts else 0.0,
        end_ts=max(all_ts) if all_ts else 0.0,
        initial_rooms={},
        target_type=rec.get("target_type"),
    )


def load_published(directory: str | Path,
                   on_skip: Callable[[Path, str], None] | None = None) -> list[DialogueLog]:
    """Import a published-corpus directory on a best-effort, validated basis.

    Accepts JSON files holding either one dialogue record or a list of them;
    records must contain a message list with recognizable speaker/text
    fields and at least two distinct non-GM speakers.
    """
    directory = Path(directory)
    paths = sorted(directory.rglob("*.json"))
    if not paths:
        raise NoFilesFound(f"no .json files under {directory}")
    if on_skip is None:
        on_skip = lambda path, reason: logger.warning("skipping %s: %s", path, reason)
    logs: list[DialogueLog] = []
    for path in paths:
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            on_skip(path, str(exc))
            continue
        records: list = []
        if isinstance(data, list):
            records = data
        elif isinstance(data, dict) and isinstance(data.get("dialogues"), list):
            records = data["dialogues"]
        elif isinstance(data, dict):
            records = [data]
        converted = 0
        for i, rec in enumerate(records):
            if not isinstance(rec, dict):
                continue
            dialogue = _published_to_dialogue(rec, fallback_id=f"{path.stem}-{i}")
            if dialogue is not None:
                logs.append(dialogue)
                converted += 1
        if converted == 0:
            on_skip(path, "no mappable dialogue records")
    return logs
