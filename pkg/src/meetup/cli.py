"""Command-line interface: genmap, serve, simulate, analyze."""

from __future__ import annotations

import argparse
import asyncio
import csv
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .agents import POLICIES, run_batch
from .analytics import (
    NoFilesFound,
    PREFIX_POPULATIONS,
    corpus_stats,
    load_logs,
    load_published,
    prefix_histogram,
)
from .board import board_to_dict, generate_board, validate_board
from .catalog import load_catalog, load_manifest
from .server import run_server


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="meetup", description=__doc__)
    parser.add_argument("--version", action="version", version=f"meetup {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("genmap", help="generate a gameboard file")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--target-type", default=None,
                   help="target room type (default: seeded random draw)")
    p.add_argument("--nodes", type=int, default=10)
    p.add_argument("--manifest", default=None, help="image manifest JSON (default: synthetic)")
    p.add_argument("--catalog", default=None, help="room-type catalog file (default: built-in)")
    p.add_argument("--out", required=True, help="output path, or - for stdout")
    p.add_argument("--walk-edges-only", action="store_true",
                   help="keep only edges the walk traversed instead of all grid-adjacent pairs")

    p = sub.add_parser("serve", help="run the game server")
    p.add_argument("--port", type=int, required=True, help="WebSocket port for browser clients")
    p.add_argument("--bot-port", type=int, required=True, help="newline-framed TCP port for bots")
    p.add_argument("--host", default="0.0.0.0")
    p.add_argument("--manifest", default=None)
    p.add_argument("--catalog", default=None)
    p.add_argument("--seed-base", type=int, default=0)
    p.add_argument("--nodes", type=int, default=10)
    p.add_argument("--time-limit", type=float, default=300.0)
    p.add_argument("--waiting-timeout", type=float, default=120.0)
    p.add_argument("--log-dir", default="logs",
                   help="event-log directory (env MEETUP_LOG_DIR overrides)")

    p = sub.add_parser("simulate", help="run scripted-agent episodes")
    p.add_argument("--boards", type=int, required=True, help="number of episodes/boards")
    p.add_argument("--policy-a", choices=sorted(POLICIES), default="describer")
    p.add_argument("--policy-b", choices=sorted(POLICIES), default="describer")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--step-cap", type=int, default=200)
    p.add_argument("--time-limit", type=float, default=300.0)
    p.add_argument("--nodes", type=int, default=10)

    p = sub.add_parser("bot", help="play over the network as a scripted agent")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, required=True, help="the server's bot port")
    p.add_argument("--policy", choices=("wanderer", "describer"), default="describer")
    p.add_argument("--games", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--poll", type=float, default=0.3, help="decision interval in seconds")
    p.add_argument("--max-steps", type=int, default=None,
                   help="override the policy's move budget")

    p = sub.add_parser("analyze", help="compute corpus statistics from event logs")
    p.add_argument("--in", dest="in_dir", required=True, help="directory of event logs")
    p.add_argument("--out", default="stats.json")
    p.add_argument("--prefix-k", type=int, default=3)
    p.add_argument("--crosstalk-threshold", type=float, default=2.0)
    p.add_argument("--histograms", default=None,
                   help="directory for prefix-histogram CSVs (one per population)")
    p.add_argument("--format", choices=("native", "published"), default="native")
    p.add_argument("--count-rejected-moves", action="store_true")

    return parser


def _cmd_genmap(args: argparse.Namespace) -> int:
    catalog = load_catalog(args.catalog)
    manifest = load_manifest(args.manifest) if args.manifest else None
    board = generate_board(
        args.seed,
        node_count=args.nodes,
        target_type=args.target_type,
        catalog=catalog,
        manifest=manifest,
        walk_edges_only=args.walk_edges_only,
    )
    violations = validate_board(board, catalog)
    if violations:
        print("generated board failed validation:", file=sys.stderr)
        for v in violations:
            print(f"  - {v}", file=sys.stderr)
        return 1
    text = json.dumps(board_to_dict(board), indent=2) + "\n"
    if args.out == "-":
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    log_dir = os.environ.get("MEETUP_LOG_DIR", args.log_dir)
    manifest = load_manifest(args.manifest) if args.manifest else None
    catalog = load_catalog(args.catalog)
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(levelname)s %(message)s")
    try:
        asyncio.run(run_server(
            host=args.host,
            port=args.port,
            bot_port=args.bot_port,
            log_dir=log_dir,
            seed_base=args.seed_base,
            time_limit=args.time_limit,
            waiting_timeout=args.waiting_timeout,
            node_count=args.nodes,
            catalog=catalog,
            manifest=manifest,
        ))
    except KeyboardInterrupt:
        pass
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    episodes, stats = run_batch(
        args.boards,
        args.policy_a,
        args.policy_b,
        args.seed,
        out_dir=args.out_dir,
        step_cap=args.step_cap,
        time_limit=args.time_limit,
        node_count=args.nodes,
    )
    print(f"{len(episodes)} episodes -> {args.out_dir}")
    for kind, count in sorted(stats.outcome_counts.items()):
        print(f"  {kind}: {count}")
    print(f"  mean moves/episode: {stats.mean_moves:.2f}")
    print(f"  mean says/episode: {stats.mean_says:.2f}")
    return 0


def _cmd_bot(args: argparse.Namespace) -> int:
    from .botclient import play_games

    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(levelname)s %(message)s")
    outcomes = asyncio.run(play_games(
        args.host, args.port, args.policy,
        games=args.games, seed=args.seed, poll_interval=args.poll,
        max_steps=args.max_steps,
    ))
    for i, outcome in enumerate(outcomes):
        print(f"game {i}: {outcome or 'disconnected'}")
    return 0 if all(o is not None for o in outcomes) else 1


def _cmd_analyze(args: argparse.Namespace) -> int:
    skipped: list[str] = []

    def on_skip(path: Path, reason: str) -> None:
        skipped.append(f"{path}: {reason}")

    try:
        if args.format == "published":
            logs = load_published(args.in_dir, on_skip=on_skip)
        else:
            logs = load_logs(args.in_dir, on_skip=on_skip)
    except NoFilesFound as exc:
        print(str(exc), file=sys.stderr)
        return 1
    for line in skipped:
        print(f"skipped {line}", file=sys.stderr)
    if not logs:
        print("no loadable dialogues", file=sys.stderr)
        return 1

    stats = corpus_stats(
        logs,
        crosstalk_threshold=args.crosstalk_threshold,
        count_rejected_moves=args.count_rejected_moves,
    )
    Path(args.out).write_text(json.dumps(stats.to_dict(), indent=2) + "\n", encoding="utf-8")
    print(f"analyzed {stats.n_dialogues} dialogues ({len(skipped)} skipped) -> {args.out}")

    if args.histograms:
        hist_dir = Path(args.histograms)
        hist_dir.mkdir(parents=True, exist_ok=True)
        for which in PREFIX_POPULATIONS:
            rows = prefix_histogram(logs, which, k=args.prefix_k)
            with (hist_dir / f"{which}.csv").open("w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh)
                writer.writerow(["prefix", "count"])
                writer.writerows(rows)
        print(f"histograms -> {hist_dir}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "genmap": _cmd_genmap,
        "serve": _cmd_serve,
        "simulate": _cmd_simulate,
        "bot": _cmd_bot,
        "analyze": _cmd_analyze,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
