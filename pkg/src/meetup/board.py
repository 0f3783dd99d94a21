"""Procedural gameboard generation.

A gameboard is a connected subgraph of the 2-D grid: a random walk collects
the required number of cells, room types are assigned (the target type goes
to exactly 4 interior nodes, dead-end rooms get outdoor scenes), each room
gets a distinct image identifier, and two distinct non-target start rooms
are drawn.  Everything is a pure function of (seed, config).
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, NamedTuple

from .catalog import TypeCatalog, builtin_catalog, synthetic_manifest


class BoardError(Exception):
    """Base class for board-generation failures."""


class InsufficientInteriorNodes(BoardError):
    """Graph cannot host 4 target rooms plus 2 non-target start rooms."""


class CatalogExhausted(BoardError):
    """An image pool ran out before every room of that type got a distinct image."""


class NoValidStarts(BoardError):
    """Fewer than 2 non-target rooms to start the players in."""


class UnknownNode(BoardError):
    """Queried node is not on the board."""


class Coord(NamedTuple):
    """A cell of the infinite 2-D grid; ordered (col, row)."""

    col: int
    row: int


class Direction(str, Enum):
    NORTH = "north"
    SOUTH = "south"
    EAST = "east"
    WEST = "west"

    @property
    def delta(self) -> tuple[int, int]:
        return _DELTAS[self]

    @property
    def opposite(self) -> "Direction":
        return _OPPOSITES[self]

    def step(self, node: Coord) -> Coord:
        dc, dr = self.delta
        return Coord(node.col + dc, node.row + dr)


# Screen-style rows: north decreases the row index.
_DELTAS = {
    Direction.NORTH: (0, -1),
    Direction.SOUTH: (0, 1),
    Direction.EAST: (1, 0),
    Direction.WEST: (-1, 0),
}
_OPPOSITES = {
    Direction.NORTH: Direction.SOUTH,
    Direction.SOUTH: Direction.NORTH,
    Direction.EAST: Direction.WEST,
    Direction.WEST: Direction.EAST,
}

# Tie-break order everywhere a direction choice must be deterministic.
DIRECTION_ORDER = (Direction.NORTH, Direction.SOUTH, Direction.EAST, Direction.WEST)

Edge = tuple[Coord, Coord]


def make_edge(a: Coord, b: Coord) -> Edge:
    """Canonical (sorted) form of an undirected edge."""
    return (a, b) if a <= b else (b, a)


def grid_adjacent(a: Coord, b: Coord) -> bool:
    return abs(a.col - b.col) + abs(a.row - b.row) == 1


@dataclass(frozen=True)
class GridGraph:
    nodes: frozenset[Coord]
    edges: frozenset[Edge]

    def neighbors(self, node: Coord) -> list[Coord]:
        """Grid neighbors connected by an edge, in direction tie-break order."""
        out = []
        for d in DIRECTION_ORDER:
            other = d.step(node)
            if make_edge(node, other) in self.edges:
                out.append(other)
        return out

    def degree(self, node: Coord) -> int:
        return len(self.neighbors(node))

    def leaves(self) -> set[Coord]:
        return {n for n in self.nodes if self.degree(n) == 1}

    def interior(self) -> set[Coord]:
        return {n for n in self.nodes if self.degree(n) >= 2}

    def is_connected(self) -> bool:
        if not self.nodes:
            return True
        seen = {next(iter(self.nodes))}
        frontier = list(seen)
        while frontier:
            node = frontier.pop()
            for nb in self.neighbors(node):
                if nb not in seen:
                    seen.add(nb)
                    frontier.append(nb)
        return seen == self.nodes


@dataclass(frozen=True)
class RoomType:
    name: str
    category: str  # "target" | "distractor" | "outdoor"


@dataclass(frozen=True)
class Layout:
    graph: GridGraph
    typing: dict[Coord, RoomType]
    target_type: RoomType


@dataclass(frozen=True)
class Gameboard:
    layout: Layout
    images: dict[Coord, str]
    starts: tuple[Coord, Coord]
    seed: int = 0

    @property
    def graph(self) -> GridGraph:
        return self.layout.graph

    @property
    def nodes(self) -> frozenset[Coord]:
        return self.layout.graph.nodes

    @property
    def target_type(self) -> RoomType:
        return self.layout.target_type

    def room_type(self, node: Coord) -> RoomType:
        return self.layout.typing[node]

    def is_target_room(self, node: Coord) -> bool:
        return self.layout.typing[node].name == self.target_type.name

    def target_rooms(self) -> list[Coord]:
        return sorted(n for n in self.nodes if self.is_target_room(n))


def generate_walk(seed: int, node_count: int = 10, *, walk_edges_only: bool = False,
                  step_budget: int = 10_000) -> GridGraph:
    """Random-walk a grid until *node_count* distinct cells are visited.

    By default the edge set is grid-induced over the visited cells (adjacent
    rooms share a door); with walk_edges_only only edges the walk actually
    traversed are kept.  If the walk exhausts its step budget it restarts
    with seed+1 (a guard that never triggers with a sane RNG).
    """
    if node_count < 2:
        raise ValueError("node_count must be >= 2")
    attempt_seed = seed
    while True:
        rng = random.Random(attempt_seed)
        pos = Coord(0, 0)
        nodes = {pos}
        walk_edges: set[Edge] = set()
        for _ in range(step_budget):
            d = rng.choice(DIRECTION_ORDER)
            nxt = d.step(pos)
            walk_edges.add(make_edge(pos, nxt))
            nodes.add(nxt)
            pos = nxt
            if len(nodes) == node_count:
                break
        else:
            attempt_seed += 1
            continue
        if walk_edges_only:
            edges = {e for e in walk_edges if e[0] in nodes and e[1] in nodes}
        else:
            edges = {
                make_edge(n, d.step(n))
                for n in nodes for d in DIRECTION_ORDER
                if d.step(n) in nodes
            }
        return GridGraph(frozenset(nodes), frozenset(edges))


def assign_layout(graph: GridGraph, target_type_name: str, catalog: TypeCatalog,
                  seed: int) -> Layout:
    """Type the graph: 4 interior target rooms, distinct distractors, outdoor leaves."""
    if target_type_name not in catalog.target_types:
        raise ValueError(f"{target_type_name!r} is not a target-capable type")
    interior = sorted(graph.interior())
    leaves = sorted(graph.leaves())
    if len(interior) < 4 or len(graph.nodes) < 6:
        raise InsufficientInteriorNodes(
            f"need 4 interior target rooms and 2 non-target start rooms; "
            f"got {len(interior)} interior of {len(graph.nodes)} nodes"
        )
    rng = random.Random(seed)
    target = RoomType(target_type_name, "target")
    typing: dict[Coord, RoomType] = {}

    target_nodes = rng.sample(interior, 4)
    for node in target_nodes:
        typing[node] = target

    rest = [n for n in interior if n not in typing]
    distractor_pool = list(catalog.distractor_types)
    rng.shuffle(distractor_pool)
    if len(rest) > len(distractor_pool):  # only reachable with huge boards
        distractor_pool = distractor_pool * (len(rest) // len(distractor_pool) + 1)
    for node, name in zip(rest, distractor_pool):
        typing[node] = RoomType(name, "distractor")

    outdoor_pool = list(catalog.outdoor_types)
    rng.shuffle(outdoor_pool)
    if len(leaves) > len(outdoor_pool):
        outdoor_pool = outdoor_pool * (len(leaves) // len(outdoor_pool) + 1)
    for node, name in zip(leaves, outdoor_pool):
        typing[node] = RoomType(name, "outdoor")

    return Layout(graph, typing, target)


def assign_images(layout: Layout, manifest: dict[str, list[str]], seed: int) -> dict[Coord, str]:
    """Draw one image identifier per room from its type's pool, all distinct."""
    missing = {t.name for t in layout.typing.values()} - set(manifest)
    if missing:
        raise CatalogExhausted(f"manifest has no pool for types: {sorted(missing)}")
    rng = random.Random(seed)
    used: set[str] = set()
    images: dict[Coord, str] = {}
    for node in sorted(layout.graph.nodes):
        pool = [i for i in manifest[layout.typing[node].name] if i not in used]
        if not pool:
            raise CatalogExhausted(
                f"pool for {layout.typing[node].name!r} exhausted at node {node}"
            )
        pick = rng.choice(pool)
        used.add(pick)
        images[node] = pick
    return images


def pick_starts(layout: Layout, seed: int) -> tuple[Coord, Coord]:
    """Two distinct start rooms, neither of the target type."""
    candidates = sorted(
        n for n in layout.graph.nodes
        if layout.typing[n].name != layout.target_type.name
    )
    if len(candidates) < 2:
        raise NoValidStarts(f"only {len(candidates)} non-target rooms")
    rng = random.Random(seed)
    a, b = rng.sample(candidates, 2)
    return (a, b)


def exits(board: Gameboard, node: Coord) -> list[Direction]:
    """Available exit directions at a room, in direction tie-break order."""
    if node not in board.nodes:
        raise UnknownNode(f"{node} not on board")
    return [
        d for d in DIRECTION_ORDER
        if make_edge(node, d.step(node)) in board.graph.edges
    ]


def validate_board(board: Gameboard, catalog: TypeCatalog | None = None) -> list[str]:
    """Every violated invariant, one description each; empty list means valid."""
    if catalog is None:
        catalog = builtin_catalog()
    violations: list[str] = []
    graph = board.graph

    for a, b in graph.edges:
        if a not in graph.nodes or b not in graph.nodes:
            violations.append(f"edge ({a}, {b}) references a node off the board")
        if not grid_adjacent(a, b):
            violations.append(f"edge ({a}, {b}) joins non-adjacent cells")
    if not graph.is_connected():
        violations.append("graph is not connected")

    typing = board.layout.typing
    untyped = graph.nodes - set(typing)
    if untyped:
        violations.append(f"untyped nodes: {sorted(untyped)}")
    if board.target_type.name not in catalog.target_types:
        violations.append(f"target type {board.target_type.name!r} is not target-capable")

    target_nodes = [n for n in typing if typing[n].name == board.target_type.name]
    if len(target_nodes) != 4:
        violations.append(
            f"target-count: {len(target_nodes)} rooms typed {board.target_type.name!r}, need 4"
        )
    for node in sorted(graph.leaves()):
        if node in typing and typing[node].name not in catalog.outdoor_types:
            violations.append(f"leaf {node} has non-outdoor type {typing[node].name!r}")
    for node in sorted(graph.interior()):
        if node in typing and typing[node].name in catalog.outdoor_types:
            violations.append(f"interior node {node} has outdoor type {typing[node].name!r}")

    if len(set(board.images.values())) != len(board.images):
        counts: dict[str, int] = {}
        for img in board.images.values():
            counts[img] = counts.get(img, 0) + 1
        dupes = sorted(i for i, c in counts.items() if c > 1)
        violations.append(f"image identifiers not distinct: {dupes}")
    unimaged = graph.nodes - set(board.images)
    if unimaged:
        violations.append(f"nodes without an image: {sorted(unimaged)}")

    a, b = board.starts
    for label, node in (("A", a), ("B", b)):
        if node not in graph.nodes:
            violations.append(f"start {label} {node} not on board")
        elif typing.get(node) and typing[node].name == board.target_type.name:
            violations.append(f"start {label} {node} is a target-type room")
    if a == b:
        violations.append(f"starts are not distinct: both {a}")

    return violations


def generate_board(seed: int, *, node_count: int = 10,
                   target_type: str | None = None,
                   catalog: TypeCatalog | None = None,
                   manifest: dict[str, list[str]] | None = None,
                   walk_edges_only: bool = False) -> Gameboard:
    """Run the whole recipe: walk -> layout -> images -> starts.

    Graphs without enough interior nodes are rejected and regenerated with
    seed+1; the returned board records the seed it was *asked* for, so a
    given seed always maps to the same board.
    """
    if catalog is None:
        catalog = builtin_catalog()
    if manifest is None:
        manifest = synthetic_manifest(catalog)
    rng = random.Random(seed)
    chosen_type = target_type or rng.choice(catalog.target_types)

    attempt = seed
    while True:
        graph = generate_walk(attempt, node_count, walk_edges_only=walk_edges_only)
        try:
            layout = assign_layout(graph, chosen_type, catalog, attempt)
        except InsufficientInteriorNodes:
            attempt += 1
            continue
        images = assign_images(layout, manifest, attempt)
        starts = pick_starts(layout, attempt)
        return Gameboard(layout, images, starts, seed=seed)


BOARD_SCHEMA_VERSION = 1


def board_to_dict(board: Gameboard) -> dict:
    """Self-describing JSON form of a board (the board file format)."""
    return {
        "schema_version": BOARD_SCHEMA_VERSION,
        "seed": board.seed,
        "target_type": board.target_type.name,
        "nodes": [
            {
                "col": n.col,
                "row": n.row,
                "type": board.layout.typing[n].name,
                "image": board.images[n],
            }
            for n in sorted(board.nodes)
        ],
        "edges": [
            [[a.col, a.row], [b.col, b.row]]
            for a, b in sorted(board.graph.edges)
        ],
        "starts": [[c.col, c.row] for c in board.starts],
    }


def board_from_dict(data: dict, catalog: TypeCatalog | None = None) -> Gameboard:
    if catalog is None:
        catalog = builtin_catalog()
    if data.get("schema_version") != BOARD_SCHEMA_VERSION:
        raise BoardError(f"unsupported board schema_version {data.get('schema_version')!r}")
    typing: dict[Coord, RoomType] = {}
    images: dict[Coord, str] = {}
    nodes: set[Coord] = set()
    for rec in data["nodes"]:
        node = Coord(rec["col"], rec["row"])
        nodes.add(node)
        typing[node] = RoomType(rec["type"], catalog.category_of(rec["type"]))
        images[node] = rec["image"]
    edges = frozenset(
        make_edge(Coord(*a), Coord(*b)) for a, b in data["edges"]
    )
    graph = GridGraph(frozenset(nodes), edges)
    target_name = data["target_type"]
    layout = Layout(graph, typing, RoomType(target_name, catalog.category_of(target_name)))
    starts = tuple(Coord(*c) for c in data["starts"])
    return Gameboard(layout, images, (starts[0], starts[1]), seed=data.get("seed", 0))


def save_board(board: Gameboard, path: str | Path) -> None:
    Path(path).write_text(json.dumps(board_to_dict(board), indent=2) + "\n", encoding="utf-8")


def load_board(path: str | Path, catalog: TypeCatalog | None = None) -> Gameboard:
    return board_from_dict(json.loads(Path(path).read_text(encoding="utf-8")), catalog)
