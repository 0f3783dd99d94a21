"""Room-type taxonomy and image manifests.

The built-in catalog has three disjoint lists: 20 target-capable room types
(categories a player can be asked to meet in), 28 indoor distractor types,
and 24 outdoor scene types reserved for dead-end rooms.  A catalog can also
be loaded from a plain-text file with ``[target]`` / ``[distractor]`` /
``[outdoor]`` section headers, one type name per line.

Image manifests map a type name to a pool of opaque image identifiers.  A
synthetic manifest (derived from the type names themselves) is generated on
demand so nothing in the repo depends on real image assets.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


class CatalogInvalid(Exception):
    """Catalog violates a size, duplication, or format constraint."""


class ManifestInvalid(Exception):
    """Image manifest is malformed or does not cover the catalog."""


TARGET_TYPES = (
    "bathroom", "bedroom", "kitchen", "basement", "nursery", "attic",
    "childs_room", "playroom", "dining_room", "home_office", "staircase",
    "utility_room", "living_room", "jacuzzi/indoor", "doorway/indoor",
    "locker_room", "wine_cellar/bottle_storage", "reading_room",
    "waiting_room", "balcony/interior",
)

DISTRACTOR_TYPES = (
    "home_theater", "storage_room", "hotel_room", "music_studio",
    "computer_room", "street", "yard", "tearoom", "art_studio",
    "kindergarden_classroom", "sewing_room", "shower", "veranda",
    "breakroom", "patio", "garage/indoor", "restroom/indoor", "workroom",
    "corridor", "game_room", "poolroom/home", "cloakroom/room", "closet",
    "parlor", "hallway", "reception", "carport/indoor",
    "hunting_lodge/indoor",
)

OUTDOOR_TYPES = (
    "garage/outdoor", "apartment_building/outdoor", "jacuzzi/outdoor",
    "doorway/outdoor", "restroom/outdoor", "swimming_pool/outdoor",
    "casino/outdoor", "kiosk/outdoor", "apse/outdoor", "carport/outdoor",
    "flea_market/outdoor", "chicken_farm/outdoor", "washhouse/outdoor",
    "cloister/outdoor", "diner/outdoor", "kennel/outdoor",
    "hunting_lodge/outdoor", "cathedral/outdoor", "newsstand/outdoor",
    "parking_garage/outdoor", "convenience_store/outdoor", "bistro/outdoor",
    "inn/outdoor", "library/outdoor",
)

_EXPECTED_SIZES = {"target": 20, "distractor": 28, "outdoor": 24}


def fs_safe(name: str) -> str:
    """File-system-safe alias for a type name (slash becomes a double underscore)."""
    return name.replace("/", "__")


@dataclass(frozen=True)
class TypeCatalog:
    """The three room-type lists used to build layouts."""

    target_types: tuple[str, ...]
    distractor_types: tuple[str, ...]
    outdoor_types: tuple[str, ...]

    def __post_init__(self) -> None:
        sizes = {
            "target": len(self.target_types),
            "distractor": len(self.distractor_types),
            "outdoor": len(self.outdoor_types),
        }
        if sizes != _EXPECTED_SIZES:
            raise CatalogInvalid(f"list sizes {sizes} != required {_EXPECTED_SIZES}")
        all_names = self.target_types + self.distractor_types + self.outdoor_types
        dupes = {n for n in all_names if all_names.count(n) > 1}
        if dupes:
            raise CatalogInvalid(f"type names appear in more than one list: {sorted(dupes)}")

    @property
    def all_types(self) -> tuple[str, ...]:
        return self.target_types + self.distractor_types + self.outdoor_types

    def category_of(self, name: str) -> str:
        """Category ("target" | "distractor" | "outdoor") of a type name."""
        if name in self.target_types:
            return "target"
        if name in self.distractor_types:
            return "distractor"
        if name in self.outdoor_types:
            return "outdoor"
        raise KeyError(f"unknown room type: {name!r}")

    def serialize(self) -> str:
        """Render the catalog in the sectioned plain-text file format."""
        lines: list[str] = []
        for header, names in (
            ("target", self.target_types),
            ("distractor", self.distractor_types),
            ("outdoor", self.outdoor_types),
        ):
            lines.append(f"[{header}]")
            lines.extend(names)
            lines.append("")
        return "\n".join(lines)


def builtin_catalog() -> TypeCatalog:
    """The catalog compiled into the package."""
    return TypeCatalog(TARGET_TYPES, DISTRACTOR_TYPES, OUTDOOR_TYPES)


def load_catalog(path: str | Path | None = None) -> TypeCatalog:
    """Load a catalog file, or return the built-in catalog when *path* is None.

    Raises CatalogInvalid on unknown sections, wrong list sizes, or names
    appearing in more than one list.
    """
    if path is None:
        return builtin_catalog()
    sections: dict[str, list[str]] = {"target": [], "distractor": [], "outdoor": []}
    current: list[str] | None = None
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            header = line[1:-1].strip().lower()
            if header not in sections:
                raise CatalogInvalid(f"unknown section {header!r}")
            current = sections[header]
        elif current is None:
            raise CatalogInvalid(f"type name {line!r} before any section header")
        else:
            current.append(line)
    return TypeCatalog(
        tuple(sections["target"]),
        tuple(sections["distractor"]),
        tuple(sections["outdoor"]),
    )


def synthetic_manifest(catalog: TypeCatalog | None = None, per_type: int = 8) -> dict[str, list[str]]:
    """Image manifest whose identifiers are derived from the type names.

    Identifiers look like ``kitchen_03``; per_type >= 4 keeps four same-typed
    rooms satisfiable with distinct images.
    """
    if catalog is None:
        catalog = builtin_catalog()
    if per_type < 4:
        raise ManifestInvalid("per_type must be >= 4")
    return {
        name: [f"{fs_safe(name)}_{i:02d}" for i in range(per_type)]
        for name in catalog.all_types
    }


def load_manifest(path: str | Path) -> dict[str, list[str]]:
    """Load an image manifest (JSON object: type name -> list of identifiers)."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ManifestInvalid(f"manifest is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ManifestInvalid("manifest must be a JSON object")
    manifest: dict[str, list[str]] = {}
    for name, pool in data.items():
        if not isinstance(pool, list) or not all(isinstance(i, str) for i in pool):
            raise ManifestInvalid(f"pool for {name!r} must be a list of strings")
        manifest[name] = list(pool)
    return manifest


def save_manifest(manifest: dict[str, list[str]], path: str | Path) -> None:
    Path(path).write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
