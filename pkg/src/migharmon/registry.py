"""Canonical entity identity: alias resolution and decade-specific index maps.

The registry is loaded once from delimiter-separated data files and is
immutable afterwards, so it is safe to share across workers. A packaged
registry for the Indian states and union territories ships with the library
(see :func:`default_registry`); site-specific aliases are added by editing
the data file, not the code.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import IO, Iterable

from .errors import ParseError, UnknownIndex, UnknownName, UnmappableEntity
from .model import DurationBin, MigrationTable, OriginKind, OriginRef

_WS = re.compile(r"\s+")


def normalize_name(raw: str) -> str:
    """Collapse a raw place name to its lookup key.

    Case-folded, whitespace-trimmed, with ``&`` rewritten to ``and`` so that
    variants like "A&N Islands" / "A & N islands" collide on one key.
    """
    text = raw.strip().casefold().replace("&", " and ")
    return _WS.sub(" ", text).strip()


@dataclass(frozen=True)
class Entity:
    canonical_id: str
    canonical_name: str
    aliases: frozenset[str]
    valid_decades: frozenset[str]
    parent_id: str | None = None

    def __post_init__(self):
        if not self.valid_decades:
            raise ValueError(f"entity {self.canonical_id!r} has no valid decades")


class IndexMap:
    """Bijection between numeric indices and canonical ids for one decade."""

    def __init__(self, decade: str, pairs: Iterable[tuple[int, str]]):
        self.decade = decade
        self._by_index: dict[int, str] = {}
        self._by_entity: dict[str, int] = {}
        for index, canonical_id in pairs:
            if index in self._by_index:
                raise ValueError(f"duplicate index {index} in {decade} map")
            if canonical_id in self._by_entity:
                raise ValueError(f"duplicate entity {canonical_id!r} in {decade} map")
            self._by_index[index] = canonical_id
            self._by_entity[canonical_id] = index

    def __len__(self) -> int:
        return len(self._by_index)

    def entity_for(self, index: int) -> str:
        try:
            return self._by_index[index]
        except KeyError:
            raise UnknownIndex(index, self.decade) from None

    def index_for(self, canonical_id: str) -> int:
        try:
            return self._by_entity[canonical_id]
        except KeyError:
            raise UnmappableEntity(canonical_id) from None

    @property
    def entities(self) -> frozenset[str]:
        return frozenset(self._by_entity)

    def pairs(self) -> list[tuple[int, str]]:
        return sorted(self._by_index.items())


class EntityRegistry:
    """Immutable lookup over entities, their aliases and index maps."""

    def __init__(self, entities: Iterable[Entity], index_maps: Iterable[IndexMap] = ()):
        self._entities: dict[str, Entity] = {}
        self._alias_to_id: dict[str, str] = {}
        for entity in entities:
            if entity.canonical_id in self._entities:
                raise ValueError(f"duplicate entity {entity.canonical_id!r}")
            self._entities[entity.canonical_id] = entity
            for alias in entity.aliases | {entity.canonical_name, entity.canonical_id}:
                key = normalize_name(alias)
                owner = self._alias_to_id.get(key)
                if owner is not None and owner != entity.canonical_id:
                    raise ValueError(
                        f"alias {alias!r} claimed by both {owner!r} and "
                        f"{entity.canonical_id!r}"
                    )
                self._alias_to_id[key] = entity.canonical_id
        self._index_maps: dict[str, IndexMap] = {}
        for imap in index_maps:
            if imap.decade in self._index_maps:
                raise ValueError(f"duplicate index map for decade {imap.decade!r}")
            for canonical_id in imap.entities:
                entity = self._entities.get(canonical_id)
                if entity is None:
                    raise ValueError(
                        f"index map {imap.decade!r} references unknown entity "
                        f"{canonical_id!r}"
                    )
                if imap.decade not in entity.valid_decades:
                    raise ValueError(
                        f"entity {canonical_id!r} mapped in {imap.decade!r} but "
                        f"not valid there"
                    )
            self._index_maps[imap.decade] = imap

    # -- lookups ---------------------------------------------------------------

    @property
    def entity_ids(self) -> tuple[str, ...]:
        return tuple(sorted(self._entities))

    def entity(self, canonical_id: str) -> Entity:
        try:
            return self._entities[canonical_id]
        except KeyError:
            raise UnknownName(canonical_id) from None

    def canonicalize(self, raw: str) -> str:
        """Resolve a raw name to its canonical id; raises UnknownName."""
        canonical_id = self._alias_to_id.get(normalize_name(raw))
        if canonical_id is None:
            raise UnknownName(raw)
        return canonical_id

    def name_of(self, canonical_id: str) -> str:
        return self.entity(canonical_id).canonical_name

    def resolve_index(self, index: int, decade: str) -> str:
        return self.index_map(decade).entity_for(index)

    def index_map(self, decade: str) -> IndexMap:
        try:
            return self._index_maps[decade]
        except KeyError:
            raise UnknownIndex(-1, decade) from None

    def has_index_map(self, decade: str) -> bool:
        return decade in self._index_maps

    def valid_in(self, decade: str) -> frozenset[str]:
        return frozenset(
            cid for cid, e in self._entities.items() if decade in e.valid_decades
        )


# -- index remapping -----------------------------------------------------------


def remap_indices(
    table: MigrationTable, from_map: IndexMap, to_map: IndexMap
) -> MigrationTable:
    """Rewrite a table keyed by numeric-index tokens into another index scheme.

    The table's destination and interstate-origin tokens must be decimal
    indices of ``from_map``. Counts, bins and record structure are untouched;
    only the identifier encoding changes. Raises UnmappableEntity when the
    target map lacks a resolved entity.
    """

    def translate(token: str) -> str:
        try:
            index = int(token)
        except ValueError:
            raise UnknownIndex(-1, from_map.decade) from None
        canonical_id = from_map.entity_for(index)
        return str(to_map.index_for(canonical_id))

    new_counts: dict = {}
    for (dest, origin, bin_), value in table.counts.items():
        new_dest = translate(dest)
        if origin.kind is OriginKind.INTERSTATE:
            origin = OriginRef.interstate(translate(origin.state))
        new_counts[(new_dest, origin, bin_)] = value
    return table.with_counts(new_counts)


# -- loading ---------------------------------------------------------------------

REGISTRY_HEADER = ["canonical_id", "canonical_name", "alias", "valid_decades"]
INDEX_HEADER = ["decade", "index", "canonical_id"]


def _open(source: str | Path | IO[str]):
    if hasattr(source, "read"):
        return source, False
    return open(source, "r", encoding="utf-8", newline=""), True


def load_entities(source: str | Path | IO[str]) -> list[Entity]:
    """Read the alias table: one row per alias, entity fields repeated.

    Columns: canonical_id, canonical_name, alias, valid_decades
    (semicolon-separated), optional parent_id.
    """
    stream, owned = _open(source)
    try:
        reader = csv.reader(stream)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:4]] != REGISTRY_HEADER:
            raise ParseError(1, "bad registry header")
        rows: dict[str, dict] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < 4:
                raise ParseError(lineno, f"expected >=4 fields, got {len(row)}")
            cid, name, alias, decades = (c.strip() for c in row[:4])
            parent = row[4].strip() if len(row) > 4 and row[4].strip() else None
            decade_set = frozenset(d.strip() for d in decades.split(";") if d.strip())
            record = rows.setdefault(
                cid,
                {"name": name, "aliases": set(), "decades": decade_set, "parent": parent},
            )
            if record["name"] != name or record["decades"] != decade_set:
                raise ParseError(lineno, f"conflicting entity fields for {cid!r}")
            if parent is not None and record["parent"] not in (None, parent):
                raise ParseError(lineno, f"conflicting parent for {cid!r}")
            if parent is not None:
                record["parent"] = parent
            record["aliases"].add(alias or name)
        return [
            Entity(
                canonical_id=cid,
                canonical_name=rec["name"],
                aliases=frozenset(rec["aliases"]) | {rec["name"]},
                valid_decades=rec["decades"],
                parent_id=rec["parent"],
            )
            for cid, rec in sorted(rows.items())
        ]
    finally:
        if owned:
            stream.close()


def load_index_maps(source: str | Path | IO[str]) -> list[IndexMap]:
    """Read index-map rows (decade, index, canonical_id), grouped by decade."""
    stream, owned = _open(source)
    try:
        reader = csv.reader(stream)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:3]] != INDEX_HEADER:
            raise ParseError(1, "bad index-map header")
        by_decade: dict[str, list[tuple[int, str]]] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < 3:
                raise ParseError(lineno, f"expected 3 fields, got {len(row)}")
            decade, index, cid = (c.strip() for c in row[:3])
            try:
                idx = int(index)
            except ValueError:
                raise ParseError(lineno, f"bad index {index!r}") from None
            by_decade.setdefault(decade, []).append((idx, cid))
        return [IndexMap(decade, pairs) for decade, pairs in sorted(by_decade.items())]
    finally:
        if owned:
            stream.close()


def load_registry(
    registry_path: str | Path, index_map_paths: Iterable[str | Path] = ()
) -> EntityRegistry:
    entities = load_entities(registry_path)
    maps: list[IndexMap] = []
    for path in index_map_paths:
        maps.extend(load_index_maps(path))
    return EntityRegistry(entities, maps)


def default_registry() -> EntityRegistry:
    """The packaged registry of Indian states/UTs with both index schemes."""
    data = resources.files("migharmon").joinpath("data")
    entities = load_entities(data.joinpath("india_registry.csv").open("r"))
    maps: list[IndexMap] = []
    for name in (
        "index_1991_alphabetical.csv",
        "index_2001_geographic.csv",
        "index_2011_geographic.csv",
    ):
        maps.extend(load_index_maps(data.joinpath(name).open("r")))
    return EntityRegistry(entities, maps)
