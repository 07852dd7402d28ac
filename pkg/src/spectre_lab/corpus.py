"""Bundled example programs, attackers, golden traces and the expected verdict table."""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from .lang import Attacker, Component
from .syntax import parse_attacker, parse_component


@dataclass(frozen=True)
class CorpusEntry:
    id: str
    file: str
    title: str
    aliases: tuple[str, ...] = ()


@dataclass(frozen=True)
class TableRow:
    label: str
    pass_: str
    strong: str
    weak: str


@dataclass(frozen=True)
class Golden:
    id: str
    component: str
    attacker: str
    pass_: str
    sem: str
    mode: str
    omega: int
    file: str


def _root():
    return resources.files("spectre_lab") / "corpus"


def read_text(name: str) -> str:
    return (_root() / name).read_text(encoding="utf-8")


@lru_cache(maxsize=None)
def manifest() -> dict:
    return json.loads(read_text("manifest.json"))


def components() -> list[CorpusEntry]:
    return [CorpusEntry(c["id"], c["file"], c["title"], tuple(c.get("aliases", ()))) for c in manifest()["components"]]


def attackers() -> list[CorpusEntry]:
    return [CorpusEntry(a["id"], a["file"], a["title"]) for a in manifest()["attackers"]]


def component_ids() -> list[str]:
    return [c.id for c in components()]


def resolve_component(name: str) -> str | None:
    """Canonical id for ``name`` (an id or alias), or None."""
    for c in components():
        if name == c.id or name in c.aliases:
            return c.id
    return None


def attacker_ids() -> list[str]:
    return [a.id for a in attackers()]


@lru_cache(maxsize=None)
def component(name: str) -> Component:
    for c in components():
        if name == c.id or name in c.aliases:
            return parse_component(read_text(c.file))
    raise KeyError(f"no corpus component {name!r}")


@lru_cache(maxsize=None)
def attacker(name: str) -> Attacker:
    for a in attackers():
        if a.id == name:
            return parse_attacker(read_text(a.file))
    raise KeyError(f"no corpus attacker {name!r}")


def table_rows() -> list[TableRow]:
    return [TableRow(r["label"], r["pass"], r["strong"], r["weak"]) for r in manifest()["table"]["rows"]]


def table_values() -> tuple[int, ...]:
    return tuple(manifest()["table"]["values"])


def goldens() -> list[Golden]:
    return [
        Golden(g["id"], g["component"], g["attacker"], g["pass"], g["sem"], g["mode"], g["omega"], g["file"])
        for g in manifest()["golden"]
    ]


def constants() -> dict:
    return dict(manifest()["constants"])
