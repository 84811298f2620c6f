"""Chain configuration: engine descriptors, composition strategy, validation."""

from __future__ import annotations

import csv
import hashlib
import json
import os
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Any

# Topics fed by the decoders before any engine runs.
BASE_TOPICS = ("flow", "dns", "dhcp", "http", "tls", "activity")


class ConfigError(ValueError):
    def __init__(self, kind: str, message: str):
        super().__init__(f"{kind}: {message}")
        self.kind = kind


class EngineKind(str, Enum):
    PPE = "PPE"
    CPE = "CPE"


class CompositionMode(str, Enum):
    ENSEMBLE = "ensemble"
    BEST = "best"


@dataclass(frozen=True)
class CompositionStrategy:
    mode: CompositionMode = CompositionMode.ENSEMBLE
    accuracy: dict[tuple[str, str], float] | None = None


@dataclass(frozen=True)
class EngineDescriptor:
    engine_id: str
    kind: EngineKind
    subscribes: tuple[str, ...]
    emits: tuple[str, ...]
    engine_type: str = ""
    params: dict[str, Any] = field(default_factory=dict)

    @property
    def type_name(self) -> str:
        return self.engine_type or self.engine_id


@dataclass(frozen=True)
class ChainConfig:
    engines: tuple[EngineDescriptor, ...] = ()
    composition: CompositionStrategy = field(default_factory=CompositionStrategy)
    params: dict[str, Any] = field(default_factory=dict)
    digest: str = ""

    def parameters(self, engine_id: str) -> dict[str, Any]:
        for e in self.engines:
            if e.engine_id == engine_id:
                return dict(e.params)
        return {}


def validate_chain(engines: tuple[EngineDescriptor, ...]) -> None:
    """Reject duplicate ids, cycles, and subscriptions nothing earlier produces."""
    ids = [e.engine_id for e in engines]
    dupes = sorted({i for i in ids if ids.count(i) > 1})
    if dupes:
        raise ConfigError("DuplicateEngine", ", ".join(dupes))
    producers: dict[str, set[str]] = {}
    for e in engines:
        for t in e.emits:
            producers.setdefault(t, set()).add(e.engine_id)
    # engine -> engines it consumes from
    deps = {e.engine_id: set() for e in engines}
    for e in engines:
        for t in e.subscribes:
            deps[e.engine_id] |= producers.get(t, set())
    state: dict[str, int] = {}

    def visit(node: str, path: list[str]) -> None:
        state[node] = 1
        for nxt in sorted(deps[node]):
            if state.get(nxt) == 1:
                cycle = path[path.index(nxt):] + [nxt] if nxt in path else [node, nxt]
                raise ConfigError("Cycle", " -> ".join(cycle))
            if nxt not in state:
                visit(nxt, path + [nxt])
        state[node] = 2

    for e in engines:
        if e.engine_id not in state:
            visit(e.engine_id, [e.engine_id])
    available = set(BASE_TOPICS)
    for e in engines:
        missing = [t for t in e.subscribes if t not in available]
        if missing:
            raise ConfigError("UnsatisfiedDependency", f"{e.engine_id} subscribes to {', '.join(missing)}")
        available.update(e.emits)


def load_accuracy_csv(path: str | os.PathLike) -> dict[tuple[str, str], float]:
    acc: dict[tuple[str, str], float] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if not row or row[0] == "engine_id":
                continue
            acc[(row[0].strip(), row[1].strip())] = float(row[2])
    return acc


def parse_chain_config(raw: dict, base_dir: Path | None = None, digest: str = "") -> ChainConfig:
    if not isinstance(raw, dict) or not isinstance(raw.get("engines"), list):
        raise ConfigError("Schema", "expected an object with an 'engines' array")
    engines = []
    for i, item in enumerate(raw["engines"]):
        try:
            engines.append(
                EngineDescriptor(
                    engine_id=str(item["engine_id"]),
                    kind=EngineKind(item.get("kind", "CPE")),
                    subscribes=tuple(item.get("subscribes", [])),
                    emits=tuple(item.get("emits", [])),
                    engine_type=str(item.get("type", "")),
                    params=dict(item.get("params", {})),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError("Schema", f"engines[{i}]: {exc}") from exc
    engines_t = tuple(engines)
    validate_chain(engines_t)
    comp = raw.get("composition", {}) or {}
    try:
        mode = CompositionMode(comp.get("mode", "ensemble"))
    except ValueError as exc:
        raise ConfigError("Schema", f"composition.mode: {exc}") from exc
    accuracy = None
    if comp.get("accuracy_file"):
        path = Path(comp["accuracy_file"])
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        try:
            accuracy = load_accuracy_csv(path)
        except (OSError, ValueError, IndexError) as exc:
            raise ConfigError("Accuracy", f"{path}: {exc}") from exc
    elif isinstance(comp.get("accuracy"), list):
        accuracy = {(a["engine_id"], a["attribute"]): float(a["accuracy"]) for a in comp["accuracy"]}
    if mode is CompositionMode.BEST and accuracy is None:
        raise ConfigError("Schema", "best-classifier composition needs an accuracy table")
    return ChainConfig(engines_t, CompositionStrategy(mode, accuracy), dict(raw.get("params", {})), digest)


def load_chain_config(path: str | os.PathLike) -> ChainConfig:
    path = Path(path)
    data = path.read_bytes()
    try:
        raw = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ConfigError("Schema", f"{path}: {exc}") from exc
    return parse_chain_config(raw, path.parent, hashlib.sha256(data).hexdigest())


def default_chain_config() -> ChainConfig:
    data = resources.files("netsight").joinpath("data/default_chain.json").read_bytes()
    return parse_chain_config(json.loads(data), None, hashlib.sha256(data).hexdigest())
