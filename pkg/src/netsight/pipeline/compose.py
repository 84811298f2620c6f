"""Attribute claims and their resolution into profile attributes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .config import CompositionMode, CompositionStrategy

ATTRIBUTES = frozenset(
    {"manufacturer", "os", "browser", "device_type", "is_iot", "owner", "stack", "behavior_mode"}
)

# relative slack under which two summed confidences count as tied
_TIE_REL = 1e-9


class MissingAccuracy(KeyError):
    pass


@dataclass(frozen=True, slots=True)
class AttributeClaim:
    device_key: str
    attribute: str
    value: str
    confidence: float
    engine_id: str
    ts: float

    def check(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"{self.engine_id}: confidence {self.confidence} outside [0, 1]")
        if self.attribute not in ATTRIBUTES:
            raise ValueError(f"{self.engine_id}: unregistered attribute {self.attribute!r}")

    def as_dict(self) -> dict:
        return {
            "attribute": self.attribute,
            "value": self.value,
            "confidence": round(self.confidence, 6),
            "engine_id": self.engine_id,
            "ts": self.ts,
        }


@dataclass(frozen=True, slots=True)
class Resolution:
    value: str
    confidence: float
    contributors: tuple[str, ...]

    def as_dict(self) -> dict:
        return {"value": self.value, "confidence": round(self.confidence, 6), "engines": list(self.contributors)}


def _ensemble(claims: Sequence[AttributeClaim]) -> Resolution:
    sums: dict[str, list[float]] = {}
    for c in claims:
        sums.setdefault(c.value, []).append(c.confidence)
    totals = {v: math.fsum(cs) for v, cs in sums.items()}
    grand = math.fsum(totals.values())
    top = max(totals.values())
    slack = _TIE_REL * max(grand, 1e-300)
    winner = min(v for v, s in totals.items() if top - s <= slack)
    confidence = totals[winner] / grand if grand > 0 else 0.0
    engines = tuple(sorted({c.engine_id for c in claims if c.value == winner}))
    return Resolution(winner, confidence, engines)


def _best(claims: Sequence[AttributeClaim], accuracy: Mapping[tuple[str, str], float]) -> Resolution:
    attribute = claims[0].attribute
    engines = sorted({c.engine_id for c in claims})
    missing = [e for e in engines if (e, attribute) not in accuracy]
    if missing:
        raise MissingAccuracy(f"no accuracy for {', '.join(missing)} on {attribute}")
    best_acc = max(accuracy[(e, attribute)] for e in engines)
    chosen = min(e for e in engines if accuracy[(e, attribute)] == best_acc)
    own = [c for c in claims if c.engine_id == chosen]
    # an engine may make several claims; take its most confident, then the smallest value
    pick = min(own, key=lambda c: (-c.confidence, c.value))
    return Resolution(pick.value, pick.confidence, (chosen,))


def resolve_attribute(claims: Sequence[AttributeClaim], strategy: CompositionStrategy | None = None) -> Resolution:
    """Resolve the claims made about one (device, attribute) pair."""
    if not claims:
        raise ValueError("resolve_attribute needs at least one claim")
    strategy = strategy or CompositionStrategy()
    if strategy.mode is CompositionMode.BEST:
        return _best(claims, strategy.accuracy or {})
    return _ensemble(claims)


def resolve_all(claims: Iterable[AttributeClaim], strategy: CompositionStrategy | None = None
                ) -> dict[str, dict[str, Resolution]]:
    grouped: dict[tuple[str, str], list[AttributeClaim]] = {}
    for c in claims:
        grouped.setdefault((c.device_key, c.attribute), []).append(c)
    out: dict[str, dict[str, Resolution]] = {}
    for (device, attribute) in sorted(grouped):
        out.setdefault(device, {})[attribute] = resolve_attribute(grouped[(device, attribute)], strategy)
    return out


def score_chains(claims: Iterable[AttributeClaim], labels: Mapping[str, Mapping[str, str]]
                 ) -> dict[tuple[str, str], float]:
    """Per (engine, attribute), the fraction of claims on labelled devices that match the label.

    ``labels`` maps device_key to {attribute: expected value}. Claims on devices
    or attributes without a label are not scored.
    """
    hits: dict[tuple[str, str], list[int]] = {}
    for c in claims:
        expected = labels.get(c.device_key, {}).get(c.attribute)
        if expected is None:
            continue
        tally = hits.setdefault((c.engine_id, c.attribute), [0, 0])
        tally[0] += c.value == str(expected)
        tally[1] += 1
    return {k: ok / n for k, (ok, n) in sorted(hits.items())}
