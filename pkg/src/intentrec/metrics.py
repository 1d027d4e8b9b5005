"""Memory-event instrumentation: creation/access logs, lifespans and living-memory curves."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Sequence

NODE_KINDS = (
    "timepoint",
    "action",
    "intention",
    "hypothesis",
    "binding",
    "change-entry",
    "store-entry",
    "chain-link",
)


@dataclass(frozen=True)
class MemoryEvent:
    tick: int
    kind: str  # "create" | "access"
    node_id: int
    node_kind: str


@dataclass(frozen=True)
class LifespanRecord:
    node_id: int
    node_kind: str
    birth: int
    death: int


class NullRecorder:
    """Disabled recorder; every hook is a no-op."""

    enabled = False

    def create(self, node_kind: str) -> int:
        return 0

    def access(self, node_id: int) -> None:
        pass


class Recorder(NullRecorder):
    enabled = True

    def __init__(self):
        self.events: list[MemoryEvent] = []
        self._kinds: dict[int, str] = {}
        self._next_id = 1

    def create(self, node_kind: str) -> int:
        if node_kind not in NODE_KINDS:
            raise ValueError(f"unknown node kind {node_kind!r}")
        nid = self._next_id
        self._next_id += 1
        self._kinds[nid] = node_kind
        self.events.append(MemoryEvent(len(self.events), "create", nid, node_kind))
        return nid

    def access(self, node_id: int) -> None:
        if node_id:
            self.events.append(MemoryEvent(len(self.events), "access", node_id, self._kinds[node_id]))

    def record(self, event: MemoryEvent) -> None:
        """Append an externally built event, enforcing tick order and create-first."""
        if self.events and event.tick <= self.events[-1].tick:
            raise ValueError("ticks must strictly increase")
        if event.kind == "create":
            self._kinds[event.node_id] = event.node_kind
            self._next_id = max(self._next_id, event.node_id + 1)
        elif event.node_id not in self._kinds:
            raise ValueError(f"access before create for node {event.node_id}")
        self.events.append(event)

    def created_counts(self) -> dict[str, int]:
        counts = dict.fromkeys(NODE_KINDS, 0)
        for ev in self.events:
            if ev.kind == "create":
                counts[ev.node_kind] += 1
        return counts


def lifespans(events: Iterable[MemoryEvent]) -> list[LifespanRecord]:
    birth: dict[int, int] = {}
    death: dict[int, int] = {}
    kinds: dict[int, str] = {}
    for ev in events:
        if ev.kind == "create":
            birth[ev.node_id] = ev.tick
            death[ev.node_id] = ev.tick
            kinds[ev.node_id] = ev.node_kind
        else:
            death[ev.node_id] = ev.tick
    return [LifespanRecord(n, kinds[n], birth[n], death[n]) for n in sorted(birth)]


def living_curve(events: Sequence[MemoryEvent]) -> list[tuple[int, int, int]]:
    """(tick, living, total) for every tick plus one trailing tick where nothing is alive.

    A node is living at tick t when birth <= t <= death.
    """
    spans = lifespans(events)
    if not events:
        return []
    horizon = events[-1].tick + 1
    births = [0] * (horizon + 1)
    deaths = [0] * (horizon + 2)
    for rec in spans:
        births[rec.birth] += 1
        deaths[rec.death + 1] += 1
    curve = []
    living = total = 0
    for t in range(horizon + 1):
        total += births[t]
        living += births[t] - deaths[t]
        curve.append((t, living, total))
    return curve


def peak_ratio(events: Sequence[MemoryEvent]) -> float:
    curve = living_curve(events)
    if not curve:
        return 0.0
    return max(c[1] for c in curve) / curve[-1][2]


def export_csv(rows, path) -> None:
    """Write a living curve or a lifespan list as CSV."""
    rows = list(rows)
    if rows and isinstance(rows[0], LifespanRecord):
        export_lifespans_csv(rows, path)
        return
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tick", "living", "total"])
        w.writerows(sorted(rows))


def export_lifespans_csv(records: Sequence[LifespanRecord], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["nodeId", "kind", "birth", "death"])
        for r in sorted(records, key=lambda r: r.node_id):
            w.writerow([r.node_id, r.node_kind, r.birth, r.death])


def linear_fit(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float, float]:
    """Least-squares line; returns (slope, intercept, r_squared)."""
    import numpy as np

    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / ss_tot if ss_tot else 1.0
    return float(slope), float(intercept), r2
