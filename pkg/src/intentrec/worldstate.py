"""Initial environment plus per-timepoint change records, chained per object for point-in-time queries."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .metrics import NullRecorder


class WorldError(Exception):
    pass


@dataclass
class EnvObject:
    id: str
    properties: dict[str, str] = field(default_factory=dict)


@dataclass(eq=False)
class ObjectDelta:
    object_id: str
    time_index: int
    changed: dict[str, str]
    prev_same_object: ObjectDelta | None = None
    entry_ids: dict[str, int] = field(default_factory=dict)
    link_id: int = 0


@dataclass(eq=False)
class ChangeRecord:
    time_index: int
    entries: dict[str, ObjectDelta] = field(default_factory=dict)

    def triples(self) -> list[tuple[str, str, str]]:
        return [(o, p, v) for o, d in self.entries.items() for p, v in d.changed.items()]


class WorldState:
    def __init__(self, objects: Iterable[EnvObject] = (), recorder=None):
        self.recorder = recorder or NullRecorder()
        self.initial: dict[str, EnvObject] = {}
        for obj in objects:
            if obj.id in self.initial:
                raise WorldError(f"duplicate object id {obj.id!r}")
            self.initial[obj.id] = EnvObject(obj.id, dict(obj.properties))
        self.latest: dict[str, ObjectDelta | None] = dict.fromkeys(self.initial)
        self.last_index = 0
        # node standing for the initial environment (stored at timepoint 0)
        self.initial_node = 0

    def apply_changes(self, time_index: int, changes: Iterable[tuple[str, str, str]]) -> ChangeRecord:
        if time_index <= self.last_index:
            raise WorldError(f"non-monotonic time index {time_index} (last {self.last_index})")
        grouped: dict[str, dict[str, str]] = {}
        for obj, prop, value in changes:
            if obj not in self.initial:
                raise WorldError(f"change for unknown object {obj!r}")
            props = grouped.setdefault(obj, {})
            if prop in props:
                raise WorldError(f"duplicate change for ({obj} {prop}) at time {time_index}")
            props[prop] = value
        rec = ChangeRecord(time_index)
        for obj, props in grouped.items():
            prev = self.latest[obj]
            delta = ObjectDelta(obj, time_index, props, prev)
            for prop in props:
                delta.entry_ids[prop] = self.recorder.create("change-entry")
            if prev is not None:
                delta.link_id = self.recorder.create("chain-link")
            rec.entries[obj] = delta
            self.latest[obj] = delta
        self.last_index = time_index
        return rec

    def query(self, object_id: str, prop: str, at_time: int) -> str:
        """Value of ``prop`` on ``object_id`` after the action ending at ``at_time``."""
        if object_id not in self.initial:
            raise WorldError(f"unknown object {object_id!r}")
        rec = self.recorder
        delta = self.latest[object_id]
        while delta is not None:
            if delta.time_index <= at_time and prop in delta.changed:
                rec.access(delta.entry_ids.get(prop, 0))
                return delta.changed[prop]
            if delta.prev_same_object is not None:
                rec.access(delta.link_id)
            delta = delta.prev_same_object
        rec.access(self.initial_node)
        try:
            return self.initial[object_id].properties[prop]
        except KeyError:
            raise WorldError(f"object {object_id!r} has no property {prop!r}") from None

    def chain(self, object_id: str) -> list[ObjectDelta]:
        out = []
        delta = self.latest[object_id]
        while delta is not None:
            out.append(delta)
            delta = delta.prev_same_object
        return out


def init_env(objects: Iterable[EnvObject], recorder=None) -> WorldState:
    return WorldState(objects, recorder)


def apply_changes(ws: WorldState, time_index: int, changes) -> ChangeRecord:
    return ws.apply_changes(time_index, changes)


def query(ws: WorldState, object_id: str, prop: str, at_time: int) -> str:
    return ws.query(object_id, prop, at_time)
