"""Backward-chained timepoints with hypothesis stores and parsimony pointers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from .metrics import NullRecorder
from .worldstate import ChangeRecord

if TYPE_CHECKING:
    from .engine import Hypothesis

PRIMITIVE = "primitive"
INFERRED = "inferred"


class TimelineError(Exception):
    pass


@dataclass(eq=False)
class ActionInstance:
    action_type: str
    args: tuple[str, ...]
    start: Timepoint
    end: Timepoint
    kind: str = PRIMITIVE
    provenance: Hypothesis | None = None
    node_id: int = 0

    def key(self) -> tuple:
        return (self.action_type, self.args, self.start.index)

    def span(self) -> tuple[int, int]:
        return (self.start.index, self.end.index)

    def __repr__(self) -> str:
        return f"{self.action_type}<{', '.join(self.args)}>[{self.start.index}..{self.end.index}]"


@dataclass(eq=False)
class Timepoint:
    index: int = 0
    prev: Timepoint | None = None
    change_record: ChangeRecord | None = None
    hypothesis_store: dict[str, list] = field(default_factory=dict)
    pointer: ActionInstance | None = None
    distance: int | None = None
    processed: set = field(default_factory=set)
    node_id: int = 0
    link_id: int = 0

    def __repr__(self) -> str:
        return f"t{self.index}"


def initial_timepoint(recorder=None) -> Timepoint:
    rec = recorder or NullRecorder()
    return Timepoint(index=0, distance=0, node_id=rec.create("timepoint"))


def append_timepoint(prev: Timepoint, change_record: ChangeRecord | None = None, recorder=None) -> Timepoint:
    rec = recorder or NullRecorder()
    tp = Timepoint(index=prev.index + 1, prev=prev, change_record=change_record)
    tp.node_id = rec.create("timepoint")
    tp.link_id = rec.create("chain-link")
    return tp


def add_hypothesis(tp: Timepoint, predicted_type: str, h: Hypothesis, recorder=None) -> None:
    rec = recorder or NullRecorder()
    h.store_entry_id = rec.create("store-entry")
    tp.hypothesis_store.setdefault(predicted_type, []).append(h)


def hypotheses_for(tp: Timepoint, action_type: str, recorder=None) -> list:
    """Snapshot of hypotheses parked at ``tp`` that predicted ``action_type``."""
    rec = recorder or NullRecorder()
    rec.access(tp.node_id)
    found = list(tp.hypothesis_store.get(action_type, ()))
    for h in found:
        rec.access(h.store_entry_id)
    return found


def update_parsimony(tp: Timepoint, candidate: ActionInstance, recorder=None) -> bool:
    """Install ``candidate`` as tp's pointer iff it gives a strictly shorter path to t0."""
    if candidate.end is not tp:
        raise TimelineError(f"{candidate!r} does not end at {tp!r}")
    rec = recorder or NullRecorder()
    rec.access(candidate.start.node_id)
    start_distance = candidate.start.distance
    if start_distance is None:
        raise TimelineError(f"{candidate!r} starts at {candidate.start!r}, which has no parsimony distance")
    new = start_distance + 1
    if tp.pointer is not None:
        rec.access(tp.node_id)
        if new >= tp.distance:
            return False
    tp.pointer = candidate
    tp.distance = new
    return True


def walk_length(tp: Timepoint) -> int:
    """Path length to t0 by following pointers; cross-check for stored distances."""
    n = 0
    while tp.index != 0:
        if tp.pointer is None:
            raise TimelineError(f"broken parsimony chain at {tp!r}")
        tp = tp.pointer.start
        n += 1
    return n


@dataclass
class Explanation:
    intents: list[ActionInstance]
    covered_actions: int

    def spans(self) -> list[tuple[int, int]]:
        return [a.span() for a in self.intents]

    def as_tuples(self) -> list[tuple[str, tuple[str, ...], int, int]]:
        return [(a.action_type, a.args, a.start.index, a.end.index) for a in self.intents]

    def to_sexp(self) -> str:
        parts = ["explanation"]
        for a in self.intents:
            parts.append(
                "(intent " + " ".join([a.action_type, *a.args, f"(span {a.start.index} {a.end.index})"]) + ")"
            )
        return "(" + " ".join(parts) + ")"


def trace(final_tp: Timepoint, recorder=None) -> Explanation:
    rec = recorder or NullRecorder()
    intents = []
    tp = final_tp
    while tp.index != 0:
        rec.access(tp.node_id)
        if tp.pointer is None:
            raise TimelineError(f"incomplete processing: {tp!r} has no parsimony pointer")
        rec.access(tp.pointer.node_id)
        intents.append(tp.pointer)
        tp = tp.pointer.start
    rec.access(tp.node_id)
    intents.reverse()
    return Explanation(intents, final_tp.index)
