"""Exhaustive cover enumeration used as ground truth for the online engine.

Works offline over the whole action sequence: a chart of every derivable
(type, args, start, end) item is built right-to-left, with constraints checked
against full environment snapshots rather than change chains.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .kb import KnowledgeBase, Schema
from .worldstate import EnvObject

DEFAULT_MAX_LENGTH = 20


class OracleError(Exception):
    pass


Item = tuple[str, tuple[str, ...], int, int]  # type, args, start, end


@dataclass(frozen=True)
class Cover:
    intents: tuple[Item, ...]

    @property
    def cardinality(self) -> int:
        return len(self.intents)


class CoverList(list):
    """List of covers; ``truncated`` is set when the enumeration limit was hit."""

    truncated = False


def snapshots(init_env: Sequence[EnvObject], changes: Sequence[Sequence[tuple[str, str, str]]]) -> list[dict]:
    """Full environment state at every timepoint 0..n, by replaying from scratch."""
    state = {o.id: dict(o.properties) for o in init_env}
    out = [{k: dict(v) for k, v in state.items()}]
    for step in changes:
        for obj, prop, value in step:
            if obj not in state:
                raise OracleError(f"change for unknown object {obj!r}")
            state[obj][prop] = value
        out.append({k: dict(v) for k, v in state.items()})
    return out


def _match(template_args, values, binding: dict) -> dict | None:
    new = dict(binding)
    for term, value in zip(template_args, values):
        if term.is_var:
            if new.setdefault(term.value, value) != value:
                return None
        elif term.value != value:
            return None
    return new


def _check_constraints(schema: Schema, binding: dict, start_state: dict, end_state: dict) -> dict | None:
    binding = dict(binding)
    pending = list(schema.constraints)

    def val(term):
        return binding.get(term.value) if term.is_var else term.value

    while pending:
        rest = []
        for atom in pending:
            if atom.tag in ("eq", "neq"):
                left, right = val(atom.left), val(atom.right)
                if left is None or right is None:
                    rest.append(atom)
                elif (left == right) != (atom.tag == "eq"):
                    return None
                continue
            obj = val(atom.obj)
            if obj is None:
                rest.append(atom)
                continue
            state = start_state if atom.anchor == "start" else end_state
            actual = state.get(obj, {}).get(atom.prop)
            if actual is None:
                return None
            expected = val(atom.value)
            if expected is None:
                binding[atom.value.value] = actual
            elif expected != actual:
                return None
        if len(rest) == len(pending):
            return None
        pending = rest
    return binding


class Chart:
    def __init__(self, kb: KnowledgeBase, actions, init_env=(), changes=None, max_length=DEFAULT_MAX_LENGTH):
        actions = [(t, tuple(a)) for t, a in actions]
        if max_length is not None and len(actions) > max_length:
            raise OracleError(f"demonstration of {len(actions)} actions exceeds oracle bound {max_length}")
        for t, args in actions:
            sig = kb.signatures.get(t)
            if sig is None or sig.kind != "primitive":
                raise OracleError(f"action {t!r} is not a declared primitive")
            if sig.arity != len(args):
                raise OracleError(f"arity mismatch for {t}")
        if changes is None:
            changes = [[] for _ in actions]
        self.kb = kb
        self.actions = actions
        self.n = len(actions)
        self.states = snapshots(list(init_env), changes)
        # items[i]: set of (type, args, end) derivable starting at i
        self.items: list[set] = [set() for _ in range(self.n + 1)]
        for i in range(self.n - 1, -1, -1):
            self._fill(i)

    def _fill(self, i: int) -> None:
        here = self.items[i]
        here.add((*self.actions[i], i + 1))
        frontier = set(here)
        while frontier:
            found = set()
            for etype, args, end in frontier:
                for schema in self.kb.schemas:
                    first = schema.effects[0]
                    if first.effect_type != etype:
                        continue
                    binding = _match(first.args, args, {})
                    if binding is None:
                        continue
                    for item in self._extend(schema, 1, binding, i, end):
                        if item not in here:
                            found.add(item)
            here |= found
            frontier = found

    def _extend(self, schema: Schema, k: int, binding: dict, start: int, pos: int):
        if k == len(schema.effects):
            full = _check_constraints(schema, binding, self.states[start], self.states[pos])
            if full is None or any(p not in full for p in schema.cause_params):
                return
            yield (schema.cause_type, tuple(full[p] for p in schema.cause_params), pos)
            return
        if pos >= self.n:
            return
        eff = schema.effects[k]
        for etype, args, end in list(self.items[pos]):
            if etype != eff.effect_type:
                continue
            nb = _match(eff.args, args, binding)
            if nb is not None:
                yield from self._extend(schema, k + 1, nb, start, end)

    def derivable(self, item: Item) -> bool:
        t, args, start, end = item
        if not (0 <= start < end <= self.n):
            return False
        return (t, tuple(args), end) in self.items[start]

    def accepts(self, intents) -> bool:
        """Gapless tiling of 0..n by derivable items."""
        pos = 0
        for item in intents:
            if item[2] != pos or not self.derivable(item):
                return False
            pos = item[3]
        return pos == self.n

    def min_cardinality(self) -> int | None:
        best: list[int | None] = [None] * (self.n + 1)
        best[0] = 0
        for i in range(self.n):
            if best[i] is None:
                continue
            for _, _, end in self.items[i]:
                if best[end] is None or best[i] + 1 < best[end]:
                    best[end] = best[i] + 1
        return best[self.n]

    def covers(self, limit: int) -> CoverList:
        out = CoverList()
        ordered = [sorted(s, key=lambda x: (x[2], x[0], x[1])) for s in self.items]

        def walk(pos: int, acc: list) -> bool:
            if pos == self.n:
                if len(out) >= limit:
                    out.truncated = True
                    return False
                out.append(Cover(tuple(acc)))
                return True
            for t, args, end in ordered[pos]:
                acc.append((t, args, pos, end))
                ok = walk(end, acc)
                acc.pop()
                if not ok:
                    return False
            return True

        walk(0, [])
        return out


def _demo_parts(demo):
    """Accept either a list of (type, args) or a list of ((type, args), changes)."""
    actions, changes = [], []
    for step in demo:
        if len(step) == 2 and isinstance(step[0], tuple) and isinstance(step[1], list):
            actions.append(step[0])
            changes.append(step[1])
        else:
            actions.append(step)
            changes.append([])
    return actions, changes


def enumerate_covers(kb, demo, init_env=(), limit: int = 10_000, max_length=DEFAULT_MAX_LENGTH) -> CoverList:
    actions, changes = _demo_parts(demo)
    return Chart(kb, actions, init_env, changes, max_length).covers(limit)


def min_cover_cardinality(kb, demo, init_env=(), max_length=DEFAULT_MAX_LENGTH) -> int | None:
    actions, changes = _demo_parts(demo)
    return Chart(kb, actions, init_env, changes, max_length).min_cardinality()


def validate_cover(kb, demo, init_env, explanation, max_length=DEFAULT_MAX_LENGTH) -> bool:
    """True iff ``explanation`` tiles the demo gaplessly with derivable intents.

    ``explanation`` is an Explanation or a sequence of (type, args, start, end).
    """
    intents = explanation.as_tuples() if hasattr(explanation, "as_tuples") else list(explanation)
    actions, changes = _demo_parts(demo)
    try:
        chart = Chart(kb, actions, init_env, changes, max_length)
    except OracleError:
        return False
    return chart.accepts(intents)
