"""Online hypothetico-deductive inference over a cause-effect knowledge base.

Each observed action is pushed onto the timeline, evokes hypotheses from the
schemas whose first effect matches it, and is checked against the hypotheses
parked at its start timepoint. Completed hypotheses become inferred
intentions that are processed recursively like observations.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .kb import ConstraintAtom, EffectTemplate, KnowledgeBase, Schema, Term, schemas_for_first_effect
from .metrics import NullRecorder
from .timeline import (
    INFERRED,
    PRIMITIVE,
    ActionInstance,
    Explanation,
    Timepoint,
    add_hypothesis,
    append_timepoint,
    hypotheses_for,
    initial_timepoint,
    trace,
    update_parsimony,
    walk_length,
)
from .worldstate import EnvObject, WorldError, WorldState

log = logging.getLogger(__name__)

ACTIVE = "active"
COMPLETED = "completed"
ABANDONED = "abandoned"

DEFAULT_RECURSION_LIMIT = 64


class InferenceError(Exception):
    pass


class RecursionLimitError(InferenceError):
    pass


@dataclass(eq=False)
class Hypothesis:
    schema: Schema
    start_tp: Timepoint
    current_tp: Timepoint
    bindings: dict[str, tuple[str, int]] = field(default_factory=dict)  # var -> (value, binding node)
    next_effect_idx: int = 0
    pending: tuple[ConstraintAtom, ...] = ()
    status: str = ACTIVE
    matched: tuple[ActionInstance, ...] = ()
    node_id: int = 0
    store_entry_id: int = 0

    def next_effect(self) -> EffectTemplate:
        return self.schema.effects[self.next_effect_idx]

    def values(self) -> dict[str, str]:
        return {k: v for k, (v, _) in self.bindings.items()}

    def __repr__(self) -> str:
        return (
            f"<Hyp {self.schema.cause_type}#{self.schema.schema_id} @{self.next_effect_idx}"
            f" {self.values()} t{self.start_tp.index}..t{self.current_tp.index} {self.status}>"
        )


@dataclass
class InferenceContext:
    kb: KnowledgeBase
    world: WorldState
    initial_tp: Timepoint
    current_tp: Timepoint
    recorder: object = field(default_factory=NullRecorder)
    recursion_limit: int = DEFAULT_RECURSION_LIMIT
    debug: bool = False
    diagnostics: list[str] = field(default_factory=list)
    instances: list[ActionInstance] = field(default_factory=list)
    # abandoned hypothesis node -> tick at abandonment (only when recording)
    abandoned_at: dict[int, int] = field(default_factory=dict)


def _resolve(term: Term, bindings: dict, rec) -> str | None:
    if not term.is_var:
        return term.value
    b = bindings.get(term.value)
    if b is None:
        return None
    rec.access(b[1])
    return b[0]


def unify_effect(h: Hypothesis, template: EffectTemplate, a: ActionInstance, recorder=None) -> dict[str, str] | None:
    """Binding delta making ``template`` match ``a``'s arguments, or None on mismatch."""
    rec = recorder or NullRecorder()
    if len(template.args) != len(a.args):
        return None
    delta: dict[str, str] = {}
    for term, value in zip(template.args, a.args):
        if not term.is_var:
            if term.value != value:
                return None
            continue
        bound = _resolve(term, h.bindings, rec)
        if bound is None:
            bound = delta.get(term.value)
        if bound is None:
            delta[term.value] = value
        elif bound != value:
            return None
    return delta


def eval_constraints(ctx: InferenceContext, h: Hypothesis, phase: str) -> dict[str, str] | None:
    """Evaluate every currently evaluable pending atom.

    Returns the binding delta produced by ``prop-at`` atoms, or None if an atom
    fails. Evaluated atoms are dropped from ``h.pending``. In the completion
    phase every atom must be evaluable.
    """
    rec = ctx.recorder
    delta: dict[str, str] = {}
    view = dict(h.bindings)
    pending = list(h.pending)
    progress = True
    while progress and pending:
        progress = False
        remaining = []
        for atom in pending:
            outcome = _eval_atom(ctx, h, atom, view, delta, phase)
            if outcome is None:
                remaining.append(atom)
            elif outcome is False:
                return None
            else:
                progress = True
        pending = remaining
    if phase == "completion" and pending:
        ctx.diagnostics.append(f"{h.schema!r}: unevaluable constraints {[a.to_form() for a in pending]}")
        return None
    h.pending = tuple(pending)
    return delta


def _eval_atom(ctx, h, atom: ConstraintAtom, view, delta, phase):
    """True = satisfied, False = violated, None = not yet evaluable."""
    rec = ctx.recorder
    if atom.tag in ("eq", "neq"):
        left = _resolve(atom.left, view, rec)
        right = _resolve(atom.right, view, rec)
        if left is None or right is None:
            return None
        return (left == right) == (atom.tag == "eq")

    if atom.anchor == "end" and phase != "completion":
        return None
    obj = _resolve(atom.obj, view, rec)
    if obj is None:
        return None
    tp = h.start_tp if atom.anchor == "start" else h.current_tp
    try:
        actual = ctx.world.query(obj, atom.prop, tp.index)
    except WorldError as exc:
        ctx.diagnostics.append(f"{h.schema!r}: {exc}")
        return False
    expected = _resolve(atom.value, view, rec)
    if expected is None:
        view[atom.value.value] = (actual, 0)
        delta[atom.value.value] = actual
        return True
    return expected == actual


def _bind(ctx: InferenceContext, h: Hypothesis, delta: dict[str, str]) -> None:
    for var, value in delta.items():
        h.bindings[var] = (value, ctx.recorder.create("binding"))


def _abandon(ctx: InferenceContext, h: Hypothesis) -> None:
    h.status = ABANDONED
    rec = ctx.recorder
    if rec.enabled:
        ctx.abandoned_at[h.node_id] = len(rec.events) - 1


def _fork(ctx: InferenceContext, h: Hypothesis) -> Hypothesis:
    ctx.recorder.access(h.node_id)
    return Hypothesis(
        schema=h.schema,
        start_tp=h.start_tp,
        current_tp=h.current_tp,
        bindings=dict(h.bindings),
        next_effect_idx=h.next_effect_idx,
        pending=h.pending,
        matched=h.matched,
        node_id=ctx.recorder.create("hypothesis"),
    )


def verify_hypothesis(ctx: InferenceContext, h: Hypothesis, a: ActionInstance, depth: int = 0) -> None:
    """Try to extend ``h`` with ``a``.

    A hypothesis already parked in a timepoint store is forked so that it can
    still be matched by other instances starting at the same timepoint.
    """
    rec = ctx.recorder
    cand = _fork(ctx, h) if h.next_effect_idx > 0 else h
    rec.access(cand.node_id)
    rec.access(a.node_id)

    delta = unify_effect(cand, cand.next_effect(), a, rec)
    if delta is None:
        _abandon(ctx, cand)
        return
    _bind(ctx, cand, delta)
    cand.matched = cand.matched + (a,)
    cand.next_effect_idx += 1
    cand.current_tp = a.end
    complete = cand.next_effect_idx == len(cand.schema.effects)

    delta = eval_constraints(ctx, cand, "completion" if complete else "incremental")
    if delta is None:
        _abandon(ctx, cand)
        return
    _bind(ctx, cand, delta)

    if not complete:
        add_hypothesis(a.end, cand.next_effect().effect_type, cand, rec)
        return

    args = []
    for p in cand.schema.cause_params:
        b = cand.bindings.get(p)
        if b is None:
            ctx.diagnostics.append(f"{cand.schema!r}: cause parameter {p!r} unbound at completion")
            _abandon(ctx, cand)
            return
        rec.access(b[1])
        args.append(b[0])
    cand.status = COMPLETED
    intent = ActionInstance(
        cand.schema.cause_type,
        tuple(args),
        cand.start_tp,
        a.end,
        kind=INFERRED,
        provenance=cand,
        node_id=rec.create("intention"),
    )
    process_action(ctx, intent, depth + 1)


def process_action(ctx: InferenceContext, a: ActionInstance, depth: int = 0) -> None:
    if depth > ctx.recursion_limit:
        raise RecursionLimitError(f"recursion depth exceeded {ctx.recursion_limit} while processing {a!r}")
    rec = ctx.recorder
    update_parsimony(a.end, a, rec)
    if ctx.debug and walk_length(a.end) != a.end.distance:
        raise InferenceError(f"stored distance at {a.end!r} disagrees with pointer walk")

    if a.kind == INFERRED:
        key = a.key()
        if key in a.end.processed:
            return
        a.end.processed.add(key)
    ctx.instances.append(a)

    for schema in schemas_for_first_effect(ctx.kb, a.action_type):
        h = Hypothesis(
            schema=schema,
            start_tp=a.start,
            current_tp=a.start,
            pending=schema.constraints,
            node_id=rec.create("hypothesis"),
        )
        verify_hypothesis(ctx, h, a, depth)

    for h in hypotheses_for(a.start, a.action_type, rec):
        verify_hypothesis(ctx, h, a, depth)


class Session:
    """Streaming inference: ``push_step`` per observed action, then ``finish``."""

    def __init__(
        self,
        kb: KnowledgeBase,
        init_env: Iterable[EnvObject] = (),
        recorder=None,
        recursion_limit: int = DEFAULT_RECURSION_LIMIT,
        debug: bool = False,
    ):
        rec = recorder or NullRecorder()
        world = WorldState(init_env, rec)
        t0 = initial_timepoint(rec)
        world.initial_node = t0.node_id
        self.ctx = InferenceContext(
            kb=kb,
            world=world,
            initial_tp=t0,
            current_tp=t0,
            recorder=rec,
            recursion_limit=recursion_limit,
            debug=debug,
        )

    @property
    def steps(self) -> int:
        return self.ctx.current_tp.index

    def push_step(self, action_type: str, args: Sequence[str], changes: Iterable[tuple[str, str, str]] = ()) -> None:
        ctx = self.ctx
        sig = ctx.kb.signatures.get(action_type)
        if sig is None:
            raise InferenceError(f"undeclared action type {action_type!r}")
        if sig.kind != PRIMITIVE:
            raise InferenceError(f"observed action {action_type!r} is not declared primitive")
        if sig.arity != len(args):
            raise InferenceError(f"arity mismatch: {action_type} takes {sig.arity} arguments, got {len(args)}")
        prev = ctx.current_tp
        try:
            record = ctx.world.apply_changes(prev.index + 1, changes)
        except WorldError as exc:
            raise InferenceError(str(exc)) from exc
        tp = append_timepoint(prev, record, ctx.recorder)
        ctx.current_tp = tp
        action = ActionInstance(action_type, tuple(args), prev, tp, PRIMITIVE, node_id=ctx.recorder.create("action"))
        process_action(ctx, action)

    def explanation(self) -> Explanation:
        return trace(self.ctx.current_tp, self.ctx.recorder)

    finish = explanation


def explain(kb: KnowledgeBase, demo, init_env: Iterable[EnvObject] = (), recorder=None, **kwargs) -> Explanation:
    """Explain ``demo``, an iterable of ``((type, args), changes)`` steps."""
    session = Session(kb, init_env, recorder, **kwargs)
    for (action_type, args), changes in demo:
        session.push_step(action_type, args, changes)
    return session.finish()
