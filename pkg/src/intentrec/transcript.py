"""Transcript files: ``(init ...)`` followed by ``(step (action ...) (changes ...))`` records."""

from __future__ import annotations

from dataclasses import dataclass, field

from .kb import KnowledgeBase
from .sexpr import ParseError, dumps, expect_atom, expect_list, head, read_all, where
from .worldstate import EnvObject

Step = tuple[tuple[str, tuple[str, ...]], list[tuple[str, str, str]]]


@dataclass
class Transcript:
    init: list[EnvObject] = field(default_factory=list)
    steps: list[Step] = field(default_factory=list)

    def actions(self) -> list[tuple[str, tuple[str, ...]]]:
        return [a for a, _ in self.steps]


def _pairs(forms, what: str) -> list[tuple[str, str]]:
    out = []
    for f in forms:
        f = expect_list(f, what)
        if len(f) != 2:
            raise ParseError(f"{what} must be (NAME VALUE)", *where(f))
        out.append((expect_atom(f[0], "property"), expect_atom(f[1], "value")))
    return out


def parse_transcript(text: str) -> Transcript:
    tr = Transcript()
    seen_init = False
    for form in read_all(text):
        tag = head(form)
        if tag == "init":
            if seen_init or tr.steps:
                raise ParseError("init must appear once, before any step", *where(form))
            seen_init = True
            ids = set()
            for obj in form[1:]:
                if head(obj) != "object" or len(obj) < 2:
                    raise ParseError("expected (object ID (PROP VALUE)*)", *where(obj))
                oid = expect_atom(obj[1], "object id")
                if oid in ids:
                    raise ParseError(f"duplicate object id {oid!r}", *where(obj))
                ids.add(oid)
                props = _pairs(obj[2:], "property")
                if len({p for p, _ in props}) != len(props):
                    raise ParseError(f"duplicate property on {oid}", *where(obj))
                tr.init.append(EnvObject(oid, dict(props)))
        elif tag == "step":
            if len(form) not in (2, 3):
                raise ParseError("expected (step (action ...) (changes ...))", *where(form))
            act = expect_list(form[1], "action")
            if head(act) != "action" or len(act) < 2:
                raise ParseError("expected (action NAME ARG*)", *where(act))
            action = (expect_atom(act[1], "action type"), tuple(expect_atom(x, "argument") for x in act[2:]))
            changes = []
            if len(form) == 3:
                ch = expect_list(form[2], "changes")
                if head(ch) != "changes":
                    raise ParseError("expected (changes ...)", *where(ch))
                seen = set()
                for entry in ch[1:]:
                    entry = expect_list(entry, "object change")
                    if not entry:
                        raise ParseError("empty object change", *where(entry))
                    oid = expect_atom(entry[0], "object id")
                    for prop, value in _pairs(entry[1:], "change"):
                        if (oid, prop) in seen:
                            raise ParseError(f"duplicate change ({oid} {prop}) in one step", *where(entry))
                        seen.add((oid, prop))
                        changes.append((oid, prop, value))
            tr.steps.append((action, changes))
        else:
            raise ParseError("expected (init ...) or (step ...)", *where(form))
    return tr


def check_transcript(tr: Transcript, kb: KnowledgeBase) -> list[str]:
    """Load-time checks against the paired KB; returns error messages."""
    errors = []
    ids = {o.id for o in tr.init}
    for i, ((atype, args), changes) in enumerate(tr.steps, 1):
        sig = kb.signatures.get(atype)
        if sig is None:
            errors.append(f"step {i}: undeclared action type {atype!r}")
        elif sig.kind != "primitive":
            errors.append(f"step {i}: action {atype!r} is not primitive")
        elif sig.arity != len(args):
            errors.append(f"step {i}: {atype} takes {sig.arity} arguments, got {len(args)}")
        for oid, _, _ in changes:
            if oid not in ids:
                errors.append(f"step {i}: change for unknown object {oid!r}")
    return errors


def load_transcript(path) -> Transcript:
    with open(path, encoding="utf-8") as fh:
        return parse_transcript(fh.read())


def serialize_transcript(tr: Transcript) -> str:
    lines = ["(init"]
    for obj in tr.init:
        lines.append("  " + dumps(["object", obj.id, *[[k, v] for k, v in obj.properties.items()]]))
    lines[-1] += ")"
    for (atype, args), changes in tr.steps:
        grouped: dict[str, list] = {}
        for oid, prop, value in changes:
            grouped.setdefault(oid, []).append([prop, value])
        ch = dumps(["changes", *[[oid, *pv] for oid, pv in grouped.items()]])
        lines.append(f"(step {dumps(['action', atype, *args])} {ch})")
    return "\n".join(lines) + "\n"


def serialize_ground_truth(intents) -> str:
    return dumps(["ground-truth", *[["intent", t, *args] for t, args in intents]]) + "\n"


def parse_ground_truth(text: str) -> list[tuple[str, tuple[str, ...]]]:
    forms = read_all(text)
    if len(forms) != 1 or head(forms[0]) != "ground-truth":
        raise ParseError("expected a single (ground-truth ...) form")
    out = []
    for f in forms[0][1:]:
        if head(f) != "intent" or len(f) < 2:
            raise ParseError("expected (intent NAME ARG*)", *where(f))
        out.append((expect_atom(f[1], "intent"), tuple(expect_atom(x, "arg") for x in f[2:])))
    return out


def parse_explanation(text: str) -> list[tuple[str, tuple[str, ...], int, int]]:
    forms = read_all(text)
    if len(forms) != 1 or head(forms[0]) != "explanation":
        raise ParseError("expected a single (explanation ...) form")
    out = []
    for f in forms[0][1:]:
        if head(f) != "intent" or len(f) < 3 or head(f[-1]) != "span":
            raise ParseError("expected (intent NAME ARG* (span START END))", *where(f))
        span = f[-1]
        out.append(
            (
                expect_atom(f[1], "intent"),
                tuple(expect_atom(x, "arg") for x in f[2:-1]),
                int(expect_atom(span[1], "start")),
                int(expect_atom(span[2], "end")),
            )
        )
    return out
