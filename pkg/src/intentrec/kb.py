"""Cause-effect knowledge base: DSL parsing, validation and first-effect indexing."""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

from .sexpr import Atom, ParseError, dumps, expect_atom, expect_int, expect_list, head, read_all, where

PRIMITIVE = "primitive"
ABSTRACT = "abstract"


class KBError(ParseError):
    """Semantic error found while loading a knowledge base."""


@dataclass(frozen=True)
class TypeSignature:
    name: str
    arity: int
    kind: str


@dataclass(frozen=True)
class Term:
    value: str
    is_var: bool

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class EffectTemplate:
    effect_type: str
    args: tuple[Term, ...]


@dataclass(frozen=True)
class ConstraintAtom:
    """``eq``/``neq`` over two terms, or ``prop-at`` anchored at start/end."""

    tag: str
    left: Term | None = None
    right: Term | None = None
    anchor: str | None = None
    obj: Term | None = None
    prop: str | None = None
    value: Term | None = None

    def terms(self) -> tuple[Term, ...]:
        if self.tag == "prop-at":
            return (self.obj, self.value)
        return (self.left, self.right)

    def to_form(self) -> list:
        if self.tag == "prop-at":
            return ["prop-at", self.anchor, self.obj.value, self.prop, self.value.value]
        return [self.tag, self.left.value, self.right.value]


@dataclass(frozen=True, eq=False)
class Schema:
    cause_type: str
    cause_params: tuple[str, ...]
    vars: frozenset[str]
    effects: tuple[EffectTemplate, ...]
    constraints: tuple[ConstraintAtom, ...]
    schema_id: int
    var_order: tuple[str, ...] = ()
    line: int | None = None

    def key(self):
        """Structural identity, used for round-trip comparison."""
        return (self.cause_type, self.cause_params, self.var_order, self.effects, self.constraints, self.schema_id)

    def __repr__(self) -> str:
        return f"<Schema #{self.schema_id} {self.cause_type}{list(self.cause_params)}>"


@dataclass(frozen=True, eq=False)
class KnowledgeBase:
    signatures: Mapping[str, TypeSignature]
    schemas: tuple[Schema, ...]
    first_effect_index: Mapping[str, tuple[Schema, ...]] = field(default_factory=dict)

    def __eq__(self, other) -> bool:
        if not isinstance(other, KnowledgeBase):
            return NotImplemented
        return (
            dict(self.signatures) == dict(other.signatures)
            and [s.key() for s in self.schemas] == [s.key() for s in other.schemas]
            and {k: [s.schema_id for s in v] for k, v in self.first_effect_index.items()}
            == {k: [s.schema_id for s in v] for k, v in other.first_effect_index.items()}
        )

    __hash__ = object.__hash__

    def is_primitive(self, name: str) -> bool:
        sig = self.signatures.get(name)
        return sig is not None and sig.kind == PRIMITIVE

    def schemas_for_cause(self, name: str) -> list[Schema]:
        return [s for s in self.schemas if s.cause_type == name]


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    message: str
    schema_id: int | None = None

    def __str__(self) -> str:
        where_ = f" (schema {self.schema_id})" if self.schema_id is not None else ""
        return f"{self.severity}: {self.message}{where_}"


def build_kb(signatures: dict[str, TypeSignature], schemas: list[Schema]) -> KnowledgeBase:
    index: dict[str, list[Schema]] = {}
    for s in schemas:
        index.setdefault(s.effects[0].effect_type, []).append(s)
    return KnowledgeBase(
        signatures=MappingProxyType(dict(signatures)),
        schemas=tuple(schemas),
        first_effect_index=MappingProxyType({k: tuple(v) for k, v in index.items()}),
    )


def schemas_for_first_effect(kb: KnowledgeBase, action_type: str) -> tuple[Schema, ...]:
    return kb.first_effect_index.get(action_type, ())


# --- parsing -------------------------------------------------------------


def _term(node, vars_: set[str]) -> Term:
    name = expect_atom(node, "term")
    return Term(name, name in vars_)


def _parse_schema(form, schema_id: int, sigs: dict[str, TypeSignature]) -> Schema:
    parts = {}
    for sub in form[1:]:
        tag = head(sub)
        if tag not in ("cause", "vars", "effects", "constraints"):
            raise KBError(f"unexpected schema clause {dumps_node(sub)}", *where(sub))
        if tag in parts:
            raise KBError(f"duplicate '{tag}' clause", *where(sub))
        parts[tag] = sub
    for required in ("cause", "vars", "effects"):
        if required not in parts:
            raise KBError(f"schema missing '{required}' clause", *where(form))

    cause = parts["cause"]
    if len(cause) != 3:
        raise KBError("cause must be (cause NAME (PARAM*))", *where(cause))
    cause_type = expect_atom(cause[1], "cause type")
    params = tuple(expect_atom(p, "cause parameter") for p in expect_list(cause[2], "cause parameters"))

    var_order = tuple(expect_atom(v, "variable") for v in parts["vars"][1:])
    vars_ = set(var_order)
    if len(vars_) != len(var_order):
        raise KBError("duplicate variable in vars", *where(parts["vars"]))

    sig = sigs.get(cause_type)
    if sig is None:
        raise KBError(f"undeclared cause type {cause_type!r}", *where(cause[1]))
    if sig.arity != len(params):
        raise KBError(
            f"arity mismatch: {cause_type} declared with {sig.arity} parameters, cause lists {len(params)}",
            *where(cause),
        )
    for p, node in zip(params, cause[2]):
        if p not in vars_:
            raise KBError(f"undeclared variable {p!r} in cause parameters", *where(node))

    effects = []
    for eff in parts["effects"][1:]:
        eff = expect_list(eff, "effect")
        if not eff:
            raise KBError("empty effect", *where(eff))
        etype = expect_atom(eff[0], "effect type")
        esig = sigs.get(etype)
        if esig is None:
            raise KBError(f"undeclared effect type {etype!r}", *where(eff[0]))
        if esig.arity != len(eff) - 1:
            raise KBError(
                f"arity mismatch: {etype} takes {esig.arity} arguments, effect gives {len(eff) - 1}",
                *where(eff),
            )
        effects.append(EffectTemplate(etype, tuple(_term(a, vars_) for a in eff[1:])))
    if not effects:
        raise KBError("schema has an empty effects list", *where(parts["effects"]))

    constraints = []
    for atom in parts.get("constraints", [None])[1:]:
        tag = head(atom)
        if tag in ("eq", "neq"):
            if len(atom) != 3:
                raise KBError(f"{tag} takes two terms", *where(atom))
            constraints.append(ConstraintAtom(tag, left=_term(atom[1], vars_), right=_term(atom[2], vars_)))
        elif tag == "prop-at":
            if len(atom) != 5:
                raise KBError("prop-at takes (prop-at start|end OBJ PROP VALUE)", *where(atom))
            anchor = expect_atom(atom[1], "anchor")
            if anchor not in ("start", "end"):
                raise KBError(f"prop-at anchor must be start or end, got {anchor!r}", *where(atom[1]))
            # the property slot is always a literal, even if it shares a variable's name
            prop = expect_atom(atom[3], "property name")
            constraints.append(
                ConstraintAtom(
                    "prop-at", anchor=anchor, obj=_term(atom[2], vars_), prop=prop, value=_term(atom[4], vars_)
                )
            )
        else:
            raise KBError(f"unknown constraint {dumps_node(atom)}", *where(atom))

    return Schema(
        cause_type=cause_type,
        cause_params=params,
        vars=frozenset(vars_),
        effects=tuple(effects),
        constraints=tuple(constraints),
        schema_id=schema_id,
        var_order=var_order,
        line=form.line,
    )


def dumps_node(node) -> str:
    if isinstance(node, Atom):
        return node.text
    return "(" + " ".join(dumps_node(x) for x in node) + ")"


def parse_kb(text: str) -> KnowledgeBase:
    """Parse KB source text. Raises :class:`KBError`/:class:`ParseError` with line/column."""
    sigs: dict[str, TypeSignature] = {}
    schema_forms = []
    for form in read_all(text):
        tag = head(form)
        if tag in (PRIMITIVE, ABSTRACT):
            if len(form) != 3:
                raise KBError(f"({tag} NAME ARITY) expected", *where(form))
            name = expect_atom(form[1], "type name")
            arity = expect_int(form[2], "arity")
            if arity < 0:
                raise KBError("arity must be non-negative", *where(form[2]))
            if name in sigs:
                raise KBError(f"duplicate signature {name!r}", *where(form))
            sigs[name] = TypeSignature(name, arity, tag)
        elif tag == "schema":
            schema_forms.append(form)
        else:
            raise KBError(f"unknown declaration {dumps_node(form)[:40]}", *where(form))
    # signatures may follow the schemas that use them
    schemas = [_parse_schema(f, i, sigs) for i, f in enumerate(schema_forms)]
    return build_kb(sigs, schemas)


def load_kb(path) -> KnowledgeBase:
    with open(path, encoding="utf-8") as fh:
        return parse_kb(fh.read())


def serialize_kb(kb: KnowledgeBase) -> str:
    lines = [dumps([sig.kind, sig.name, sig.arity]) for sig in kb.signatures.values()]
    for s in kb.schemas:
        eff = " ".join(dumps([e.effect_type, *[t.value for t in e.args]]) for e in s.effects)
        out = (
            f"(schema (cause {s.cause_type} {dumps(list(s.cause_params))})"
            f" (vars{''.join(' ' + v for v in s.var_order)})"
            f"\n  (effects {eff})"
        )
        if s.constraints:
            out += "\n  (constraints " + " ".join(dumps(c.to_form()) for c in s.constraints) + ")"
        lines.append(out + ")")
    return "\n".join(lines) + "\n"


# --- validation ----------------------------------------------------------


def _unit_cycles(kb: KnowledgeBase) -> list[list[str]]:
    graph: dict[str, set[str]] = {}
    for s in kb.schemas:
        if len(s.effects) == 1:
            graph.setdefault(s.cause_type, set()).add(s.effects[0].effect_type)

    # Tarjan's SCC; a component is a cycle if it has >1 node or a self-loop
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    cycles = []
    counter = 0

    def visit(v: str) -> None:
        nonlocal counter
        index[v] = low[v] = counter
        counter += 1
        stack.append(v)
        on_stack.add(v)
        for w in sorted(graph.get(v, ())):
            if w not in index:
                visit(w)
                low[v] = min(low[v], low[w])
            elif w in on_stack:
                low[v] = min(low[v], index[w])
        if low[v] == index[v]:
            comp = []
            while True:
                w = stack.pop()
                on_stack.discard(w)
                comp.append(w)
                if w == v:
                    break
            if len(comp) > 1 or v in graph.get(v, ()):
                cycles.append(sorted(comp))

    for v in sorted(graph):
        if v not in index:
            visit(v)
    return cycles


def validate_kb(kb: KnowledgeBase) -> list[Diagnostic]:
    diags: list[Diagnostic] = []
    for cyc in _unit_cycles(kb):
        members = set(cyc)
        sid = min(
            s.schema_id
            for s in kb.schemas
            if len(s.effects) == 1 and s.cause_type in members and s.effects[0].effect_type in members
        )
        diags.append(Diagnostic("error", "unit cycle: " + " -> ".join(cyc + [cyc[0]]), sid))

    caused = {s.cause_type for s in kb.schemas}
    for s in kb.schemas:
        sig = kb.signatures[s.cause_type]
        if sig.kind != ABSTRACT:
            diags.append(Diagnostic("error", f"cause {s.cause_type} is declared primitive", s.schema_id))
        if sig.arity != len(s.cause_params):
            diags.append(Diagnostic("error", f"arity mismatch for cause {s.cause_type}", s.schema_id))
        bindable = {t.value for e in s.effects for t in e.args if t.is_var}
        bindable |= {c.value.value for c in s.constraints if c.tag == "prop-at" and c.value.is_var}
        bindable |= {c.obj.value for c in s.constraints if c.tag == "prop-at" and c.obj.is_var}
        for p in s.cause_params:
            if p not in bindable:
                diags.append(Diagnostic("error", f"unbindable cause parameter {p!r}", s.schema_id))

    warned = set()
    for s in kb.schemas:
        for e in s.effects:
            t = e.effect_type
            if t in warned or kb.is_primitive(t) or t in caused:
                continue
            warned.add(t)
            diags.append(
                Diagnostic("warning", f"effect type {t!r} is neither primitive nor caused by any schema", s.schema_id)
            )
    return diags
