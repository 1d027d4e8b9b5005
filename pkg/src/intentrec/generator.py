"""Random KB-consistent demonstrations with known top-level intentions.

The generator owns a small world model read from a ``(world ...)`` file:
initial objects, symbol pools, argument sorts for each primitive, and an
effect rule table that forward-simulates what each primitive changes.

World file forms::

    (object ID (PROP VALUE)*)               explicit object
    (kind TYPE COUNT (PROP VALUE)*)          COUNT objects TYPE1..TYPEn; VALUE may be (one-of V*)
    (pool NAME SYM*)                         symbol pool
    (pool NAME (where PROP VALUE))           objects whose PROP equals VALUE
    (pool NAME (with PROP))                  objects that have PROP
    (sorts (PRIMITIVE POOL*)*)               pool for every argument position
    (effect PRIMITIVE RULE*)
      RULE := (set EXPR PROP EXPR) | (toggle EXPR PROP A B)
            | (require EXPR PROP EXPR) | (forbid EXPR PROP EXPR)
      EXPR := $N | SYMBOL | (get EXPR PROP)
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from pathlib import Path

from .kb import KnowledgeBase, Schema
from .sexpr import Atom, ParseError, expect_atom, expect_int, head, read_all, where
from .transcript import Transcript
from .worldstate import EnvObject

FIXTURES = Path(__file__).parent / "fixtures"


class GenerationError(Exception):
    pass


class _Reject(Exception):
    pass


@dataclass
class WorldSpec:
    objects: list = field(default_factory=list)  # EnvObject or kind specs
    kinds: list = field(default_factory=list)
    pools: dict = field(default_factory=dict)
    sorts: dict[str, tuple[str, ...]] = field(default_factory=dict)
    effects: dict[str, list] = field(default_factory=dict)


@dataclass
class GenConfig:
    seed: int = 0
    n_top: int = 1
    max_rejections: int = 100
    world: WorldSpec | None = None


@dataclass
class GeneratedDemo:
    init: list[EnvObject]
    steps: list
    ground_truth: list[tuple[str, tuple[str, ...]]]

    def transcript(self) -> Transcript:
        return Transcript(self.init, self.steps)


def _to_data(node):
    if isinstance(node, Atom):
        return node.text
    return [_to_data(x) for x in node]


def parse_world(text: str) -> WorldSpec:
    forms = read_all(text)
    if len(forms) == 1 and head(forms[0]) == "world":
        forms = forms[0][1:]
    spec = WorldSpec()
    for form in forms:
        tag = head(form)
        if tag == "object":
            oid = expect_atom(form[1], "object id")
            spec.objects.append(EnvObject(oid, {expect_atom(p[0], "prop"): expect_atom(p[1], "value") for p in form[2:]}))
        elif tag == "kind":
            spec.kinds.append(
                (expect_atom(form[1], "type"), expect_int(form[2], "count"), [_to_data(p) for p in form[3:]])
            )
        elif tag == "pool":
            name = expect_atom(form[1], "pool name")
            spec.pools[name] = [_to_data(x) for x in form[2:]]
        elif tag == "sorts":
            for entry in form[1:]:
                spec.sorts[expect_atom(entry[0], "primitive")] = tuple(expect_atom(x, "pool") for x in entry[1:])
        elif tag == "effect":
            spec.effects[expect_atom(form[1], "primitive")] = [_to_data(r) for r in form[2:]]
        else:
            raise ParseError("unknown world form", *where(form))
    return spec


def load_world(path=None) -> WorldSpec:
    path = Path(path) if path else FIXTURES / "battery.world"
    return parse_world(path.read_text(encoding="utf-8"))


def _initial_objects(spec: WorldSpec, rng: random.Random) -> list[EnvObject]:
    objs = [EnvObject(o.id, dict(o.properties)) for o in spec.objects]
    for type_, count, props in spec.kinds:
        for i in range(1, count + 1):
            p = {"type": type_}
            for name, value in props:
                if isinstance(value, list) and value and value[0] == "one-of":
                    value = rng.choice(value[1:])
                p[name] = value
            objs.append(EnvObject(f"{type_}{i}", p))
    return objs


def _sort_table(kb: KnowledgeBase, spec: WorldSpec) -> dict[tuple[str, int], str]:
    """Pool name for each (type, argument position), propagated up from primitive sorts."""
    table = {}
    for prim, pools in spec.sorts.items():
        for i, pool in enumerate(pools):
            table[(prim, i)] = pool
    changed = True
    while changed:
        changed = False
        for s in kb.schemas:
            vs = _var_sorts(s, table)
            for i, p in enumerate(s.cause_params):
                if p in vs and (s.cause_type, i) not in table:
                    table[(s.cause_type, i)] = vs[p]
                    changed = True
    return table


def _var_sorts(schema: Schema, table) -> dict[str, str]:
    out = {}
    for eff in schema.effects:
        for i, t in enumerate(eff.args):
            if t.is_var and t.value not in out and (eff.effect_type, i) in table:
                out[t.value] = table[(eff.effect_type, i)]
    return out


class Generator:
    def __init__(self, kb: KnowledgeBase, spec: WorldSpec, seed: int, max_rejections: int = 100):
        self.kb = kb
        self.spec = spec
        self.rng = random.Random(seed)
        self.max_rejections = max_rejections
        self.init = _initial_objects(spec, self.rng)
        self.env = {o.id: dict(o.properties) for o in self.init}
        self.steps: list = []
        self.ground_truth: list = []
        self.sorts = _sort_table(kb, spec)
        self.var_sorts = {s.schema_id: _var_sorts(s, self.sorts) for s in kb.schemas}
        self.top_types = sorted({s.cause_type for s in kb.schemas})
        for prim in {e.effect_type for s in kb.schemas for e in s.effects if kb.is_primitive(e.effect_type)}:
            if prim not in spec.effects and prim not in spec.sorts:
                raise GenerationError(f"world has no sorts or effect rules for primitive {prim!r}")

    # --- pools ---------------------------------------------------------

    def pool(self, name: str | None) -> list[str]:
        if name is None:
            syms = set(self.env)
            for p in self.spec.pools.values():
                syms.update(x for x in p if isinstance(x, str))
            return sorted(syms)
        entries = self.spec.pools.get(name)
        if entries is None:
            raise GenerationError(f"unknown pool {name!r}")
        out = []
        for e in entries:
            if isinstance(e, str):
                out.append(e)
            elif e[0] == "where":
                out.extend(o for o in sorted(self.env) if self.env[o].get(e[1]) == e[2])
            elif e[0] == "with":
                out.extend(o for o in sorted(self.env) if e[1] in self.env[o])
        return out

    # --- primitive simulation --------------------------------------------

    def _expr(self, expr, args):
        if isinstance(expr, list):
            base = self._expr(expr[1], args)
            return self.env.get(base, {}).get(expr[2])
        if expr.startswith("$"):
            return args[int(expr[1:])]
        return expr

    def _apply(self, prim: str, args: tuple[str, ...]) -> list[tuple[str, str, str]]:
        updates: dict[tuple[str, str], str] = {}
        for rule in self.spec.effects.get(prim, []):
            op = rule[0]
            target = self._expr(rule[1], args)
            if op in ("require", "forbid"):
                actual = self.env.get(target, {}).get(rule[2]) if target is not None else None
                wanted = self._expr(rule[3], args)
                if (actual == wanted) != (op == "require"):
                    raise _Reject(f"{prim} precondition {rule}")
                continue
            if target not in self.env:
                raise _Reject(f"{prim} affects non-object {target!r}")
            if op == "set":
                value = self._expr(rule[3], args)
            elif op == "toggle":
                cur = self.env[target].get(rule[2])
                value = rule[4] if cur == rule[3] else rule[3]
            else:
                raise GenerationError(f"unknown effect rule {op!r}")
            if value is None:
                raise _Reject(f"{prim} produced no value for {rule}")
            updates[(target, rule[2])] = value
        changes = []
        for (obj, prop), value in updates.items():
            if self.env[obj].get(prop) != value:
                changes.append((obj, prop, value))
        for obj, prop, value in changes:
            self.env[obj][prop] = value
        return changes

    def _primitive(self, prim: str, args) -> tuple[str, ...]:
        pools = self.spec.sorts.get(prim, ())
        concrete = tuple(
            a if a is not None else self.rng.choice(self.pool(pools[i] if i < len(pools) else None))
            for i, a in enumerate(args)
        )
        changes = self._apply(prim, concrete)
        self.steps.append(((prim, concrete), changes))
        return concrete

    # --- abstract expansion ------------------------------------------------

    def _lookup(self, obj, prop):
        value = self.env.get(obj, {}).get(prop)
        if value is None:
            raise _Reject(f"no property {prop} on {obj}")
        return value

    def _propagate(self, schema: Schema, b: dict, anchor: str) -> None:
        progress = True
        while progress:
            progress = False
            for atom in schema.constraints:
                if atom.tag != "prop-at" or atom.anchor != anchor:
                    continue
                obj = b.get(atom.obj.value) if atom.obj.is_var else atom.obj.value
                if obj is None:
                    continue
                actual = self._lookup(obj, atom.prop)
                if atom.value.is_var and atom.value.value not in b:
                    b[atom.value.value] = actual
                    progress = True
                elif (b[atom.value.value] if atom.value.is_var else atom.value.value) != actual:
                    raise _Reject(f"{schema!r}: {atom.to_form()}")

    def _candidates(self, schema: Schema, var: str, b: dict) -> list[str]:
        cands = self.pool(self.var_sorts[schema.schema_id].get(var))
        for atom in schema.constraints:
            if atom.tag == "prop-at" and atom.anchor == "start" and atom.obj.is_var and atom.obj.value == var:
                want = b.get(atom.value.value) if atom.value.is_var else atom.value.value
                if want is not None:
                    cands = [c for c in cands if self.env.get(c, {}).get(atom.prop) == want]
        return cands

    def _check_eq(self, schema: Schema, b: dict, final: bool) -> None:
        for atom in schema.constraints:
            if atom.tag not in ("eq", "neq"):
                continue
            left = b.get(atom.left.value) if atom.left.is_var else atom.left.value
            right = b.get(atom.right.value) if atom.right.is_var else atom.right.value
            if left is None or right is None:
                if final:
                    raise _Reject(f"{schema!r}: unbound {atom.to_form()}")
                continue
            if (left == right) != (atom.tag == "eq"):
                raise _Reject(f"{schema!r}: {atom.to_form()}")

    def _solve_and_expand(self, schema: Schema, args) -> tuple[str, ...]:
        b = {p: v for p, v in zip(schema.cause_params, args) if v is not None}
        derived = {a.value.value for a in schema.constraints if a.tag == "prop-at" and a.value.is_var}
        self._propagate(schema, b, "start")
        for var in schema.var_order:
            if var in b or var in derived:
                continue
            cands = self._candidates(schema, var, b)
            if not cands:
                raise _Reject(f"{schema!r}: no candidates for {var}")
            b[var] = self.rng.choice(cands)
            self._propagate(schema, b, "start")
        self._check_eq(schema, b, final=False)

        for eff in schema.effects:
            wanted = tuple((b.get(t.value) if t.is_var else t.value) for t in eff.args)
            got = self._expand(eff.effect_type, wanted)
            for t, v in zip(eff.args, got):
                if t.is_var:
                    if b.setdefault(t.value, v) != v:
                        raise _Reject(f"{schema!r}: {t.value} realized as {v}")
                elif t.value != v:
                    raise _Reject(f"{schema!r}: literal {t.value} realized as {v}")
        self._propagate(schema, b, "end")
        self._check_eq(schema, b, final=True)
        missing = [p for p in schema.cause_params if p not in b]
        if missing:
            raise _Reject(f"{schema!r}: unbound cause parameters {missing}")
        return tuple(b[p] for p in schema.cause_params)

    def _expand(self, type_: str, args) -> tuple[str, ...]:
        if self.kb.is_primitive(type_):
            return self._primitive(type_, args)
        schemas = self.kb.schemas_for_cause(type_)
        if not schemas:
            raise _Reject(f"no schema implements {type_!r}")
        last = schema = None
        for _ in range(self.max_rejections):
            schema = self.rng.choice(schemas)
            env = {k: dict(v) for k, v in self.env.items()}
            n = len(self.steps)
            try:
                return self._solve_and_expand(schema, args)
            except _Reject as exc:
                last = exc
                self.env = env
                del self.steps[n:]
        raise _Reject(f"constraint solving for schema {schema!r} exhausted {self.max_rejections} attempts ({last})")

    def add_intention(self) -> tuple[str, tuple[str, ...]]:
        if not self.top_types:
            raise GenerationError("knowledge base has no abstract intentions with schemas")
        # intentions infeasible in the current state (e.g. closing a closed drawer) fall through to others
        order = list(self.top_types)
        self.rng.shuffle(order)
        errors = []
        for type_ in order:
            try:
                args = self._expand(type_, (None,) * self.kb.signatures[type_].arity)
            except _Reject as exc:
                errors.append(str(exc))
                continue
            self.ground_truth.append((type_, args))
            return type_, args
        raise GenerationError("; ".join(errors))

    def demo(self) -> GeneratedDemo:
        return GeneratedDemo(
            [EnvObject(o.id, dict(o.properties)) for o in self.init], list(self.steps), list(self.ground_truth)
        )


def gen_demo(kb: KnowledgeBase, cfg: GenConfig) -> GeneratedDemo:
    if cfg.n_top < 0:
        raise GenerationError("n_top must be non-negative")
    gen = Generator(kb, cfg.world or load_world(), cfg.seed, cfg.max_rejections)
    for _ in range(cfg.n_top):
        gen.add_intention()
    return gen.demo()


def gen_demo_of_length(kb: KnowledgeBase, length: int, seed: int, world: WorldSpec | None = None,
                       max_rejections: int = 100) -> GeneratedDemo:
    """Append whole intentions until ``length`` steps exist, then cut to exactly ``length``."""
    gen = Generator(kb, world or load_world(), seed, max_rejections)
    while len(gen.steps) < length:
        gen.add_intention()
    demo = gen.demo()
    demo.steps = demo.steps[:length]
    return demo
