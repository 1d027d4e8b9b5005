import pytest
from hypothesis import given, settings, strategies as st

from intentrec.sexpr import ParseError
from intentrec.kb import KBError, parse_kb, schemas_for_first_effect, serialize_kb, validate_kb
from conftest import FIXTURES, XYZ_KB

RELOCATE = (FIXTURES / "relocate.kb").read_text()


def errors(kb):
    return [d for d in validate_kb(kb) if d.severity == "error"]


def test_relocate_index(relocate_kb):
    assert len(relocate_kb.schemas) == 1
    (s,) = relocate_kb.first_effect_index["grasp"]
    assert s.cause_type == "relocate"
    assert schemas_for_first_effect(relocate_kb, "grasp") == (s,)


def test_empty_source():
    kb = parse_kb("")
    assert kb.schemas == () and dict(kb.first_effect_index) == {}


def test_xyz_index(xyz_kb):
    assert [s.cause_type for s in schemas_for_first_effect(xyz_kb, "A")] == ["X", "Z"]
    assert [s.cause_type for s in schemas_for_first_effect(xyz_kb, "C")] == ["Y"]
    assert schemas_for_first_effect(xyz_kb, "B") == ()


def test_self_unit_cycle_is_one_error():
    kb = parse_kb("(abstract X 0) (schema (cause X ()) (vars) (effects (X)))")
    errs = errors(kb)
    assert len(errs) == 1 and "unit cycle" in errs[0].message


def test_battery_and_relocate_validate_clean(battery_kb, relocate_kb):
    assert validate_kb(battery_kb) == []
    assert errors(relocate_kb) == []


def test_unreachable_effect_type_warns():
    kb = parse_kb(
        "(primitive a 0) (abstract frobnicate 0) (abstract top 0)"
        "(schema (cause top ()) (vars) (effects (a) (frobnicate)))"
    )
    diags = validate_kb(kb)
    assert [d.severity for d in diags] == ["warning"]
    assert "frobnicate" in diags[0].message


def test_unbindable_cause_param():
    kb = parse_kb("(primitive a 0) (abstract t 1) (schema (cause t (x)) (vars x) (effects (a)))")
    assert any("unbindable" in d.message for d in errors(kb))


def test_prop_at_value_makes_param_bindable():
    kb = parse_kb(
        "(primitive a 1) (abstract t 2)"
        "(schema (cause t (o l)) (vars o l) (effects (a o)) (constraints (prop-at start o location l)))"
    )
    assert errors(kb) == []


def test_cause_declared_primitive_is_error():
    kb = parse_kb("(primitive a 0) (primitive b 0) (schema (cause b ()) (vars) (effects (a) (a)))")
    assert any("primitive" in d.message for d in errors(kb))


@pytest.mark.parametrize(
    "src, fragment",
    [
        ("(primitive a 0) (primitive a 1)", "duplicate"),
        ("(schema (cause q ()) (vars) (effects (q)))", "undeclared"),
        ("(primitive a 1) (abstract t 0) (schema (cause t ()) (vars) (effects (a x y)))", "arity"),
        ("(primitive a 0) (abstract t 0) (schema (cause t ()) (vars) (effects))", "effect"),
        ("(primitive a 0) (abstract t 1) (schema (cause t (z)) (vars) (effects (a)))", "z"),
        ("(primitive a 0", ""),
    ],
)
def test_malformed_sources_raise_with_position(src, fragment):
    with pytest.raises(ParseError) as info:
        parse_kb(src)
    assert fragment in str(info.value)
    assert info.value.line >= 1 and info.value.col >= 1


def test_error_position_points_at_offender():
    src = "(primitive a 0)\n(primitive b 0)\n   (primitive a 2)\n"
    with pytest.raises(KBError) as info:
        parse_kb(src)
    assert info.value.line == 3


def _cycle_kb(n):
    names = [f"u{i}" for i in range(n)]
    lines = [f"(abstract {x} 0)" for x in names]
    lines += [f"(schema (cause {names[i]} ()) (vars) (effects ({names[(i + 1) % n]})))" for i in range(n)]
    return parse_kb("\n".join(lines))


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_unit_cycles_rejected(n):
    errs = errors(_cycle_kb(n))
    assert len(errs) == 1 and errs[0].message.startswith("unit cycle")


def test_unit_chain_without_cycle_accepted():
    src = "(primitive p 0) (abstract a 0) (abstract b 0)"
    src += "(schema (cause a ()) (vars) (effects (b))) (schema (cause b ()) (vars) (effects (p)))"
    assert errors(parse_kb(src)) == []


@pytest.mark.parametrize("text", [XYZ_KB, RELOCATE, (FIXTURES / "battery.kb").read_text()])
def test_serialize_round_trip(text):
    kb = parse_kb(text)
    again = parse_kb(serialize_kb(kb))
    assert again == kb
    assert serialize_kb(again) == serialize_kb(kb)


@st.composite
def random_kbs(draw):
    prims = [f"p{i}" for i in range(draw(st.integers(1, 4)))]
    abstracts = [f"a{i}" for i in range(draw(st.integers(1, 4)))]
    out = [f"(primitive {p} 0)" for p in prims] + [f"(abstract {a} 0)" for a in abstracts]
    for _ in range(draw(st.integers(0, 8))):
        cause = draw(st.sampled_from(abstracts))
        effects = draw(st.lists(st.sampled_from(prims + abstracts), min_size=1, max_size=4))
        out.append(f"(schema (cause {cause} ()) (vars) (effects {' '.join(f'({e})' for e in effects)}))")
    return "\n".join(out)


@settings(max_examples=60, deadline=None)
@given(random_kbs())
def test_index_matches_first_effects(text):
    kb = parse_kb(text)
    for t, schemas in kb.first_effect_index.items():
        assert [s.schema_id for s in schemas] == sorted(
            s.schema_id for s in kb.schemas if s.effects[0].effect_type == t
        )
    assert sum(len(v) for v in kb.first_effect_index.values()) == len(kb.schemas)
    assert parse_kb(serialize_kb(kb)) == kb
