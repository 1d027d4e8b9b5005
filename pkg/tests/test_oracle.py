import pytest

from intentrec.engine import explain
from intentrec.oracle import (
    Chart,
    OracleError,
    enumerate_covers,
    min_cover_cardinality,
    validate_cover,
)
from intentrec.transcript import load_transcript
from conftest import DEMOS
from corpus import demo_for_seed

ABC = [("A", ()), ("B", ()), ("C", ())]


def names(cover):
    return [i[0] for i in cover.intents]


def test_xyz_covers(xyz_kb):
    covers = enumerate_covers(xyz_kb, ABC)
    abstract_only = sorted(names(c) for c in covers if set(names(c)) <= {"X", "Y", "Z"})
    assert abstract_only == [["X", "Y"], ["Z"]]
    # primitives may stand at top level
    assert sorted(names(c) for c in covers) == [["A", "B", "C"], ["A", "B", "Y"], ["X", "C"], ["X", "Y"], ["Z"]]
    assert min_cover_cardinality(xyz_kb, ABC) == 1


def test_lone_b_only_has_primitive_cover(xyz_kb):
    assert [names(c) for c in enumerate_covers(xyz_kb, [("B", ())])] == [["B"]]


def test_relocate_single_cover(relocate_kb):
    acts = [("grasp", ("blk", "lg")), ("move", ("lg", "shelf")), ("release", ("lg",))]
    covers = [c for c in enumerate_covers(relocate_kb, acts) if c.cardinality == 1]
    assert [c.intents for c in covers] == [(("relocate", ("blk", "shelf"), 0, 3),)]


def test_empty_demo(xyz_kb):
    assert min_cover_cardinality(xyz_kb, []) == 0


def test_limit_flags_truncation(xyz_kb):
    covers = enumerate_covers(xyz_kb, ABC, limit=2)
    assert len(covers) == 2 and covers.truncated
    assert not enumerate_covers(xyz_kb, ABC).truncated


def test_length_bound(xyz_kb):
    with pytest.raises(OracleError):
        Chart(xyz_kb, [("A", ())] * 21)
    assert Chart(xyz_kb, [("A", ())] * 21, max_length=None).min_cardinality() == 21


def test_validate_cover_rejects_gap_and_wrong_args(relocate_kb):
    acts = [("grasp", ("blk", "lg")), ("move", ("lg", "shelf")), ("release", ("lg",))]
    assert validate_cover(relocate_kb, acts, [], [("relocate", ("blk", "shelf"), 0, 3)])
    assert not validate_cover(relocate_kb, acts, [], [("relocate", ("blk", "shelf"), 0, 2)])
    assert not validate_cover(
        relocate_kb, acts, [], [("grasp", ("blk", "lg"), 0, 1), ("release", ("lg",), 2, 3)]
    )
    assert not validate_cover(relocate_kb, acts, [], [("relocate", ("blk", "table"), 0, 3)])


@pytest.mark.parametrize("path", DEMOS, ids=lambda p: p.stem)
def test_engine_matches_oracle_on_fixtures(battery_kb, path):
    tr = load_transcript(path)
    expl = explain(battery_kb, tr.steps, tr.init)
    chart = Chart(battery_kb, tr.actions(), tr.init, [c for _, c in tr.steps], max_length=None)
    assert chart.min_cardinality() == len(expl.intents)
    assert chart.accepts(expl.as_tuples())


@pytest.mark.parametrize("seed", range(1, 41))
def test_engine_appears_among_minimal_covers(battery_kb, seed):
    _, demo = demo_for_seed(battery_kb, seed)
    expl = explain(battery_kb, demo.steps, demo.init)
    covers = enumerate_covers(battery_kb, demo.steps, demo.init, limit=100_000)
    best = min(c.cardinality for c in covers)
    assert len(expl.intents) == best
    if not covers.truncated:
        assert tuple(expl.as_tuples()) in {c.intents for c in covers}
