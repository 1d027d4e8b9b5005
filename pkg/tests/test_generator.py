import pytest

from intentrec.engine import explain
from intentrec.generator import GenConfig, GenerationError, gen_demo, gen_demo_of_length, load_world, parse_world
from intentrec.oracle import snapshots, validate_cover
from intentrec.transcript import parse_ground_truth, parse_transcript, serialize_ground_truth, serialize_transcript
from intentrec.worldstate import WorldState
from corpus import demo_for_seed


def test_relocate_seed_one(relocate_kb):
    demo = gen_demo(relocate_kb, GenConfig(seed=1, n_top=1))
    assert [a for (a, _), _ in demo.steps] == ["grasp", "move", "release"]
    ((name, args),) = demo.ground_truth
    assert name == "relocate" and len(args) == 2
    assert explain(relocate_kb, demo.steps, demo.init).as_tuples() == [(name, args, 0, 3)]


def test_zero_intentions(battery_kb):
    demo = gen_demo(battery_kb, GenConfig(seed=5, n_top=0))
    assert demo.steps == [] and demo.ground_truth == [] and demo.init


def test_negative_count_rejected(battery_kb):
    with pytest.raises(GenerationError):
        gen_demo(battery_kb, GenConfig(seed=1, n_top=-1))


def test_deterministic(battery_kb):
    a = gen_demo(battery_kb, GenConfig(seed=9, n_top=3))
    b = gen_demo(battery_kb, GenConfig(seed=9, n_top=3))
    assert serialize_transcript(a.transcript()) == serialize_transcript(b.transcript())
    assert a.ground_truth == b.ground_truth


def test_serialization_round_trip(battery_kb):
    demo = gen_demo(battery_kb, GenConfig(seed=4, n_top=2))
    text = serialize_transcript(demo.transcript())
    again = parse_transcript(text)
    assert again.steps == demo.steps and again.init == demo.init
    assert parse_ground_truth(serialize_ground_truth(demo.ground_truth)) == demo.ground_truth


def test_exact_length(battery_kb):
    for n in (5, 13, 30):
        assert len(gen_demo_of_length(battery_kb, n, seed=2).steps) == n


@pytest.mark.parametrize("seed", range(1, 31))
def test_round_trip_bound(battery_kb, seed):
    n_top, demo = demo_for_seed(battery_kb, seed)
    assert len(demo.ground_truth) == n_top
    expl = explain(battery_kb, demo.steps, demo.init)
    assert len(expl.intents) <= n_top
    assert validate_cover(battery_kb, demo.steps, demo.init, expl)


@pytest.mark.parametrize("seed", range(1, 11))
def test_replay_is_consistent(battery_kb, seed):
    demo = gen_demo(battery_kb, GenConfig(seed=seed, n_top=3))
    ws = WorldState(demo.init)
    for t, (_, ch) in enumerate(demo.steps, start=1):
        ws.apply_changes(t, ch)
    snaps = snapshots(demo.init, [c for _, c in demo.steps])
    for t, snap in enumerate(snaps):
        for oid, props in snap.items():
            for p, v in props.items():
                assert ws.query(oid, p, t) == v


def test_both_swap_variants_occur(battery_kb):
    grasps = set()
    for seed in range(1, 400):
        demo = gen_demo(battery_kb, GenConfig(seed=seed, n_top=1))
        if demo.ground_truth[0][0] == "swap":
            grasps.add([a for (a, _), _ in demo.steps].count("grasp"))
        if grasps == {2, 3}:
            break
    assert grasps == {2, 3}


def test_world_parse_errors():
    with pytest.raises(Exception):
        parse_world("(world (object))")


def test_bundled_world_loads():
    w = load_world()
    assert "gripper" in w.pools and "grasp" in w.sorts
