import random

import pytest

from intentrec.metrics import Recorder
from intentrec.oracle import snapshots
from intentrec.worldstate import EnvObject, WorldError, apply_changes, init_env, query


def fig4_world():
    ws = init_env(
        [
            EnvObject("drive1", {"type": "drive", "location": "loc1"}),
            EnvObject("switch1", {"type": "switch", "state": "off"}),
        ]
    )
    c1 = apply_changes(ws, 1, [("drive1", "location", "slot1")])
    c2 = apply_changes(ws, 2, [("switch1", "state", "on")])
    return ws, c1, c2


def test_initial_query():
    ws = init_env([EnvObject("drive1", {"type": "drive", "location": "loc1"})])
    assert query(ws, "drive1", "location", 0) == "loc1"


def test_empty_and_duplicate_env():
    assert init_env([]).initial == {}
    with pytest.raises(WorldError):
        init_env([EnvObject("drive1"), EnvObject("drive1")])


def test_change_chains():
    ws, c1, c2 = fig4_world()
    assert c1.entries["drive1"].prev_same_object is None
    assert c2.entries["switch1"].prev_same_object is None
    assert ws.chain("drive1") == [c1.entries["drive1"]]


def test_point_in_time_queries():
    ws, _, _ = fig4_world()
    assert query(ws, "drive1", "location", 0) == "loc1"
    assert query(ws, "drive1", "location", 1) == "slot1"
    assert query(ws, "drive1", "location", 2) == "slot1"
    assert query(ws, "switch1", "state", 1) == "off"
    assert query(ws, "switch1", "state", 2) == "on"


def test_empty_change_record():
    ws, _, _ = fig4_world()
    rec = apply_changes(ws, 3, [])
    assert rec.entries == {} and rec.triples() == []


@pytest.mark.parametrize(
    "changes",
    [[("ghost", "state", "on")], [("drive1", "location", "a"), ("drive1", "location", "b")]],
)
def test_bad_changes_rejected(changes):
    ws, _, _ = fig4_world()
    with pytest.raises(WorldError):
        apply_changes(ws, 3, changes)


def test_time_must_advance():
    ws, _, _ = fig4_world()
    with pytest.raises(WorldError):
        apply_changes(ws, 2, [])


def test_unknown_lookups():
    ws, _, _ = fig4_world()
    with pytest.raises(WorldError):
        query(ws, "ghost", "state", 0)
    with pytest.raises(WorldError):
        query(ws, "drive1", "colour", 2)


def random_history(rng, n_objects=8, n_props=3, n_steps=200):
    objs = [EnvObject(f"o{i}", {f"p{j}": f"v{rng.randrange(5)}" for j in range(n_props)}) for i in range(n_objects)]
    steps = []
    for _ in range(n_steps):
        k = rng.randrange(4)
        chosen = rng.sample([(o.id, f"p{j}") for o in objs for j in range(n_props)], k)
        steps.append([(o, p, f"v{rng.randrange(5)}") for o, p in chosen])
    return objs, steps


def test_random_probes_match_replay():
    rng = random.Random(7)
    objs, steps = random_history(rng)
    ws = init_env(objs)
    for t, ch in enumerate(steps, start=1):
        apply_changes(ws, t, ch)
    snaps = snapshots(objs, steps)
    for _ in range(2000):
        t = rng.randrange(len(steps) + 1)
        o = rng.choice(objs).id
        p = f"p{rng.randrange(3)}"
        assert query(ws, o, p, t) == snaps[t][o][p]


def test_sparse_changes_across_gaps():
    objs = [EnvObject("a", {"x": "0"})]
    ws = init_env(objs)
    for t in range(1, 50):
        apply_changes(ws, t, [("a", "x", str(t))] if t % 17 == 0 else [])
    assert [query(ws, "a", "x", t) for t in (0, 16, 17, 33, 34, 49)] == ["0", "0", "17", "17", "34", "34"]


def test_chains_strictly_decrease():
    rng = random.Random(3)
    objs, steps = random_history(rng, n_steps=60)
    ws = init_env(objs)
    for t, ch in enumerate(steps, start=1):
        apply_changes(ws, t, ch)
    for o in objs:
        times = [d.time_index for d in ws.chain(o.id)]
        assert times == sorted(times, reverse=True) and len(set(times)) == len(times)


def test_change_accounting():
    rec = Recorder()
    ws = init_env([EnvObject("a", {"x": "0", "y": "0"})], rec)
    apply_changes(ws, 1, [("a", "x", "1"), ("a", "y", "1")])
    apply_changes(ws, 2, [("a", "x", "2")])
    counts = rec.created_counts()
    assert counts["change-entry"] == 3
    assert counts["chain-link"] == 1
