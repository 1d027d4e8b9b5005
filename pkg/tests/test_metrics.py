import csv

import pytest

from intentrec.engine import Session
from intentrec.metrics import (
    MemoryEvent,
    NullRecorder,
    Recorder,
    export_csv,
    export_lifespans_csv,
    lifespans,
    linear_fit,
    living_curve,
    peak_ratio,
)


def replay(rec, spare_demo, kb):
    s = Session(kb, spare_demo.init, rec)
    for (t, args), ch in spare_demo.steps:
        s.push_step(t, args, ch)
    s.finish()


def test_lifespan_is_last_access_minus_birth():
    rec = Recorder()
    h = rec.create("hypothesis")
    rec.create("binding")
    rec.access(h)
    rec.access(h)
    (span,) = [s for s in lifespans(rec.events) if s.node_id == h]
    assert (span.birth, span.death) == (0, 3)


def test_living_window():
    rec = Recorder()
    rec.record(MemoryEvent(0, "create", 1, "timepoint"))
    rec.record(MemoryEvent(10, "access", 1, "timepoint"))
    curve = dict((t, living) for t, living, _ in living_curve(rec.events))
    assert all(curve[t] == 1 for t in range(0, 11))
    assert curve[11] == 0


def test_record_rules():
    rec = Recorder()
    with pytest.raises(ValueError):
        rec.record(MemoryEvent(0, "access", 5, "binding"))
    rec.record(MemoryEvent(3, "create", 5, "binding"))
    with pytest.raises(ValueError):
        rec.record(MemoryEvent(3, "access", 5, "binding"))
    with pytest.raises(ValueError):
        rec.create("bogus")


def test_null_recorder_is_inert():
    rec = NullRecorder()
    assert rec.create("hypothesis") == 0 and rec.access(0) is None and not rec.enabled


def test_conservation(battery_kb, spare_demo):
    rec = Recorder()
    replay(rec, spare_demo, battery_kb)
    curve = living_curve(rec.events)
    creates = sum(1 for e in rec.events if e.kind == "create")
    assert curve[-1] == (curve[-1][0], 0, creates)
    assert sum(rec.created_counts().values()) == creates
    assert all(b <= c for _, b, c in curve)
    ticks = [e.tick for e in rec.events]
    assert ticks == list(range(len(ticks)))


def test_lifespan_shapes(battery_kb, spare_demo):
    rec = Recorder()
    replay(rec, spare_demo, battery_kb)
    spans = lifespans(rec.events)
    horizon = rec.events[-1].tick
    t0 = next(s for s in spans if s.node_kind == "timepoint")
    assert t0.death - t0.birth > horizon * 0.9
    hyps = sorted(s.death - s.birth for s in spans if s.node_kind == "hypothesis")
    assert hyps[len(hyps) // 2] < horizon * 0.1
    assert peak_ratio(rec.events) < 0.35


def test_instrumentation_does_not_change_output(battery_kb, spare_demo):
    def run(rec):
        s = Session(battery_kb, spare_demo.init, rec)
        for (t, args), ch in spare_demo.steps:
            s.push_step(t, args, ch)
        return s.finish().to_sexp()

    assert run(None) == run(Recorder())


def test_csv_outputs(tmp_path):
    export_csv([], tmp_path / "empty.csv")
    assert (tmp_path / "empty.csv").read_text() == "tick,living,total\n"
    rec = Recorder()
    a = rec.create("action")
    rec.create("timepoint")
    rec.access(a)
    export_lifespans_csv(lifespans(rec.events), tmp_path / "l.csv")
    export_csv(lifespans(rec.events), tmp_path / "l2.csv")
    rows = list(csv.reader(open(tmp_path / "l.csv")))
    assert rows[0] == ["nodeId", "kind", "birth", "death"] and len(rows) == 3
    assert (tmp_path / "l.csv").read_text() == (tmp_path / "l2.csv").read_text()
    export_csv(living_curve(rec.events), tmp_path / "c.csv")
    assert len(list(csv.reader(open(tmp_path / "c.csv")))) == 1 + 4


def test_linear_fit():
    slope, intercept, r2 = linear_fit([1, 2, 3, 4], [3, 5, 7, 9])
    assert slope == pytest.approx(2) and intercept == pytest.approx(1) and r2 == pytest.approx(1)
