"""HTTP wrapper around the core package.

Sessions live in process memory keyed by a random id; nothing is persisted.
"""

import uuid

from fastapi import FastAPI, HTTPException

from ..engine import InferenceError, Session
from ..generator import GenConfig, GenerationError, gen_demo, load_world, parse_world
from ..kb import parse_kb, validate_kb
from ..oracle import Chart, OracleError
from ..sexpr import ParseError
from ..transcript import check_transcript, parse_transcript, serialize_ground_truth, serialize_transcript
from . import schemas

app = FastAPI(title="intentrec")

_sessions: dict[str, Session] = {}


def _intents(tuples):
    return [schemas.Intent(name=t, args=list(a), start=s, end=e) for t, a, s, e in tuples]


def _kb(text):
    try:
        kb = parse_kb(text)
    except ParseError as exc:
        raise HTTPException(422, f"knowledge base: {exc}")
    errors = [d for d in validate_kb(kb) if d.severity == "error"]
    if errors:
        raise HTTPException(422, "; ".join(d.message for d in errors))
    return kb


def _demo(text, kb):
    try:
        tr = parse_transcript(text)
    except ParseError as exc:
        raise HTTPException(422, f"transcript: {exc}")
    problems = check_transcript(tr, kb)
    if problems:
        raise HTTPException(422, "; ".join(problems))
    return tr


def _run(kb, tr):
    session = Session(kb, tr.init)
    try:
        for (atype, args), changes in tr.steps:
            session.push_step(atype, args, changes)
    except InferenceError as exc:
        raise HTTPException(409, str(exc))
    return session.finish()


@app.get("/health")
def health():
    return {"status": "ok"}


@app.post("/kb/validate", response_model=schemas.ValidateResponse)
def validate(req: schemas.KBRequest):
    try:
        kb = parse_kb(req.kb)
    except ParseError as exc:
        raise HTTPException(422, str(exc))
    diags = validate_kb(kb)
    return schemas.ValidateResponse(
        ok=not any(d.severity == "error" for d in diags),
        diagnostics=[schemas.DiagnosticOut(severity=d.severity, message=d.message, schema_id=d.schema_id) for d in diags],
    )


@app.post("/explain", response_model=schemas.ExplainResponse)
def explain(req: schemas.ExplainRequest):
    kb = _kb(req.kb)
    tr = _demo(req.demo, kb)
    expl = _run(kb, tr)
    out = schemas.ExplainResponse(
        intents=_intents(expl.as_tuples()), sexp=expl.to_sexp(), cardinality=len(expl.intents)
    )
    if req.check:
        chart = Chart(kb, tr.actions(), tr.init, [c for _, c in tr.steps], max_length=None)
        out.oracle_min = chart.min_cardinality()
        out.valid = chart.accepts(expl.as_tuples())
    return out


@app.post("/oracle", response_model=schemas.OracleResponse)
def oracle(req: schemas.OracleRequest):
    kb = _kb(req.kb)
    tr = _demo(req.demo, kb)
    try:
        chart = Chart(kb, tr.actions(), tr.init, [c for _, c in tr.steps], max_length=req.max_length)
    except OracleError as exc:
        raise HTTPException(422, str(exc))
    expl = _run(kb, tr)
    covers = chart.covers(req.limit)
    return schemas.OracleResponse(
        actions=chart.n,
        covers=[_intents(c.intents) for c in covers],
        truncated=covers.truncated,
        min_cardinality=chart.min_cardinality(),
        engine_cardinality=len(expl.intents),
        valid=chart.accepts(expl.as_tuples()),
    )


@app.post("/generate", response_model=schemas.GenResponse)
def generate(req: schemas.GenRequest):
    kb = _kb(req.kb)
    try:
        world = parse_world(req.world) if req.world else load_world()
    except ParseError as exc:
        raise HTTPException(422, f"world: {exc}")
    try:
        demo = gen_demo(kb, GenConfig(req.seed, req.n_top, req.max_rejections, world))
    except GenerationError as exc:
        raise HTTPException(409, str(exc))
    return schemas.GenResponse(
        demo=serialize_transcript(demo.transcript()),
        ground_truth=serialize_ground_truth(demo.ground_truth),
        steps=len(demo.steps),
    )


@app.post("/sessions", response_model=schemas.SessionInfo, status_code=201)
def create_session(req: schemas.SessionCreate):
    kb = _kb(req.kb)
    tr = _demo(req.init, kb)
    if tr.steps:
        raise HTTPException(422, "session init must not contain steps")
    sid = uuid.uuid4().hex
    _sessions[sid] = Session(kb, tr.init)
    return schemas.SessionInfo(session_id=sid, steps=0)


def _session(sid):
    try:
        return _sessions[sid]
    except KeyError:
        raise HTTPException(404, f"no session {sid}")


@app.post("/sessions/{sid}/steps", response_model=schemas.SessionInfo)
def push_step(sid: str, step: schemas.StepIn):
    session = _session(sid)
    try:
        session.push_step(step.action, step.args, step.changes)
    except InferenceError as exc:
        raise HTTPException(409, str(exc))
    return schemas.SessionInfo(session_id=sid, steps=session.steps)


@app.get("/sessions/{sid}/explanation", response_model=schemas.ExplainResponse)
def current_explanation(sid: str):
    expl = _session(sid).explanation()
    return schemas.ExplainResponse(
        intents=_intents(expl.as_tuples()), sexp=expl.to_sexp(), cardinality=len(expl.intents)
    )


@app.delete("/sessions/{sid}", status_code=204)
def close_session(sid: str):
    _session(sid)
    del _sessions[sid]
