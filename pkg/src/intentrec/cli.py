"""Command-line front end.

Exit codes: 0 ok, 1 usage, 2 parse/validation error, 3 inference or
generation error, 4 ``--check`` mismatch.
"""

from __future__ import annotations

import argparse
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import metrics
from .engine import InferenceError, Session
from .generator import GenConfig, GenerationError, gen_demo, gen_demo_of_length, load_world
from .kb import load_kb, validate_kb
from .oracle import Chart, OracleError
from .sexpr import ParseError
from .transcript import (
    check_transcript,
    load_transcript,
    serialize_ground_truth,
    serialize_transcript,
)

EXIT_USAGE, EXIT_INPUT, EXIT_INFERENCE, EXIT_MISMATCH = 1, 2, 3, 4


class CLIError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise CLIError(EXIT_USAGE, f"{self.prog}: error: {message}")


def _load_kb_checked(path):
    try:
        kb = load_kb(path)
    except (OSError, ParseError) as exc:
        raise CLIError(EXIT_INPUT, f"{path}: {exc}") from None
    diags = validate_kb(kb)
    errors = [d for d in diags if d.severity == "error"]
    for d in diags:
        print(f"{path}: {d}", file=sys.stderr)
    if errors:
        raise CLIError(EXIT_INPUT, f"{path}: knowledge base has {len(errors)} error(s)")
    return kb


def _load_demo_checked(path, kb):
    try:
        tr = load_transcript(path)
    except (OSError, ParseError) as exc:
        raise CLIError(EXIT_INPUT, f"{path}: {exc}") from None
    problems = check_transcript(tr, kb)
    if problems:
        raise CLIError(EXIT_INPUT, "\n".join(f"{path}: {p}" for p in problems))
    return tr


def _run(kb, tr, recorder=None):
    session = Session(kb, tr.init, recorder)
    try:
        for (atype, args), changes in tr.steps:
            session.push_step(atype, args, changes)
        return session.finish()
    except InferenceError as exc:
        raise CLIError(EXIT_INFERENCE, f"inference error: {exc}") from None


def _write_metrics(recorder, directory: Path, stem: str = "") -> None:
    directory.mkdir(parents=True, exist_ok=True)
    try:
        metrics.export_csv(metrics.living_curve(recorder.events), directory / f"{stem}living.csv")
        metrics.export_lifespans_csv(metrics.lifespans(recorder.events), directory / f"{stem}lifespans.csv")
    except OSError as exc:
        raise CLIError(EXIT_INPUT, f"cannot write metrics: {exc}") from None


def cmd_explain(args) -> int:
    kb = _load_kb_checked(args.kb)
    tr = _load_demo_checked(args.demo, kb)
    recorder = metrics.Recorder() if args.metrics else None
    expl = _run(kb, tr, recorder)
    sys.stdout.write(expl.to_sexp() + "\n")
    if args.metrics:
        _write_metrics(recorder, Path(args.metrics))
    if args.check:
        chart = Chart(kb, tr.actions(), tr.init, [c for _, c in tr.steps], max_length=None)
        best = chart.min_cardinality()
        valid = chart.accepts(expl.as_tuples())
        if not valid or best != len(expl.intents):
            raise CLIError(
                EXIT_MISMATCH,
                f"check failed: engine cardinality {len(expl.intents)}, oracle minimum {best}, cover valid {valid}",
            )
        print(f"check ok: cardinality {best}", file=sys.stderr)
    return 0


def cmd_validate_kb(args) -> int:
    _load_kb_checked(args.kb)
    print("ok")
    return 0


def cmd_oracle_check(args) -> int:
    kb = _load_kb_checked(args.kb)
    tr = _load_demo_checked(args.demo, kb)
    try:
        chart = Chart(kb, tr.actions(), tr.init, [c for _, c in tr.steps], max_length=args.max_length)
    except OracleError as exc:
        raise CLIError(EXIT_INFERENCE, f"oracle error: {exc}") from None
    expl = _run(kb, tr)
    covers = chart.covers(args.limit)
    best = chart.min_cardinality()
    valid = chart.accepts(expl.as_tuples())
    shown_in = any(c.intents == tuple(expl.as_tuples()) for c in covers)
    print(
        f"(oracle-check (actions {chart.n}) (covers {len(covers)}{'+' if covers.truncated else ''})"
        f" (min-cardinality {best}) (engine-cardinality {len(expl.intents)})"
        f" (valid {'yes' if valid else 'no'}) (enumerated {'yes' if shown_in else 'no'}))"
    )
    if best != len(expl.intents) or not valid:
        return EXIT_MISMATCH
    return 0


def cmd_gen_demo(args) -> int:
    kb = _load_kb_checked(args.kb)
    try:
        world = load_world(args.world)
    except (OSError, ParseError) as exc:
        raise CLIError(EXIT_INPUT, f"world: {exc}") from None
    try:
        demo = gen_demo(kb, GenConfig(args.seed, args.n_top, args.max_rejections, world))
    except GenerationError as exc:
        raise CLIError(EXIT_INFERENCE, f"generation failed: {exc}") from None
    out = Path(args.out)
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(serialize_transcript(demo.transcript()), encoding="utf-8")
        out.with_suffix(".truth").write_text(serialize_ground_truth(demo.ground_truth), encoding="utf-8")
    except OSError as exc:
        raise CLIError(EXIT_INPUT, f"cannot write output: {exc}") from None
    print(f"wrote {out} ({len(demo.steps)} steps, {len(demo.ground_truth)} intentions)")
    return 0


def bench_one(kb_path: str, world_path, length: int, seed: int):
    kb = load_kb(kb_path)
    demo = gen_demo_of_length(kb, length, seed, load_world(world_path))
    recorder = metrics.Recorder()
    session = Session(kb, demo.init, recorder)
    started = time.perf_counter()
    for (atype, args), changes in demo.steps:
        session.push_step(atype, args, changes)
    session.finish()
    elapsed = time.perf_counter() - started
    return length, seed, recorder.events, elapsed


def cmd_bench(args) -> int:
    _load_kb_checked(args.kb)
    if args.step <= 0 or args.min > args.max or args.min < 1:
        raise CLIError(EXIT_USAGE, "need 1 <= --min <= --max and --step > 0")
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CLIError(EXIT_INPUT, f"cannot create {out}: {exc}") from None
    jobs = [(L, args.seed + k) for L in range(args.min, args.max + 1, args.step) for k in range(args.seeds)]
    try:
        if args.jobs > 1:
            with ProcessPoolExecutor(args.jobs) as pool:
                results = list(
                    pool.map(bench_one, *zip(*[(args.kb, args.world, L, s) for L, s in jobs]))
                )
        else:
            results = [bench_one(args.kb, args.world, L, s) for L, s in jobs]
    except (GenerationError, InferenceError) as exc:
        raise CLIError(EXIT_INFERENCE, f"bench run failed: {exc}") from None

    header = "length,seed,totalCreated,peakLiving,ratio,pass"
    if args.timing:
        header += ",wallTime"
    rows = [header]
    xs, ys = [], []
    for length, seed, events, elapsed in results:
        curve = metrics.living_curve(events)
        total = curve[-1][2] if curve else 0
        peak = max((c[1] for c in curve), default=0)
        ratio = peak / total if total else 0.0
        row = f"{length},{seed},{total},{peak},{ratio:.4f},{'pass' if ratio <= args.threshold else 'fail'}"
        if args.timing:
            row += f",{elapsed:.6f}"
        rows.append(row)
        xs.append(length)
        ys.append(total)
        metrics.export_csv(curve, out / f"curve-L{length}-s{seed}.csv")
    (out / "summary.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")
    if len(set(xs)) > 1:
        slope, intercept, r2 = metrics.linear_fit(xs, ys)
        print(f"(fit (slope {slope:.4f}) (intercept {intercept:.4f}) (r2 {r2:.4f}) (runs {len(xs)}))")
    else:
        print(f"(fit (runs {len(xs)}))")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run("intentrec.service.app:app", host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="intentrec", description="Hierarchical intention recognition over action transcripts.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    e = sub.add_parser("explain", help="explain a transcript")
    e.add_argument("--kb", required=True)
    e.add_argument("--demo", required=True)
    e.add_argument("--metrics", metavar="DIR")
    e.add_argument("--check", action="store_true", help="verify against the brute-force oracle")
    e.add_argument("--format", choices=["sexp"], default="sexp")
    e.set_defaults(func=cmd_explain)

    v = sub.add_parser("validate-kb", help="report knowledge-base diagnostics")
    v.add_argument("--kb", required=True)
    v.set_defaults(func=cmd_validate_kb)

    o = sub.add_parser("oracle-check", help="compare the engine with exhaustive cover enumeration")
    o.add_argument("--kb", required=True)
    o.add_argument("--demo", required=True)
    o.add_argument("--limit", type=int, default=10_000)
    o.add_argument("--max-length", type=int, default=20)
    o.set_defaults(func=cmd_oracle_check)

    g = sub.add_parser("gen-demo", help="generate a random demonstration")
    g.add_argument("--kb", required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--n-top", type=int, required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--world", help="world model file (default: bundled battery world)")
    g.add_argument("--max-rejections", type=int, default=100)
    g.set_defaults(func=cmd_gen_demo)

    b = sub.add_parser("bench", help="memory scaling over generated demonstrations")
    b.add_argument("--kb", required=True)
    b.add_argument("--min", type=int, required=True)
    b.add_argument("--max", type=int, required=True)
    b.add_argument("--step", type=int, required=True)
    b.add_argument("--seed", type=int, required=True)
    b.add_argument("--out", required=True)
    b.add_argument("--seeds", type=int, default=1, help="runs per length (seeds N..N+k-1)")
    b.add_argument("--world")
    b.add_argument("--threshold", type=float, default=0.35)
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--timing", action="store_true", help="add a wallTime column (not reproducible)")
    b.set_defaults(func=cmd_bench)

    s = sub.add_parser("serve", help="run the HTTP service")
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=8000)
    s.set_defaults(func=cmd_serve)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except CLIError as exc:
        print(str(exc), file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
