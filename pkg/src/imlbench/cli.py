"""Command-line interface.

Exit codes: 0 success (a NonTheorem verdict included), 1 no countermodel up
to the bound, 2 formula syntax error, 3 model or certificate file error,
4 internal failure (fuel exhausted, broken invariant, failed verification).
"""
from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

from .decide import Certificate, SearchConfig, Verdict, decide, verify_certificate
from .formula import (ParseError, atoms_of, closure_iterate, closure_of, depth,
                      formula_length, modal_depth, parse, render, sort_formulas)
from .kripke import (C_ALL, Model, ModelError, Semantics, enumerate_frames,
                     enumerate_preorders, load_model, model_to_json, satisfies,
                     to_dot, truth_set, valid_in_frame)
from .logic import LogicId
from .saturation import (SaturationError, clip_to_json, extract_saturated_model,
                         saturate, verify_truth_lemma)

EXIT_OK = 0
EXIT_NO_COUNTERMODEL = 1
EXIT_SYNTAX = 2
EXIT_MODEL = 3
EXIT_INTERNAL = 4


class _Fail(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _formula(args) -> object:
    if args.formula_file:
        try:
            with open(args.formula_file, encoding="utf-8") as fh:
                text = fh.read().strip()
        except OSError as e:
            raise _Fail(EXIT_MODEL, f"cannot read formula file: {e}") from None
    elif args.formula is not None:
        text = args.formula
    else:
        raise _Fail(EXIT_SYNTAX, "no formula given (use --formula or --formula-file)")
    return parse(text)


def _model(args, frame_only=False) -> Model:
    if args.frame:
        return load_model(args.frame, frame_only=True)
    if args.model:
        return load_model(args.model, frame_only=frame_only)
    raise _Fail(EXIT_MODEL, "no model given (use --model or --frame)")


def _write(path: str, text: str):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _write_json(path: str, data):
    _write(path, json.dumps(data, indent=2, ensure_ascii=False) + "\n")


def _write_trace(path: str, trace: list):
    _write(path, "".join(json.dumps(rec, sort_keys=True) + "\n" for rec in trace))


def _describe_model(m: Model, out):
    f = m.frame
    print(f"  worlds: {' '.join(f.worlds)}", file=out)
    le = [f"{f.worlds[i]}<={f.worlds[j]}" for i, j in f.le_pairs() if i != j]
    print(f"  le: {' '.join(le) if le else '(identity)'}", file=out)
    r = [f"{f.worlds[i]}R{f.worlds[j]}" for i, j in f.r_pairs()]
    print(f"  r: {' '.join(r) if r else '(empty)'}", file=out)
    for p, v in m.val.items():
        print(f"  val({p}) = {{{', '.join(f.names(v))}}}", file=out)


def _fmt_set(fs) -> str:
    return "{" + ", ".join(render(b) for b in sort_formulas(fs)) + "}"


# ---------------------------------------------------------------------------
# Subcommands

def cmd_parse(args, out) -> int:
    a = _formula(args)
    print(render(a), file=out)
    print(f"length {formula_length(a)}, depth {depth(a)}, modal depth {modal_depth(a)}", file=out)
    print(f"atoms: {' '.join(atoms_of(a)) or '(none)'}", file=out)
    return EXIT_OK


def cmd_closure(args, out) -> int:
    a = _formula(args)
    sigma = closure_of(a)
    print(f"closure ({len(sigma)}): {_fmt_set(sigma)}", file=out)
    alpha = 0
    while True:
        layer = closure_iterate(sigma, alpha)
        print(f"rank {alpha} ({len(layer)}): {_fmt_set(layer)}", file=out)
        if not layer:
            break
        alpha += 1
    return EXIT_OK


def cmd_check(args, out) -> int:
    a = _formula(args)
    m = _model(args)
    sem = Semantics(args.semantics)
    if args.world is not None:
        print("true" if satisfies(m, args.world, a, sem) else "false", file=out)
    else:
        ts = truth_set(m, a, sem)
        print(f"true at: {{{', '.join(m.frame.names(ts))}}}", file=out)
    return EXIT_OK


def cmd_valid(args, out) -> int:
    a = _formula(args)
    m = _model(args, frame_only=True)
    v = valid_in_frame(m.frame, a, Semantics(args.semantics))
    if v.valid:
        print("valid", file=out)
    else:
        val = ", ".join(f"{p}={{{', '.join(ws)}}}" for p, ws in v.valuation.items())
        print(f"not valid: fails at {v.world} under {val or 'the empty valuation'}", file=out)
    return EXIT_OK


def cmd_enumerate(args, out) -> int:
    cls = LogicId.parse(args.logic).frame_class if args.logic else C_ALL
    dump = []
    for n in range(1, args.max_size + 1):
        count = 0
        for f in enumerate_frames(n, cls):
            count += 1
            if args.out:
                dump.append(model_to_json(Model(f, {})))
        print(f"size {n}: {len(enumerate_preorders(n))} preorders, {count} frames in {cls}", file=out)
    if args.out:
        _write_json(args.out, dump)
    return EXIT_OK


def _saturation_outputs(args, clip, trace):
    if args.out:
        _write_json(args.out, clip_to_json(clip))
    if args.dot:
        _write(args.dot, to_dot(extract_saturated_model(clip, check_clean=False), "saturated"))
    if args.trace:
        _write_trace(args.trace, trace)


def cmd_saturate(args, out) -> int:
    a = _formula(args)
    m = _model(args)
    logic = LogicId.parse(args.logic)
    if args.world is None:
        raise _Fail(EXIT_MODEL, "--world is required")
    trace: list = []
    try:
        clip = saturate(m, args.world, a, logic, args.fuel, trace)
    except SaturationError as e:
        if e.code.startswith("BASE_MODEL"):
            raise _Fail(EXIT_MODEL, str(e)) from None
        raise
    rep = verify_truth_lemma(clip)
    print(f"saturated: {len(clip.tips)} tips, {len(trace)} repairs, "
          f"max rank {max(t.rank for t in clip.tips)}", file=out)
    _describe_model(extract_saturated_model(clip, check_clean=False), out)
    for key, value in rep.to_json().items():
        if key != "violations":
            print(f"  {key}: {value}", file=out)
    for v in rep.violations:
        print(f"  violation: {v}", file=out)
    _saturation_outputs(args, clip, trace)
    return EXIT_OK if rep.ok else EXIT_INTERNAL


def cmd_decide(args, out) -> int:
    a = _formula(args)
    logic = LogicId.parse(args.logic)
    cfg = SearchConfig(max_frame_size=args.max_size, semantics=Semantics(args.semantics),
                       run_saturation=args.saturate, fuel=args.fuel, jobs=args.jobs)
    trace: list = []
    cert = decide(a, logic, cfg, trace)
    if args.trace and args.saturate:
        _write_trace(args.trace, trace)
        cert = Certificate(**{**cert.__dict__, "trace_path": args.trace})
    print(f"{cert.verdict} for {render(a)} in {logic} (bound {cfg.max_frame_size})", file=out)
    print(f"examined {cert.frames_examined} frames, {cert.valuations_examined} valuations", file=out)
    if cert.model is not None:
        print(f"countermodel falsifying at {cert.world}:", file=out)
        _describe_model(cert.model, out)
    if cert.report is not None:
        print(f"saturated model: {len(cert.saturated['worlds'])} worlds, "
              f"validation {'ok' if not cert.report['violations'] else 'FAILED'}", file=out)
    for d in cert.diagnostics:
        print(f"diagnostic: {d}", file=out)
    if args.out:
        _write_json(args.out, cert.to_json())
    if args.dot and cert.model is not None:
        _write(args.dot, to_dot(cert.model, "countermodel"))
    return EXIT_OK if cert.verdict is Verdict.NON_THEOREM else EXIT_NO_COUNTERMODEL


def cmd_verify(args, out) -> int:
    if not args.cert:
        raise _Fail(EXIT_MODEL, "--cert is required")
    try:
        with open(args.cert, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise _Fail(EXIT_MODEL, f"cannot read certificate: {e}") from None
    ok = verify_certificate(data)
    print("certificate ok" if ok else "certificate REJECTED", file=out)
    return EXIT_OK if ok else EXIT_INTERNAL


COMMANDS = {
    "parse": (cmd_parse, "parse and pretty-print a formula"),
    "closure": (cmd_closure, "closed set of a formula and its rank layers"),
    "check": (cmd_check, "evaluate a formula in a model"),
    "valid": (cmd_valid, "check a formula on every valuation of a frame"),
    "enumerate": (cmd_enumerate, "count the frames of each size"),
    "saturate": (cmd_saturate, "saturate a falsifying model"),
    "decide": (cmd_decide, "bounded countermodel search"),
    "verify": (cmd_verify, "re-check a certificate file"),
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="imlbench", description="Workbench for FIK and LIK.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        s = sub.add_parser(name, help=help_text)
        g = s.add_mutually_exclusive_group()
        g.add_argument("--formula")
        g.add_argument("--formula-file")
        m = s.add_mutually_exclusive_group()
        m.add_argument("--model")
        m.add_argument("--frame")
        s.add_argument("--world")
        s.add_argument("--logic", choices=["fik", "lik"], default=None if name == "enumerate" else "fik")
        s.add_argument("--semantics", choices=[x.value for x in Semantics], default="std")
        s.add_argument("--max-size", type=int, default=3)
        s.add_argument("--saturate", action="store_true")
        s.add_argument("--fuel", type=int)
        s.add_argument("--jobs", type=int, default=1)
        s.add_argument("--out")
        s.add_argument("--dot")
        s.add_argument("--trace")
        s.add_argument("--cert")
    return p


def main(argv: Sequence[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    if args.max_size < 1 or args.jobs < 1:
        print("error: --max-size and --jobs must be positive", file=err)
        return EXIT_SYNTAX
    handler = COMMANDS[args.command][0]
    try:
        return handler(args, out)
    except _Fail as e:
        print(f"error: {e}", file=err)
        return e.code
    except ParseError as e:
        print(f"error: {e}", file=err)
        return EXIT_SYNTAX
    except ModelError as e:
        print(f"error: {e}", file=err)
        return EXIT_MODEL
    except SaturationError as e:
        print(f"error: {e}", file=err)
        return EXIT_INTERNAL


run_cli = main

if __name__ == "__main__":
    sys.exit(main())
