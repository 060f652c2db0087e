"""Command-line front end.

Exit codes: 64 usage error, 65 malformed input, 70 internal invariant
violation.  `prove-ml` instead reports its verdict through the exit code:
0 proved, 1 countermodel, 2 resource limit.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .actions import SafetySpec, safety_obligations, translate_action
from .coalesce import (
    CoalesceConfig,
    coalesce_obligation_fol,
    rewrite_rigid_box,
    symbols_block,
)
from .coalesce_ml import atoms_block, coalesce_obligation_ml
from .emit import (
    emit_mlseq,
    emit_smt,
    emit_tptp,
    parse_mlseq,
    run_solver,
    stratify,
)
from .leibniz import compute_leibniz, format_table
from .models import parse_model, propmodel_as_kripke, serialize_model
from .parser import ProblemError, parse_file, parse_problem
from .printer import print_expr, print_problem
from .prover import (
    Countermodel,
    MLSequent,
    Proved,
    ProverLimits,
    prove_ml,
)
from .semantics import eval_expr, holds_globally
from .syntax import FomlError, InternalError, Obligation
from .gen import run_fuzz

EX_USAGE = 64
EX_DATAERR = 65
EX_SOFTWARE = 70


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EX_USAGE)


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ProblemError(f"cannot read {path}: {exc}")


def _config(args) -> CoalesceConfig:
    return CoalesceConfig(order=args.canonical_order)


def _apply_rigid_box(ob: Obligation, flag: str) -> Obligation:
    if flag == "off":
        return ob
    reflexive = flag == "reflexive"
    return Obligation(
        tuple(rewrite_rigid_box(h, ob.env, reflexive)
              for h in ob.hypotheses),
        rewrite_rigid_box(ob.goal, ob.env, reflexive),
        ob.env, ob.mode)


def cmd_coalesce_fol(args) -> int:
    ob = _apply_rigid_box(parse_problem(_read(args.file)),
                          args.rewrite_rigid_box)
    res = coalesce_obligation_fol(ob, _config(args))
    for h in res.hypotheses:
        print(f"(assume {print_expr(h)})")
    print(f"(goal {print_expr(res.goal)})")
    print(symbols_block(res.table))
    return 0


def cmd_coalesce_ml(args) -> int:
    ob = parse_problem(_read(args.file))
    res = coalesce_obligation_ml(ob)
    for h in res.hypotheses:
        print(f"(assume {print_expr(h)})")
    print(f"(goal {print_expr(res.goal)})")
    inner = " ".join(print_expr(h) for h in res.stability)
    print(f"(hypotheses {inner})" if inner else "(hypotheses)")
    print(atoms_block(res.table))
    return 0


def _load_sequent(args) -> MLSequent:
    text = _read(args.file)
    if text.lstrip().startswith("(mlseq"):
        seq = parse_mlseq(text)
        frame_nabla = args.frame or seq.frame_nabla
        frame_prime = args.prime_frame or seq.frame_prime
        return MLSequent(seq.hypotheses, seq.goal, frame_nabla, frame_prime)
    ob = parse_problem(text)
    res = coalesce_obligation_ml(ob)
    return MLSequent(res.hypotheses + res.stability, res.goal,
                     args.frame or "k", args.prime_frame or "k")


def cmd_prove_ml(args) -> int:
    seq = _load_sequent(args)
    verdict = prove_ml(seq, ProverLimits(max_free_bits=args.max_bits))
    if isinstance(verdict, Proved):
        print("proved")
        return 0
    if isinstance(verdict, Countermodel):
        print(f"countermodel (goal fails at state {verdict.state})")
        print(serialize_model(propmodel_as_kripke(verdict.model)), end="")
        return 1
    print(f"resource limit: {verdict.reason}")
    return 2


def cmd_leibniz(args) -> int:
    pf = parse_file(_read(args.file))
    out = format_table(compute_leibniz(pf.env))
    if out:
        print(out)
    return 0


def cmd_action(args) -> int:
    ob = parse_problem(_read(args.file))
    res = translate_action(ob)
    print(print_problem(
        Obligation(res.hypotheses, res.goal, res.env, "fol")), end="")
    return 0


def cmd_safety(args) -> int:
    pf = parse_file(_read(args.file))
    missing = [name for name, val in (
        ("init", pf.init), ("next", pf.next),
        ("invariant", pf.invariant),
        ("inductive-invariant", pf.inductive_invariant))
        if val is None]
    if missing:
        raise ProblemError(
            "safety input lacks " + ", ".join(f"({m} ...)" for m in missing))
    vars_ = pf.vars if pf.vars is not None else pf.env.flex_vars
    spec = SafetySpec(pf.init, pf.next, pf.invariant,
                      pf.inductive_invariant, vars_, pf.env)
    result = safety_obligations(spec)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    stem = Path(args.file).stem
    for i, ob in enumerate(result.obligations, start=1):
        path = outdir / f"{stem}-ob{i}.foml"
        path.write_text(print_problem(ob))
        print(path)
    glue_path = outdir / f"{stem}-glue.mlseq"
    glue_path.write_text(emit_mlseq(result.glue))
    print(glue_path)
    return 0


def cmd_check_model(args) -> int:
    m = parse_model(_read(args.model))
    ob = parse_problem(_read(args.file))
    for h in ob.hypotheses:
        if not holds_globally(m, h, ob.env):
            print(f"hypothesis fails somewhere: {print_expr(h)}")
            print("obligation vacuously satisfied by this model")
            return 0
    for w in m.states:
        if eval_expr(m, w, ob.goal, ob.env) != m.tt:
            print(f"goal fails at state {w} (countermodel)")
            return 1
    print("obligation satisfied at every state")
    return 0


def cmd_fuzz(args) -> int:
    checks = tuple(args.checks.split(","))
    max_u, max_s = args.bounds
    report = run_fuzz(args.seed, args.iters, checks,
                      max_universe=max_u, max_states=max_s)
    print(f"{report.iterations} iterations, "
          f"{len(report.discrepancies)} discrepancies")
    for d in report.discrepancies[:5]:
        print(d)
    return 0 if report.ok else 1


def cmd_emit(args) -> int:
    fmt = args.emit
    text = _read(args.file)
    if fmt == "mlseq":
        if text.lstrip().startswith("(mlseq"):
            out = emit_mlseq(parse_mlseq(text))
        else:
            ob = parse_problem(text)
            res = coalesce_obligation_ml(ob)
            out = emit_mlseq(MLSequent(res.hypotheses + res.stability,
                                       res.goal))
    else:
        ob = _apply_rigid_box(parse_problem(text), args.rewrite_rigid_box)
        res = coalesce_obligation_fol(ob, _config(args))
        ir = stratify(res.hypotheses, res.goal, res.env)
        out = emit_smt(ir) if fmt == "smt" else emit_tptp(ir)
    if args.output:
        Path(args.output).write_text(out)
    else:
        print(out, end="")
    if args.solver:
        if fmt == "mlseq":
            raise ProblemError("--solver only applies to smt/tptp output")
        verdict = run_solver(args.solver, out, fmt)
        print(f"solver verdict: {verdict}")
    return 0


def _bounds(text: str) -> tuple[int, int]:
    try:
        u, s = text.split(",")
        return int(u), int(s)
    except ValueError:
        raise argparse.ArgumentTypeError("expected --bounds=U,S")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="foml",
                description="first-order modal logic workbench")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, **kw):
        sp = sub.add_parser(name, **kw)
        sp.set_defaults(func=func)
        return sp

    def coalesce_flags(sp):
        sp.add_argument("--canonical-order", default="binder",
                        choices=("binder", "appearance"))
        sp.add_argument("--rewrite-rigid-box", nargs="?", const="general",
                        default="off",
                        choices=("off", "general", "reflexive"))

    sp = add("coalesce-fol", cmd_coalesce_fol,
             help="translate an obligation to first-order logic")
    sp.add_argument("file")
    coalesce_flags(sp)

    sp = add("coalesce-ml", cmd_coalesce_ml,
             help="translate an obligation to propositional modal logic")
    sp.add_argument("file")

    sp = add("prove-ml", cmd_prove_ml,
             help="decide a propositional modal sequent")
    sp.add_argument("file")
    sp.add_argument("--frame", choices=("k", "t", "k4", "s4"))
    sp.add_argument("--prime-frame", choices=("k", "t", "k4", "s4"))
    sp.add_argument("--max-bits", type=int, default=18)

    sp = add("leibniz", cmd_leibniz,
             help="print the Leibniz position table")
    sp.add_argument("file")

    sp = add("action", cmd_action,
             help="translate an action obligation to first-order logic")
    sp.add_argument("file")

    sp = add("safety", cmd_safety,
             help="emit the three safety obligations plus the glue sequent")
    sp.add_argument("file")
    sp.add_argument("--out", default=".")

    sp = add("check-model", cmd_check_model,
             help="evaluate an obligation against a model file")
    sp.add_argument("model")
    sp.add_argument("file")

    sp = add("fuzz", cmd_fuzz,
             help="run the seeded witness-construction properties")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--iters", type=int, default=1000)
    sp.add_argument("--bounds", type=_bounds, default=(3, 3))
    sp.add_argument("--checks", default="fol-witness,ml-witness")

    sp = add("emit", cmd_emit, help="serialize an obligation")
    sp.add_argument("file")
    sp.add_argument("--emit", default="smt",
                    choices=("smt", "tptp", "mlseq"))
    sp.add_argument("--output", "-o")
    sp.add_argument("--solver")
    coalesce_flags(sp)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ProblemError as exc:
        print(f"foml: {exc}", file=sys.stderr)
        return EX_DATAERR
    except InternalError as exc:
        print(f"foml: internal error: {exc}", file=sys.stderr)
        return EX_SOFTWARE
    except FomlError as exc:
        print(f"foml: {exc}", file=sys.stderr)
        return EX_DATAERR


if __name__ == "__main__":
    sys.exit(main())
