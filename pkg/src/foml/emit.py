"""Serialization of coalesced first-order sequents to SMT-LIB 2 and TPTP
fof, and of propositional modal sequents to the mlseq exchange format.

Both first-order formats share one encoding: a single uninterpreted sort U
with distinct constants tt and ff, every operator an uninterpreted function
into U, free (rigid and flexible) variables as constants, and formula
positions rendered as equations with tt.  A formula-shaped node sitting in
a term position (an argument, or an equality side) is first lifted out into
a fresh definitional symbol axiomatized by two implications; this is a
conservative extension and keeps both renderings ite-free.  Validity of the
sequent is encoded as unsatisfiability of hypotheses plus negated goal.
"""
from __future__ import annotations

import hashlib
import re
import subprocess
import tempfile
from dataclasses import dataclass
from itertools import product
from typing import Optional

from .models import FOLStructure
from .parser import ProblemError, SAtom, SList, SNode, read_sexprs
from .printer import print_expr
from .prover import MLSequent, check_ml_formula
from .semantics import eval_fol
from .syntax import (
    FALSE,
    DefinitionEnvironment,
    Eq,
    Expression,
    FalseExpr,
    FlexVar,
    FomlError,
    Forall,
    Implies,
    InternalError,
    Nabla,
    OpApp,
    Prime,
    RigidVar,
    alpha_key,
    collect_signature,
    free_rigid_vars,
)


@dataclass(frozen=True)
class DefSymbol:
    """Fresh symbol naming a formula-shaped subterm, abstracted over its
    free rigid variables."""

    name: str
    params: tuple[str, ...]
    body: Expression


@dataclass
class FolIR:
    ops: dict[str, int]
    consts: tuple[str, ...]
    defs: tuple[DefSymbol, ...]
    hypotheses: tuple[Expression, ...]
    goal: Expression


def _is_formula_shaped(e: Expression) -> bool:
    return isinstance(e, (Eq, Implies, Forall))


def stratify(
    hypotheses: tuple[Expression, ...],
    goal: Expression,
    env: DefinitionEnvironment,
) -> FolIR:
    """Split the sequent into strictly stratified formulas plus
    definitional symbols for formula-shaped subterms."""
    defs: list[DefSymbol] = []
    interned: dict = {}
    taken: set[str] = set()

    def name_for(e: Expression) -> Expression:
        params = free_rigid_vars(e)
        key = alpha_key(e, params)
        sym = interned.get((key, len(params)))
        if sym is None:
            body = form(e)  # may intern nested definitional symbols
            digest = hashlib.blake2b(repr(key).encode(),
                                     digest_size=4).hexdigest()
            base = f"q{len(defs)}__{digest}"
            sym = base
            k = 1
            while sym in taken or env.kind(sym) is not None:
                sym = f"{base}_{k}"
                k += 1
            taken.add(sym)
            interned[(key, len(params))] = sym
            defs.append(DefSymbol(sym, params, body))
        return OpApp(sym, tuple(RigidVar(x) for x in params))

    def form(e: Expression) -> Expression:
        match e:
            case Eq(lhs, rhs):
                return Eq(term(lhs), term(rhs))
            case Implies(lhs, rhs):
                return Implies(form(lhs), form(rhs))
            case Forall(var, body):
                return Forall(var, form(body))
            case FalseExpr():
                return e
            case _:
                return term(e)

    def term(e: Expression) -> Expression:
        match e:
            case RigidVar() | FlexVar() | FalseExpr():
                return e
            case OpApp(op, args):
                return OpApp(op, tuple(term(a) for a in args))
            case Eq() | Implies() | Forall():
                return name_for(e)
            case _:
                raise FomlError(f"not a first-order expression: {e}")

    new_hyps = tuple(form(h) for h in hypotheses)
    new_goal = form(goal)

    ops, rigid, flex = collect_signature(
        hypotheses + (goal,), env)
    for d in defs:
        ops[d.name] = len(d.params)
    return FolIR(ops=ops, consts=rigid + flex, defs=tuple(defs),
                 hypotheses=new_hyps, goal=new_goal)


class SymbolMap:
    """Deterministic source-name to emitted-name mapping, preserving names
    when the target format allows them."""

    def __init__(self, pattern: str, reserved: set[str], fallback: str):
        self.pattern = re.compile(pattern)
        self.reserved = set(reserved)
        self.fallback = fallback
        self.map: dict[str, str] = {}
        self.used: set[str] = set(reserved)

    def __getitem__(self, name: str) -> str:
        out = self.map.get(name)
        if out is not None:
            return out
        if self.pattern.fullmatch(name) and name not in self.used:
            out = name
        else:
            cleaned = re.sub(r"[^a-zA-Z0-9_]", "_", name).lstrip("_")
            if not cleaned or not cleaned[0].isalpha():
                cleaned = f"{self.fallback}{cleaned}"
            cleaned = cleaned[0].lower() + cleaned[1:]
            out = cleaned
            k = 1
            while out in self.used:
                out = f"{cleaned}_{k}"
                k += 1
        self.used.add(out)
        self.map[name] = out
        return out


_SMT_RESERVED = {
    "tt", "ff", "U", "assert", "check-sat", "declare-fun", "declare-const",
    "declare-sort", "set-logic", "not", "and", "or", "xor", "distinct",
    "forall", "exists", "ite", "true", "false", "let", "par", "=>", "=",
}

_TPTP_RESERVED = {"tt", "ff", "fof", "axiom", "conjecture"}


def emit_smt(ir: FolIR) -> str:
    sym = SymbolMap(r"[a-zA-Z~!@$%^&*_+=<>.?/-][0-9a-zA-Z~!@$%^&*_+=<>.?/-]*",
                    _SMT_RESERVED, "s_")

    def form(e: Expression, bound: dict[str, str], depth: int) -> str:
        match e:
            case FalseExpr():
                return "false"
            case Implies(lhs, rhs):
                return (f"(=> {form(lhs, bound, depth)} "
                        f"{form(rhs, bound, depth)})")
            case Forall(var, body):
                bv = f"bv{depth}"
                inner = dict(bound)
                inner[var] = bv
                return (f"(forall (({bv} U)) "
                        f"{form(body, inner, depth + 1)})")
            case Eq(lhs, rhs):
                return (f"(= {term(lhs, bound, depth)} "
                        f"{term(rhs, bound, depth)})")
            case _:
                return f"(= {term(e, bound, depth)} tt)"

    def term(e: Expression, bound: dict[str, str], depth: int) -> str:
        match e:
            case RigidVar(name):
                return bound[name] if name in bound else sym[name]
            case FlexVar(name):
                return sym[name]
            case FalseExpr():
                return "ff"
            case OpApp(op, args):
                if not args:
                    return sym[op]
                inner = " ".join(term(a, bound, depth) for a in args)
                return f"({sym[op]} {inner})"
            case _:
                raise InternalError(
                    f"unstratified node in term position: {e}")

    lines = [
        "(set-logic UF)",
        "(declare-sort U 0)",
        "(declare-const tt U)",
        "(declare-const ff U)",
        "(assert (distinct tt ff))",
    ]
    for op, arity in ir.ops.items():
        doms = " ".join(["U"] * arity)
        lines.append(f"(declare-fun {sym[op]} ({doms}) U)")
    for c in ir.consts:
        lines.append(f"(declare-const {sym[c]} U)")
    for d in ir.defs:
        bound = {p: f"bv{i}" for i, p in enumerate(d.params)}
        depth = len(d.params)
        body = form(d.body, bound, depth)
        app = sym[d.name]
        if d.params:
            args = " ".join(bound[p] for p in d.params)
            app = f"({app} {args})"
        pos = f"(=> {body} (= {app} tt))"
        neg = f"(=> (not {body}) (= {app} ff))"
        for ax in (pos, neg):
            if d.params:
                binders = " ".join(f"({bound[p]} U)" for p in d.params)
                ax = f"(forall ({binders}) {ax})"
            lines.append(f"(assert {ax})")
    for h in ir.hypotheses:
        lines.append(f"(assert {form(h, {}, 0)})")
    lines.append(f"(assert (not {form(ir.goal, {}, 0)}))")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


def emit_tptp(ir: FolIR) -> str:
    sym = SymbolMap(r"[a-z][a-zA-Z0-9_]*", _TPTP_RESERVED, "s_")

    def form(e: Expression, bound: dict[str, str], depth: int) -> str:
        match e:
            case FalseExpr():
                return "$false"
            case Implies(lhs, rhs):
                return (f"({form(lhs, bound, depth)} => "
                        f"{form(rhs, bound, depth)})")
            case Forall(var, body):
                bv = f"X{depth}"
                inner = dict(bound)
                inner[var] = bv
                return f"(! [{bv}] : {form(body, inner, depth + 1)})"
            case Eq(lhs, rhs):
                return (f"({term(lhs, bound, depth)} = "
                        f"{term(rhs, bound, depth)})")
            case _:
                return f"({term(e, bound, depth)} = tt)"

    def term(e: Expression, bound: dict[str, str], depth: int) -> str:
        match e:
            case RigidVar(name):
                return bound[name] if name in bound else sym[name]
            case FlexVar(name):
                return sym[name]
            case FalseExpr():
                return "ff"
            case OpApp(op, args):
                if not args:
                    return sym[op]
                inner = ",".join(term(a, bound, depth) for a in args)
                return f"{sym[op]}({inner})"
            case _:
                raise InternalError(
                    f"unstratified node in term position: {e}")

    lines = ["fof(tt_not_ff, axiom, tt != ff)."]
    k = 0
    for d in ir.defs:
        app = OpApp(d.name, tuple(RigidVar(p) for p in d.params))
        bound = {p: f"X{i}" for i, p in enumerate(d.params)}
        depth = len(d.params)
        body = form(d.body, bound, depth)
        app_t = term(app, bound, depth)
        pos = f"({body} => ({app_t} = tt))"
        neg = f"(~{body} => ({app_t} = ff))"
        for ax in (pos, neg):
            if d.params:
                binders = ",".join(bound[p] for p in d.params)
                ax = f"(! [{binders}] : {ax})"
            lines.append(f"fof(def_{k}, axiom, {ax}).")
            k += 1
    for i, h in enumerate(ir.hypotheses):
        lines.append(f"fof(hyp_{i}, axiom, {form(h, {}, 0)}).")
    lines.append(f"fof(goal, conjecture, {form(ir.goal, {}, 0)}).")
    return "\n".join(lines) + "\n"


def extend_with_defs(s: FOLStructure, ir: FolIR) -> FOLStructure:
    """Interpret the definitional symbols over a given structure (their
    axioms pin them uniquely)."""
    tables = dict(s.op_interp)

    def ensure(d: DefSymbol) -> None:
        if d.name in tables:
            return
        # bodies may use definitional symbols introduced later in the list
        for sub_d in ir.defs:
            if sub_d.name != d.name and _mentions(d.body, sub_d.name):
                ensure(sub_d)
        base = FOLStructure(s.universe, s.tt, s.ff, dict(tables), s.xi)
        table = {}
        for argvals in product(s.universe, repeat=len(d.params)):
            val = eval_fol(base, d.body, dict(zip(d.params, argvals)))
            table[argvals] = s.tt if val == s.tt else s.ff
        tables[d.name] = table

    for d in ir.defs:
        ensure(d)
    return FOLStructure(s.universe, s.tt, s.ff, tables, s.xi)


def _mentions(e: Expression, name: str) -> bool:
    from .syntax import walk

    return any(isinstance(sub, OpApp) and sub.op == name
               for sub in walk(e))


def encoding_satisfied(s: FOLStructure, ir: FolIR) -> bool:
    """Whether the emitted script is satisfied by (an extension of) s: all
    hypotheses true and the goal not true, with tt and ff distinct.  This
    is the tiny built-in evaluator used to cross-check boolification."""
    if s.tt == s.ff:
        return False
    full = extend_with_defs(s, ir)
    return (
        all(eval_fol(full, h) == full.tt for h in ir.hypotheses)
        and eval_fol(full, ir.goal) != full.tt
    )


def emit_mlseq(seq: MLSequent) -> str:
    for e in seq.hypotheses + (seq.goal,):
        check_ml_formula(e)
    lines = ["(mlseq"]
    lines.append(f"  (frame nabla {seq.frame_nabla})")
    lines.append(f"  (frame prime {seq.frame_prime})")
    if seq.hypotheses:
        inner = " ".join(print_expr(h) for h in seq.hypotheses)
        lines.append(f"  (global-hypotheses {inner})")
    else:
        lines.append("  (global-hypotheses)")
    lines.append(f"  (goal {print_expr(seq.goal)})")
    lines.append(")")
    return "\n".join(lines) + "\n"


def _parse_ml_expr(node: SNode) -> Expression:
    if isinstance(node, SAtom):
        if node.text == "false":
            return FALSE
        if node.text in ("true", "nabla", "prime", "=>"):
            raise ProblemError(f"bad atom {node.text!r}",
                               node.line, node.col)
        return FlexVar(node.text)
    if not node.items or not isinstance(node.items[0], SAtom):
        raise ProblemError("malformed formula", node.line, node.col)
    head = node.items[0].text
    rest = node.items[1:]
    if head == "=>" and len(rest) == 2:
        return Implies(_parse_ml_expr(rest[0]), _parse_ml_expr(rest[1]))
    if head == "nabla" and len(rest) == 1:
        return Nabla(_parse_ml_expr(rest[0]))
    if head == "prime" and len(rest) == 1:
        return Prime(_parse_ml_expr(rest[0]))
    raise ProblemError(f"unknown modal form {head!r}", node.line, node.col)


def parse_mlseq(text: str) -> MLSequent:
    nodes = read_sexprs(text)
    if len(nodes) != 1 or not isinstance(nodes[0], SList):
        raise ProblemError("expected exactly one (mlseq ...) form")
    top = nodes[0]
    if not top.items or not isinstance(top.items[0], SAtom) \
            or top.items[0].text != "mlseq":
        raise ProblemError("expected (mlseq ...)", top.line, top.col)
    frames = {"nabla": "k", "prime": "k"}
    hyps: tuple[Expression, ...] = ()
    goal: Optional[Expression] = None
    for section in top.items[1:]:
        if not isinstance(section, SList) or not section.items \
                or not isinstance(section.items[0], SAtom):
            raise ProblemError("malformed mlseq section",
                               section.line, section.col)
        head = section.items[0].text
        body = section.items[1:]
        if head == "frame":
            if len(body) != 2 or not all(isinstance(b, SAtom)
                                         for b in body):
                raise ProblemError("(frame nabla|prime k|t|k4|s4)",
                                   section.line, section.col)
            mod, cls = body[0].text, body[1].text
            if mod not in frames or cls not in ("k", "t", "k4", "s4"):
                raise ProblemError("(frame nabla|prime k|t|k4|s4)",
                                   section.line, section.col)
            frames[mod] = cls
        elif head == "global-hypotheses":
            hyps = tuple(_parse_ml_expr(n) for n in body)
        elif head == "goal":
            if len(body) != 1:
                raise ProblemError("(goal formula)",
                                   section.line, section.col)
            goal = _parse_ml_expr(body[0])
        else:
            raise ProblemError(f"unknown mlseq section {head!r}",
                               section.line, section.col)
    if goal is None:
        raise ProblemError("mlseq has no goal")
    return MLSequent(hypotheses=hyps, goal=goal,
                     frame_nabla=frames["nabla"],
                     frame_prime=frames["prime"])


def run_solver(solver: str, text: str, fmt: str,
               timeout: float = 60.0) -> str:
    """Run an external solver on emitted text; returns "valid",
    "not-valid" or "unknown".  Never required by the test suite."""
    suffix = ".smt2" if fmt == "smt" else ".p"
    with tempfile.NamedTemporaryFile(
            "w", suffix=suffix, delete=False) as f:
        f.write(text)
        path = f.name
    try:
        proc = subprocess.run([solver, path], capture_output=True,
                              text=True, timeout=timeout)
    except (OSError, subprocess.TimeoutExpired):
        return "unknown"
    out = proc.stdout + proc.stderr
    if fmt == "smt":
        for line in out.splitlines():
            line = line.strip()
            if line == "unsat":
                return "valid"
            if line == "sat":
                return "not-valid"
        return "unknown"
    if "CounterSatisfiable" in out or "Satisfiable" in out:
        return "not-valid"
    if "Theorem" in out or "Unsatisfiable" in out:
        return "valid"
    return "unknown"
