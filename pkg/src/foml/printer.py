"""Deterministic s-expression printing of core expressions and obligations.

Only core forms are printed (no resugaring), so parse(print_expr(e)) always
reconstructs an alpha-equal AST.
"""
from __future__ import annotations

from .syntax import (
    DefApp,
    DefinitionEnvironment,
    Eq,
    Expression,
    FalseExpr,
    FlexVar,
    Forall,
    Implies,
    InternalError,
    Nabla,
    Obligation,
    OpApp,
    Prime,
    RigidVar,
)


def print_expr(e: Expression) -> str:
    match e:
        case RigidVar(name) | FlexVar(name):
            return name
        case OpApp(op, args) | DefApp(op, args):
            if not args:
                return op
            return f"({op} {' '.join(print_expr(a) for a in args)})"
        case Eq(lhs, rhs):
            return f"(= {print_expr(lhs)} {print_expr(rhs)})"
        case FalseExpr():
            return "false"
        case Implies(lhs, rhs):
            return f"(=> {print_expr(lhs)} {print_expr(rhs)})"
        case Forall(var, body):
            return f"(forall {var} {print_expr(body)})"
        case Nabla(body):
            return f"(nabla {print_expr(body)})"
        case Prime(body):
            return f"(prime {print_expr(body)})"
    raise InternalError(f"unknown expression node {e!r}")


def print_env(env: DefinitionEnvironment) -> str:
    lines = []
    for name, arity in env.ops.items():
        lines.append(f"(declare-op {name} {arity})")
    for x in env.rigid_vars:
        lines.append(f"(declare-rigid {x})")
    for v in env.flex_vars:
        lines.append(f"(declare-flex {v})")
    for d in env.definitions:
        params = "".join(f" {p}" for p in d.params)
        lines.append(f"(define ({d.name}{params}) {print_expr(d.body)})")
    return "\n".join(lines)


def print_problem(ob: Obligation) -> str:
    """Render an obligation as a complete, re-parseable problem file."""
    lines = [print_env(ob.env)] if ob.env.all_names() else []
    for h in ob.hypotheses:
        lines.append(f"(assume {print_expr(h)})")
    lines.append(f"(goal {print_expr(ob.goal)})")
    if ob.mode != "fol":
        lines.append(f"(mode {ob.mode})")
    return "\n".join(lines) + "\n"
