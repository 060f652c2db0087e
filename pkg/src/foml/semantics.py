"""Exact evaluation of expressions in finite models.

Three evaluators, one per language level:

  eval_expr : full language in a Kripke model at a state
  eval_fol  : first-order fragment in a first-order structure
  eval_ml   : propositional modal fragment in a propositional model

The implication / quantifier / equality clauses treat any value other than
tt as false-like, so no coercion of non-boolean values is performed
anywhere.  Universal quantification ranges over the whole (constant)
universe.  A nabla node maps the set of body values at accessible states to
tt iff that set is included in {tt}, and to ff otherwise.

Prime is evaluated over the model's second accessibility relation.  When
that relation is a total function on states, prime is evaluated in the
next-state reading (the value of the body at the unique successor), which
is the reading under which prime distribution laws are value-preserving;
otherwise it collapses exactly like nabla.  The two readings agree on
truth (being tt) whenever both apply.
"""
from __future__ import annotations

from typing import Mapping, Optional

from .models import FOLStructure, KripkeModel, PropModel, Value
from .syntax import (
    DefApp,
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
    Obligation,
    OpApp,
    Prime,
    RigidVar,
    substitute,
)


class EvalError(FomlError):
    pass


def eval_expr(
    m: KripkeModel,
    w: Value,
    e: Expression,
    env: DefinitionEnvironment,
    bindings: Optional[Mapping[str, Value]] = None,
) -> Value:
    """Value of e at state w of m.  `bindings` overlays m.xi and is how
    quantifiers (and witness constructions) rebind rigid variables."""
    prime_fn = m.prime_is_function()

    def go(e: Expression, w: Value, bnd: dict[str, Value]) -> Value:
        match e:
            case RigidVar(name):
                if name in bnd:
                    return bnd[name]
                try:
                    return m.xi[name]
                except KeyError:
                    raise EvalError(f"rigid variable {name!r} has no value")
            case FlexVar(name):
                try:
                    return m.zeta[(name, w)]
                except KeyError:
                    raise EvalError(
                        f"flexible variable {name!r} has no value at "
                        f"state {w!r}")
            case OpApp(op, args):
                vals = tuple(go(a, w, bnd) for a in args)
                try:
                    return m.op_interp[op][vals]
                except KeyError:
                    raise EvalError(f"operator {op!r} not interpreted")
            case DefApp(op, args):
                d = env.definition(op)
                return go(substitute(d.body, dict(zip(d.params, args))),
                          w, bnd)
            case Eq(lhs, rhs):
                return m.tt if go(lhs, w, bnd) == go(rhs, w, bnd) else m.ff
            case FalseExpr():
                return m.ff
            case Implies(lhs, rhs):
                if go(lhs, w, bnd) != m.tt or go(rhs, w, bnd) == m.tt:
                    return m.tt
                return m.ff
            case Forall(var, body):
                for d_ in m.universe:
                    inner = dict(bnd)
                    inner[var] = d_
                    if go(body, w, inner) != m.tt:
                        return m.ff
                return m.tt
            case Nabla(body):
                for w2 in m.successors(w, m.R):
                    if go(body, w2, bnd) != m.tt:
                        return m.ff
                return m.tt
            case Prime(body):
                if m.primeR is None:
                    raise EvalError(
                        "prime evaluated in a model without primeR")
                if prime_fn:
                    return go(body, m.prime_successor(w), bnd)
                for w2 in m.successors(w, m.primeR):
                    if go(body, w2, bnd) != m.tt:
                        return m.ff
                return m.tt
        raise InternalError(f"unknown expression node {e!r}")

    return go(e, w, dict(bindings or {}))


def eval_fol(
    s: FOLStructure,
    e: Expression,
    bindings: Optional[Mapping[str, Value]] = None,
) -> Value:
    """Value of a first-order expression in structure s.  Both rigid and
    flexible variables are looked up in s.xi (the extended variable set);
    modal and defined-operator nodes are rejected."""

    def go(e: Expression, bnd: dict[str, Value]) -> Value:
        match e:
            case RigidVar(name):
                if name in bnd:
                    return bnd[name]
                try:
                    return s.xi[name]
                except KeyError:
                    raise EvalError(f"variable {name!r} has no value")
            case FlexVar(name):
                try:
                    return s.xi[name]
                except KeyError:
                    raise EvalError(f"variable {name!r} has no value")
            case OpApp(op, args):
                vals = tuple(go(a, bnd) for a in args)
                try:
                    return s.op_interp[op][vals]
                except KeyError:
                    raise EvalError(f"operator {op!r} not interpreted")
            case Eq(lhs, rhs):
                return s.tt if go(lhs, bnd) == go(rhs, bnd) else s.ff
            case FalseExpr():
                return s.ff
            case Implies(lhs, rhs):
                if go(lhs, bnd) != s.tt or go(rhs, bnd) == s.tt:
                    return s.tt
                return s.ff
            case Forall(var, body):
                for d_ in s.universe:
                    inner = dict(bnd)
                    inner[var] = d_
                    if go(body, inner) != s.tt:
                        return s.ff
                return s.tt
            case Nabla() | Prime() | DefApp():
                raise EvalError(
                    f"not a first-order expression: {e}")
        raise InternalError(f"unknown expression node {e!r}")

    return go(e, dict(bindings or {}))


def eval_ml(k: PropModel, w: Value, e: Expression) -> Value:
    """Truth value of a propositional modal formula at state w of k.
    Atoms are flexible variables; anything first-order is rejected."""
    match e:
        case FlexVar(name):
            try:
                return k.zeta[(name, w)]
            except KeyError:
                raise EvalError(f"atom {name!r} has no value at {w!r}")
        case FalseExpr():
            return k.ff
        case Implies(lhs, rhs):
            if eval_ml(k, w, lhs) != k.tt or eval_ml(k, w, rhs) == k.tt:
                return k.tt
            return k.ff
        case Nabla(body):
            for (s, t) in k.R:
                if s == w and eval_ml(k, t, body) != k.tt:
                    return k.ff
            return k.tt
        case Prime(body):
            if k.primeR is None:
                raise EvalError("prime atom in a model without primeR")
            for (s, t) in k.primeR:
                if s == w and eval_ml(k, t, body) != k.tt:
                    return k.ff
            return k.tt
    raise EvalError(f"not a propositional modal formula: {e}")


def holds(m: KripkeModel, w: Value, e: Expression,
          env: DefinitionEnvironment) -> bool:
    return eval_expr(m, w, e, env) == m.tt


def holds_globally(m: KripkeModel, e: Expression,
                   env: DefinitionEnvironment) -> bool:
    return all(holds(m, w, e, env) for w in m.states)


def countermodel_state(m: KripkeModel, ob: Obligation) -> Optional[Value]:
    """State of m at which the obligation's goal fails, provided every
    hypothesis holds at every state; None when m is not a countermodel."""
    if not all(holds_globally(m, h, ob.env) for h in ob.hypotheses):
        return None
    for w in m.states:
        if not holds(m, w, ob.goal, ob.env):
            return w
    return None
