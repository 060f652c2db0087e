"""Action-formula pipeline: distribute prime inward until it sits only on
flexible variables, then coalesce primed variables to fresh flexible
constants, yielding pure first-order obligations; plus assembly of the
standard three-part safety proof (init establishes the inductive invariant,
every step preserves it, it implies the target invariant) together with the
propositional-temporal glue sequent tying the parts back to the invariance
assertion.

Prime distribution ((x+y)' = x'+y', dropping primes on rigid leaves,
commuting with quantifiers by the constant-domain law) is value-preserving
exactly when prime is read as a total next-state function, which is how the
evaluator treats functional prime relations.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .coalesce_ml import AtomTable, coalesce_ml, hypotheses
from .prover import MLSequent
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
    and_,
    contains_node,
    expand_definitions,
    fresh_name,
    or_,
)


def distribute_prime(
    e: Expression, env: DefinitionEnvironment
) -> Expression:
    """Rewrite so every prime node wraps a flexible variable.

    Expects definitions already expanded and no nabla anywhere (the action
    fragment); violations are reported, they are never silently kept.
    """

    def dist(e: Expression) -> Expression:
        match e:
            case Prime(body):
                return push(body)
            case RigidVar() | FlexVar() | FalseExpr():
                return e
            case OpApp(op, args):
                return OpApp(op, tuple(dist(a) for a in args))
            case Eq(lhs, rhs):
                return Eq(dist(lhs), dist(rhs))
            case Implies(lhs, rhs):
                return Implies(dist(lhs), dist(rhs))
            case Forall(var, body):
                return Forall(var, dist(body))
            case Nabla():
                raise FomlError(
                    "nabla inside an action formula cannot be distributed")
            case DefApp():
                raise FomlError(
                    "defined operator in an action formula; expand "
                    "definitions first")
        raise InternalError(f"unknown expression node {e!r}")

    def push(e: Expression) -> Expression:
        # push(e) is the distributed form of (e)'
        match e:
            case RigidVar():
                return e
            case FlexVar():
                return Prime(e)
            case FalseExpr():
                return e
            case OpApp(op, args):
                return OpApp(op, tuple(push(a) for a in args))
            case Eq(lhs, rhs):
                return Eq(push(lhs), push(rhs))
            case Implies(lhs, rhs):
                return Implies(push(lhs), push(rhs))
            case Forall(var, body):
                return Forall(var, push(body))
            case Prime():
                raise FomlError("prime cannot be nested")
            case Nabla():
                raise FomlError(
                    "nabla inside an action formula cannot be distributed")
            case DefApp():
                raise FomlError(
                    "defined operator in an action formula; expand "
                    "definitions first")
        raise InternalError(f"unknown expression node {e!r}")

    return dist(e)


@dataclass
class PrimedVars:
    """Shared mapping from flexible variables to their primed fresh
    flexible constants (v -> v'), with deterministic name choice."""

    env: DefinitionEnvironment
    mapping: dict[str, str] = field(default_factory=dict)

    def intern(self, v: str) -> str:
        name = self.mapping.get(v)
        if name is None:
            avoid = self.env.all_names() | set(self.mapping.values())
            name = fresh_name(f"{v}'", avoid)
            self.mapping[v] = name
        return name

    def new_flex_names(self) -> tuple[str, ...]:
        return tuple(self.mapping.values())


def coalesce_action(e: Expression, primed: PrimedVars) -> Expression:
    """Replace each prime-on-a-flexible-variable by its fresh flexible
    constant.  The input must be distribute_prime output; the result is
    pure first-order."""
    match e:
        case Prime(FlexVar(v)):
            return FlexVar(primed.intern(v))
        case Prime():
            raise FomlError(
                f"prime not distributed down to a flexible variable: {e}")
        case RigidVar() | FlexVar() | FalseExpr():
            return e
        case OpApp(op, args):
            return OpApp(op, tuple(coalesce_action(a, primed)
                                   for a in args))
        case Eq(lhs, rhs):
            return Eq(coalesce_action(lhs, primed),
                      coalesce_action(rhs, primed))
        case Implies(lhs, rhs):
            return Implies(coalesce_action(lhs, primed),
                           coalesce_action(rhs, primed))
        case Forall(var, body):
            return Forall(var, coalesce_action(body, primed))
        case Nabla() | DefApp():
            raise FomlError(f"not an action formula: {e}")
    raise InternalError(f"unknown expression node {e!r}")


@dataclass(frozen=True)
class ActionResult:
    hypotheses: tuple[Expression, ...]
    goal: Expression
    env: DefinitionEnvironment  # extended with the primed flexible names
    primed: Mapping[str, str]


def translate_action(ob: Obligation) -> ActionResult:
    """Full pipeline for one action obligation: expand definitions,
    distribute prime, coalesce primed variables."""
    primed = PrimedVars(ob.env)

    def run(e: Expression) -> Expression:
        e = expand_definitions(e, ob.env)
        if contains_node(e, Nabla):
            raise FomlError("action formulas cannot contain nabla")
        return coalesce_action(distribute_prime(e, ob.env), primed)

    hyps = tuple(run(h) for h in ob.hypotheses)
    goal = run(ob.goal)
    env = ob.env.extended(flex=primed.new_flex_names())
    return ActionResult(hyps, goal, env, dict(primed.mapping))


@dataclass(frozen=True)
class SafetySpec:
    init: Expression
    next: Expression
    invariant: Expression
    inductive_invariant: Expression
    vars: tuple[str, ...]
    env: DefinitionEnvironment


@dataclass(frozen=True)
class SafetyResult:
    obligations: tuple[Obligation, Obligation, Obligation]
    glue: MLSequent
    glue_table: AtomTable
    primed: Mapping[str, str]


def _check_state_predicate(e: Expression, env: DefinitionEnvironment,
                           what: str) -> Expression:
    x = expand_definitions(e, env)
    if contains_node(x, Nabla, Prime):
        raise FomlError(f"{what} must be a state predicate "
                        "(no modalities after expansion)")
    return x


def boxed_step(next_: Expression, vars_: tuple[str, ...]) -> Expression:
    """`[Next]_v`: either the step relation or every variable unchanged."""
    if not vars_:
        raise FomlError("the flexible-variable tuple cannot be empty")
    unchanged = and_(*[Eq(Prime(FlexVar(v)), FlexVar(v)) for v in vars_])
    return or_(next_, unchanged)


def safety_obligations(spec: SafetySpec) -> SafetyResult:
    """The three obligations of an invariance proof, plus the glue sequent
    (the invariance assertion follows from the three facts by propositional
    temporal reasoning; emitted for external temporal tooling, not decided
    here)."""
    env = spec.env
    init = _check_state_predicate(spec.init, env, "init")
    inv = _check_state_predicate(spec.invariant, env, "invariant")
    iinv = _check_state_predicate(
        spec.inductive_invariant, env, "inductive-invariant")
    next_ = expand_definitions(spec.next, env)
    if contains_node(next_, Nabla):
        raise FomlError("next must be an action formula (no nabla)")

    fact1 = Implies(init, iinv)
    fact2 = Implies(and_(iinv, boxed_step(next_, spec.vars)), Prime(iinv))
    fact3 = Implies(iinv, inv)

    primed = PrimedVars(env)
    goal2 = coalesce_action(distribute_prime(fact2, env), primed)
    env2 = env.extended(flex=primed.new_flex_names())

    ob1 = Obligation((), fact1, env, "fol")
    ob2 = Obligation((), goal2, env2, "fol")
    ob3 = Obligation((), fact3, env, "fol")

    table = AtomTable(env)
    ml_facts = tuple(coalesce_ml(f, env, table)
                     for f in (fact1, fact2, fact3))
    goal8 = Implies(and_(init, Nabla(boxed_step(next_, spec.vars))),
                    Nabla(inv))
    ml_goal = coalesce_ml(goal8, env, table)
    stab = hypotheses(table, env, include_prime=True)
    glue = MLSequent(hypotheses=ml_facts + stab, goal=ml_goal)

    return SafetyResult((ob1, ob2, ob3), glue, table, dict(primed.mapping))
