"""Core expression language: AST, environments, substitution, alpha-equivalence.

The core grammar has exactly ten node kinds: rigid variables, flexible
variables, primitive operator applications, defined operator applications,
equality, FALSE, implication, universal quantification over rigid variables,
and the two modalities (nabla and prime).  Every surface connective
(true/not/and/or/iff/exists/delta) is desugared to this core at parse time,
so all later passes only ever see these ten constructors.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Optional


class FomlError(Exception):
    """Base class for user-visible errors raised by this package."""


class InternalError(FomlError):
    """An internal invariant was violated (CLI exit code 70)."""


class Expression:
    """Base class for AST nodes.  All nodes are immutable and hashable."""

    __slots__ = ()

    def __str__(self) -> str:
        from .printer import print_expr

        return print_expr(self)


@dataclass(frozen=True, slots=True)
class RigidVar(Expression):
    name: str


@dataclass(frozen=True, slots=True)
class FlexVar(Expression):
    name: str


@dataclass(frozen=True, slots=True)
class OpApp(Expression):
    op: str
    args: tuple[Expression, ...] = ()


@dataclass(frozen=True, slots=True)
class DefApp(Expression):
    op: str
    args: tuple[Expression, ...] = ()


@dataclass(frozen=True, slots=True)
class Eq(Expression):
    lhs: Expression
    rhs: Expression


@dataclass(frozen=True, slots=True)
class FalseExpr(Expression):
    pass


@dataclass(frozen=True, slots=True)
class Implies(Expression):
    lhs: Expression
    rhs: Expression


@dataclass(frozen=True, slots=True)
class Forall(Expression):
    var: str
    body: Expression


@dataclass(frozen=True, slots=True)
class Nabla(Expression):
    body: Expression


@dataclass(frozen=True, slots=True)
class Prime(Expression):
    body: Expression


FALSE = FalseExpr()


# Derived connectives.  These exist only as constructors; the AST never
# contains them.

def true_() -> Expression:
    return Implies(FALSE, FALSE)


TRUE = true_()


def not_(e: Expression) -> Expression:
    return Implies(e, FALSE)


def and_(*es: Expression) -> Expression:
    if not es:
        return TRUE
    if len(es) == 1:
        return es[0]
    # a /\ b  ==  ~(a => ~b)
    rest = and_(*es[1:])
    return not_(Implies(es[0], not_(rest)))


def or_(*es: Expression) -> Expression:
    if not es:
        return FALSE
    if len(es) == 1:
        return es[0]
    # a \/ b  ==  ~a => b
    return Implies(not_(es[0]), or_(*es[1:]))


def iff_(a: Expression, b: Expression) -> Expression:
    return and_(Implies(a, b), Implies(b, a))


def exists_(var: str, body: Expression) -> Expression:
    return not_(Forall(var, not_(body)))


def delta_(e: Expression) -> Expression:
    return not_(Nabla(not_(e)))


def children(e: Expression) -> tuple[Expression, ...]:
    match e:
        case RigidVar() | FlexVar() | FalseExpr():
            return ()
        case OpApp(_, args) | DefApp(_, args):
            return args
        case Eq(lhs, rhs) | Implies(lhs, rhs):
            return (lhs, rhs)
        case Forall(_, body) | Nabla(body) | Prime(body):
            return (body,)
    raise InternalError(f"unknown expression node {e!r}")


def walk(e: Expression) -> Iterator[Expression]:
    """Yield e and all its subexpressions, depth-first, left to right."""
    yield e
    for c in children(e):
        yield from walk(c)


def free_rigid_vars(e: Expression) -> tuple[str, ...]:
    """Free rigid variables of e, ordered by first occurrence.

    This is the usual syntactic notion: occurrences inside every argument of
    a defined-operator application count, whether or not the definition body
    uses the corresponding parameter.
    """
    out: list[str] = []
    seen: set[str] = set()

    def go(e: Expression, bound: frozenset[str]) -> None:
        match e:
            case RigidVar(name):
                if name not in bound and name not in seen:
                    seen.add(name)
                    out.append(name)
            case Forall(var, body):
                go(body, bound | {var})
            case _:
                for c in children(e):
                    go(c, bound)

    go(e, frozenset())
    return tuple(out)


def free_flex_vars(e: Expression) -> tuple[str, ...]:
    """Flexible variables occurring in e, ordered by first occurrence."""
    out: list[str] = []
    seen: set[str] = set()
    for sub in walk(e):
        if isinstance(sub, FlexVar) and sub.name not in seen:
            seen.add(sub.name)
            out.append(sub.name)
    return tuple(out)


def fresh_name(base: str, avoid: Iterable[str]) -> str:
    """Smallest numeric-suffixed variant of base not in avoid."""
    taken = set(avoid)
    if base not in taken:
        return base
    k = 1
    while f"{base}{k}" in taken:
        k += 1
    return f"{base}{k}"


def substitute(e: Expression, sigma: Mapping[str, Expression]) -> Expression:
    """Capture-avoiding substitution of expressions for rigid variables.

    Bound variables are renamed (deterministically, via fresh_name) exactly
    when a free variable of a substituted image would otherwise be captured.
    """
    if not sigma:
        return e

    def go(e: Expression, sigma: dict[str, Expression]) -> Expression:
        match e:
            case RigidVar(name):
                return sigma.get(name, e)
            case FlexVar() | FalseExpr():
                return e
            case OpApp(op, args):
                return OpApp(op, tuple(go(a, sigma) for a in args))
            case DefApp(op, args):
                return DefApp(op, tuple(go(a, sigma) for a in args))
            case Eq(lhs, rhs):
                return Eq(go(lhs, sigma), go(rhs, sigma))
            case Implies(lhs, rhs):
                return Implies(go(lhs, sigma), go(rhs, sigma))
            case Nabla(body):
                return Nabla(go(body, sigma))
            case Prime(body):
                return Prime(go(body, sigma))
            case Forall(var, body):
                body_free = set(free_rigid_vars(body))
                live = {
                    k: v
                    for k, v in sigma.items()
                    if k != var and k in body_free
                }
                if not live:
                    return e
                image_free: set[str] = set()
                for img in live.values():
                    image_free.update(free_rigid_vars(img))
                if var in image_free:
                    var2 = fresh_name(
                        var, body_free | image_free | set(live)
                    )
                    live[var] = RigidVar(var2)
                    return Forall(var2, go(body, live))
                return Forall(var, go(body, live))
        raise InternalError(f"unknown expression node {e!r}")

    return go(e, dict(sigma))


def alpha_key(e: Expression, binders: tuple[str, ...] = ()) -> tuple:
    """Canonical de Bruijn rendering of e.

    Bound rigid variables become indices (innermost binder is 0); free rigid
    and flexible variables keep their names.  `binders` (innermost first)
    lets callers treat additional variables as abstracted, which is how
    coalescing keys are formed.  Two expressions are alpha-equivalent iff
    their keys are equal.
    """
    match e:
        case RigidVar(name):
            try:
                return ("b", binders.index(name))
            except ValueError:
                return ("x", name)
        case FlexVar(name):
            return ("v", name)
        case OpApp(op, args):
            return ("op", op, *(alpha_key(a, binders) for a in args))
        case DefApp(op, args):
            return ("def", op, *(alpha_key(a, binders) for a in args))
        case Eq(lhs, rhs):
            return ("eq", alpha_key(lhs, binders), alpha_key(rhs, binders))
        case FalseExpr():
            return ("false",)
        case Implies(lhs, rhs):
            return ("imp", alpha_key(lhs, binders), alpha_key(rhs, binders))
        case Forall(var, body):
            return ("all", alpha_key(body, (var,) + binders))
        case Nabla(body):
            return ("nabla", alpha_key(body, binders))
        case Prime(body):
            return ("prime", alpha_key(body, binders))
    raise InternalError(f"unknown expression node {e!r}")


def alpha_equal(e1: Expression, e2: Expression) -> bool:
    return alpha_key(e1) == alpha_key(e2)


@dataclass(frozen=True)
class Definition:
    """An operator definition d(x1..xn) == body.

    Parameters are pairwise-distinct rigid variable names; the body's free
    rigid variables must all be parameters, and the body may only apply
    operators declared or defined earlier.
    """

    name: str
    params: tuple[str, ...]
    body: Expression


@dataclass(frozen=True)
class DefinitionEnvironment:
    """Declared signature: primitive operators, variables, definitions."""

    ops: Mapping[str, int]
    rigid_vars: tuple[str, ...] = ()
    flex_vars: tuple[str, ...] = ()
    definitions: tuple[Definition, ...] = ()

    @staticmethod
    def build(
        ops: Mapping[str, int] | None = None,
        rigid: Iterable[str] = (),
        flex: Iterable[str] = (),
        definitions: Iterable[Definition] = (),
    ) -> "DefinitionEnvironment":
        env = DefinitionEnvironment(
            ops=dict(ops or {}),
            rigid_vars=tuple(rigid),
            flex_vars=tuple(flex),
            definitions=tuple(definitions),
        )
        env.validate()
        return env

    def validate(self) -> None:
        seen: set[str] = set()
        for name in (
            list(self.ops)
            + list(self.rigid_vars)
            + list(self.flex_vars)
            + [d.name for d in self.definitions]
        ):
            if name in seen:
                raise FomlError(f"duplicate declaration of {name!r}")
            seen.add(name)
        known_defs: set[str] = set()
        for d in self.definitions:
            if len(set(d.params)) != len(d.params):
                raise FomlError(
                    f"definition {d.name!r} has repeated parameters"
                )
            stray = [
                x for x in free_rigid_vars(d.body) if x not in d.params
            ]
            if stray:
                raise FomlError(
                    f"definition {d.name!r} body has free rigid variables "
                    f"not among its parameters: {', '.join(stray)}"
                )
            for sub in walk(d.body):
                if isinstance(sub, DefApp) and sub.op not in known_defs:
                    raise FomlError(
                        f"definition {d.name!r} refers to {sub.op!r}, "
                        "which is not defined earlier"
                    )
            known_defs.add(d.name)

    def definition(self, name: str) -> Definition:
        for d in self.definitions:
            if d.name == name:
                return d
        raise FomlError(f"no definition named {name!r}")

    def arity(self, name: str) -> int:
        if name in self.ops:
            return self.ops[name]
        return len(self.definition(name).params)

    def kind(self, name: str) -> Optional[str]:
        if name in self.ops:
            return "op"
        if name in self.rigid_vars:
            return "rigid"
        if name in self.flex_vars:
            return "flex"
        if any(d.name == name for d in self.definitions):
            return "def"
        return None

    def all_names(self) -> set[str]:
        names = set(self.ops) | set(self.rigid_vars) | set(self.flex_vars)
        names.update(d.name for d in self.definitions)
        return names

    def extended(
        self,
        ops: Mapping[str, int] | None = None,
        rigid: Iterable[str] = (),
        flex: Iterable[str] = (),
        definitions: Iterable[Definition] = (),
    ) -> "DefinitionEnvironment":
        new_ops = dict(self.ops)
        new_ops.update(ops or {})
        return DefinitionEnvironment.build(
            ops=new_ops,
            rigid=tuple(self.rigid_vars) + tuple(rigid),
            flex=tuple(self.flex_vars) + tuple(flex),
            definitions=tuple(self.definitions) + tuple(definitions),
        )


@dataclass(frozen=True)
class Obligation:
    """A sequent: hypotheses (holding at all states) entail the goal."""

    hypotheses: tuple[Expression, ...]
    goal: Expression
    env: DefinitionEnvironment
    mode: str = "fol"  # fol | ml | action

    def all_exprs(self) -> tuple[Expression, ...]:
        return self.hypotheses + (self.goal,)


def expand_definitions(
    e: Expression, env: DefinitionEnvironment
) -> Expression:
    """Replace every defined-operator application by its instantiated body.

    Arguments are expanded first, then substituted capture-avoidingly into
    the body, and the result is expanded again (bodies may apply earlier
    definitions).  Acyclicity of the environment guarantees termination.
    """
    match e:
        case DefApp(op, args):
            d = env.definition(op)
            inst = substitute(
                d.body,
                dict(
                    zip(d.params, (expand_definitions(a, env) for a in args))
                ),
            )
            return expand_definitions(inst, env)
        case RigidVar() | FlexVar() | FalseExpr():
            return e
        case OpApp(op, args):
            return OpApp(
                op, tuple(expand_definitions(a, env) for a in args)
            )
        case Eq(lhs, rhs):
            return Eq(
                expand_definitions(lhs, env), expand_definitions(rhs, env)
            )
        case Implies(lhs, rhs):
            return Implies(
                expand_definitions(lhs, env), expand_definitions(rhs, env)
            )
        case Forall(var, body):
            return Forall(var, expand_definitions(body, env))
        case Nabla(body):
            return Nabla(expand_definitions(body, env))
        case Prime(body):
            return Prime(expand_definitions(body, env))
    raise InternalError(f"unknown expression node {e!r}")


def is_rigid(e: Expression, env: DefinitionEnvironment) -> bool:
    """True iff the full definition expansion of e contains no flexible
    variable and no nabla/prime node.

    Computed without building the expansion: a DefApp is scanned through its
    body with each parameter standing for the rigidity of the corresponding
    argument (substitution preserves every other node of the body).
    """

    def go(e: Expression, param_rigid: Mapping[str, bool]) -> bool:
        match e:
            case RigidVar(name):
                return param_rigid.get(name, True)
            case FlexVar():
                return False
            case Nabla() | Prime():
                return False
            case FalseExpr():
                return True
            case Forall(var, body):
                if var in param_rigid:
                    inner = {
                        k: v for k, v in param_rigid.items() if k != var
                    }
                    return go(body, inner)
                return go(body, param_rigid)
            case DefApp(op, args):
                d = env.definition(op)
                return go(
                    d.body,
                    {
                        p: go(a, param_rigid)
                        for p, a in zip(d.params, args)
                    },
                )
            case _:
                return all(go(c, param_rigid) for c in children(e))

    return go(e, {})


def contains_node(e: Expression, *kinds: type) -> bool:
    return any(isinstance(sub, kinds) for sub in walk(e))


def collect_signature(
    exprs: Iterable[Expression], env: DefinitionEnvironment
) -> tuple[dict[str, int], tuple[str, ...], tuple[str, ...]]:
    """Primitive operators, free rigid variables, and flexible variables
    needed to interpret the given expressions, including everything reachable
    through definition bodies."""
    ops: dict[str, int] = {}
    rigid: list[str] = []
    flex: list[str] = []
    seen_defs: set[str] = set()

    def scan(e: Expression) -> None:
        for sub in walk(e):
            match sub:
                case OpApp(op, _):
                    ops.setdefault(op, env.ops[op])
                case FlexVar(name):
                    if name not in flex:
                        flex.append(name)
                case DefApp(op, _):
                    if op not in seen_defs:
                        seen_defs.add(op)
                        scan(env.definition(op).body)
                case _:
                    pass

    for e in exprs:
        scan(e)
        for x in free_rigid_vars(e):
            if x not in rigid:
                rigid.append(x)
    return ops, tuple(rigid), tuple(flex)
