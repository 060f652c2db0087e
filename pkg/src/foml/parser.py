"""S-expression reader and problem-file parser.

Problem files are a flat sequence of forms:

    (declare-op name arity)
    (declare-rigid x)
    (declare-flex v)
    (define (d x1 .. xn) body)
    (assume expr)
    (goal expr)
    (mode fol|ml|action)

plus, for transition-system (safety) inputs:

    (init expr) (next expr) (invariant expr) (inductive-invariant expr)
    (vars v1 .. vn)

Expressions use the surface grammar documented in the README; derived
connectives (true, not, and, or, iff, exists, delta) are desugared on the
spot, so parsed ASTs contain only core nodes.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .syntax import (
    FALSE,
    DefApp,
    Definition,
    DefinitionEnvironment,
    Eq,
    Expression,
    FlexVar,
    FomlError,
    Forall,
    Implies,
    Nabla,
    Obligation,
    OpApp,
    Prime,
    RigidVar,
    and_,
    delta_,
    exists_,
    free_rigid_vars,
    iff_,
    not_,
    or_,
    true_,
)


class ProblemError(FomlError):
    """Parse or resolution error, with source position when available."""

    def __init__(self, message: str, line: int | None = None,
                 col: int | None = None):
        self.line = line
        self.col = col
        if line is not None:
            message = f"line {line}, col {col}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class SAtom:
    text: str
    line: int
    col: int


@dataclass(frozen=True)
class SList:
    items: tuple["SNode", ...]
    line: int
    col: int


SNode = Union[SAtom, SList]


def _tokenize(text: str):
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
        elif ch.isspace():
            col += 1
            i += 1
        elif ch == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif ch in "()":
            yield (ch, line, col)
            col += 1
            i += 1
        else:
            start = i
            start_col = col
            while i < n and not text[i].isspace() and text[i] not in "();":
                i += 1
                col += 1
            yield (text[start:i], line, start_col)


def read_sexprs(text: str) -> list[SNode]:
    """Read all top-level s-expressions in text."""
    stack: list[tuple[list[SNode], int, int]] = []
    top: list[SNode] = []
    for tok, line, col in _tokenize(text):
        if tok == "(":
            stack.append(([], line, col))
        elif tok == ")":
            if not stack:
                raise ProblemError("unmatched ')'", line, col)
            items, oline, ocol = stack.pop()
            node = SList(tuple(items), oline, ocol)
            (stack[-1][0] if stack else top).append(node)
        else:
            (stack[-1][0] if stack else top).append(SAtom(tok, line, col))
    if stack:
        _, oline, ocol = stack[-1]
        raise ProblemError("unclosed '('", oline, ocol)
    return top


RESERVED = {
    "declare-op", "declare-rigid", "declare-flex", "define", "assume",
    "goal", "mode", "init", "next", "invariant", "inductive-invariant",
    "vars", "=", "=>", "not", "and", "or", "iff", "forall", "exists",
    "nabla", "delta", "prime", "false", "true", "model", "mlseq",
}


def _atom(node: SNode, what: str) -> SAtom:
    if not isinstance(node, SAtom):
        raise ProblemError(f"expected {what}", node.line, node.col)
    return node


def _check_name(tok: SAtom, what: str) -> str:
    if tok.text in RESERVED:
        raise ProblemError(
            f"{tok.text!r} is reserved and cannot be used as {what}",
            tok.line, tok.col,
        )
    return tok.text


def parse_expression(
    node: SNode,
    env: DefinitionEnvironment,
    bound: tuple[str, ...] = (),
    in_prime: bool = False,
) -> Expression:
    """Parse one expression form, resolving names against env.

    `bound` holds rigid variables bound by enclosing binders (quantifiers or
    definition parameters); they shadow global declarations.
    """
    if isinstance(node, SAtom):
        name = node.text
        if name == "false":
            return FALSE
        if name == "true":
            return true_()
        if name in bound or name in env.rigid_vars:
            return RigidVar(name)
        if name in env.flex_vars:
            return FlexVar(name)
        kind = env.kind(name)
        if kind == "op":
            if env.ops[name] != 0:
                raise ProblemError(
                    f"operator {name!r} has arity {env.ops[name]}, "
                    "bare use needs arity 0", node.line, node.col)
            return OpApp(name, ())
        if kind == "def":
            if env.arity(name) != 0:
                raise ProblemError(
                    f"defined operator {name!r} has arity "
                    f"{env.arity(name)}, bare use needs arity 0",
                    node.line, node.col)
            return DefApp(name, ())
        raise ProblemError(f"unknown symbol {name!r}", node.line, node.col)

    if not node.items:
        raise ProblemError("empty expression", node.line, node.col)
    head = node.items[0]
    rest = node.items[1:]
    if isinstance(head, SList):
        raise ProblemError(
            "expression head must be a symbol", head.line, head.col)
    h = head.text

    def sub(n: SNode, prime: bool = in_prime) -> Expression:
        return parse_expression(n, env, bound, prime)

    def need(k: int, form: str) -> None:
        if len(rest) != k:
            raise ProblemError(
                f"({form} ...) takes {k} argument(s), got {len(rest)}",
                node.line, node.col)

    if h == "=":
        need(2, "=")
        return Eq(sub(rest[0]), sub(rest[1]))
    if h == "=>":
        need(2, "=>")
        return Implies(sub(rest[0]), sub(rest[1]))
    if h == "not":
        need(1, "not")
        return not_(sub(rest[0]))
    if h == "and":
        return and_(*(sub(n) for n in rest))
    if h == "or":
        return or_(*(sub(n) for n in rest))
    if h == "iff":
        need(2, "iff")
        return iff_(sub(rest[0]), sub(rest[1]))
    if h in ("forall", "exists"):
        need(2, h)
        var_tok = _atom(rest[0], f"a variable name after {h}")
        var = _check_name(var_tok, "a bound variable")
        if env.kind(var) in ("flex",):
            raise ProblemError(
                f"cannot quantify over flexible variable {var!r}",
                var_tok.line, var_tok.col)
        body = parse_expression(rest[1], env, (var,) + bound, in_prime)
        return Forall(var, body) if h == "forall" else exists_(var, body)
    if h == "nabla":
        need(1, "nabla")
        return Nabla(sub(rest[0]))
    if h == "delta":
        need(1, "delta")
        return delta_(sub(rest[0]))
    if h == "prime":
        need(1, "prime")
        if in_prime:
            raise ProblemError(
                "prime cannot be nested", node.line, node.col)
        return Prime(sub(rest[0], prime=True))
    if h in ("false", "true"):
        raise ProblemError(
            f"{h} takes no arguments", node.line, node.col)

    kind = env.kind(h)
    if kind in ("op", "def"):
        arity = env.arity(h)
        if len(rest) != arity:
            raise ProblemError(
                f"operator {h!r} has arity {arity}, got {len(rest)} "
                "argument(s)", node.line, node.col)
        args = tuple(sub(n) for n in rest)
        return OpApp(h, args) if kind == "op" else DefApp(h, args)
    if kind in ("rigid", "flex") or h in bound:
        raise ProblemError(
            f"variable {h!r} cannot be applied to arguments",
            node.line, node.col)
    raise ProblemError(f"unknown symbol {h!r}", head.line, head.col)


@dataclass
class ProblemFile:
    """Every form of a problem file, before interpretation as an obligation
    or as a transition-system description."""

    env: DefinitionEnvironment
    assumes: tuple[Expression, ...] = ()
    goal: Optional[Expression] = None
    mode: str = "fol"
    init: Optional[Expression] = None
    next: Optional[Expression] = None
    invariant: Optional[Expression] = None
    inductive_invariant: Optional[Expression] = None
    vars: Optional[tuple[str, ...]] = None


def parse_file(text: str) -> ProblemFile:
    ops: dict[str, int] = {}
    rigid: list[str] = []
    flex: list[str] = []
    defs: list[Definition] = []
    assumes: list[Expression] = []
    single: dict[str, Expression] = {}
    mode: Optional[str] = None
    vars_: Optional[tuple[str, ...]] = None

    def env_now() -> DefinitionEnvironment:
        return DefinitionEnvironment(
            ops=dict(ops), rigid_vars=tuple(rigid),
            flex_vars=tuple(flex), definitions=tuple(defs))

    def declare(tok: SAtom, what: str) -> str:
        name = _check_name(tok, what)
        if env_now().kind(name) is not None:
            raise ProblemError(
                f"{name!r} is already declared", tok.line, tok.col)
        return name

    for form in read_sexprs(text):
        if isinstance(form, SAtom):
            raise ProblemError(
                f"expected a (...) form, got {form.text!r}",
                form.line, form.col)
        if not form.items or not isinstance(form.items[0], SAtom):
            raise ProblemError("malformed form", form.line, form.col)
        head = form.items[0].text
        args = form.items[1:]

        if head == "declare-op":
            if len(args) != 2:
                raise ProblemError("(declare-op name arity)",
                                   form.line, form.col)
            name = declare(_atom(args[0], "an operator name"),
                           "an operator name")
            arity_tok = _atom(args[1], "an arity")
            try:
                arity = int(arity_tok.text)
            except ValueError:
                arity = -1
            if arity < 0:
                raise ProblemError(
                    f"bad arity {arity_tok.text!r}",
                    arity_tok.line, arity_tok.col)
            ops[name] = arity
        elif head == "declare-rigid":
            if len(args) != 1:
                raise ProblemError("(declare-rigid x)", form.line, form.col)
            rigid.append(declare(_atom(args[0], "a variable name"),
                                 "a rigid variable"))
        elif head == "declare-flex":
            if len(args) != 1:
                raise ProblemError("(declare-flex v)", form.line, form.col)
            flex.append(declare(_atom(args[0], "a variable name"),
                                "a flexible variable"))
        elif head == "define":
            if len(args) != 2 or not isinstance(args[0], SList):
                raise ProblemError("(define (d x1 .. xn) body)",
                                   form.line, form.col)
            header = args[0]
            if not header.items:
                raise ProblemError("empty definition header",
                                   header.line, header.col)
            name = declare(_atom(header.items[0], "an operator name"),
                           "a defined operator")
            params = []
            for p in header.items[1:]:
                pname = _check_name(_atom(p, "a parameter name"),
                                    "a parameter")
                if pname in params:
                    raise ProblemError(
                        f"repeated parameter {pname!r}", p.line, p.col)
                params.append(pname)
            body = parse_expression(args[1], env_now(), tuple(params))
            stray = [x for x in free_rigid_vars(body) if x not in params]
            if stray:
                raise ProblemError(
                    f"definition body has free rigid variables not among "
                    f"its parameters: {', '.join(stray)}",
                    form.line, form.col)
            defs.append(Definition(name, tuple(params), body))
        elif head == "assume":
            if len(args) != 1:
                raise ProblemError("(assume expr)", form.line, form.col)
            assumes.append(parse_expression(args[0], env_now()))
        elif head in ("goal", "init", "next", "invariant",
                      "inductive-invariant"):
            if len(args) != 1:
                raise ProblemError(f"({head} expr)", form.line, form.col)
            if head in single:
                raise ProblemError(f"duplicate ({head} ...) form",
                                   form.line, form.col)
            single[head] = parse_expression(args[0], env_now())
        elif head == "mode":
            if len(args) != 1 or not isinstance(args[0], SAtom):
                raise ProblemError("(mode fol|ml|action)",
                                   form.line, form.col)
            if args[0].text not in ("fol", "ml", "action"):
                raise ProblemError(f"unknown mode {args[0].text!r}",
                                   args[0].line, args[0].col)
            if mode is not None:
                raise ProblemError("duplicate (mode ...) form",
                                   form.line, form.col)
            mode = args[0].text
        elif head == "vars":
            names = []
            for a in args:
                tok = _atom(a, "a flexible variable name")
                if tok.text not in flex:
                    raise ProblemError(
                        f"{tok.text!r} is not a declared flexible variable",
                        tok.line, tok.col)
                names.append(tok.text)
            vars_ = tuple(names)
        else:
            raise ProblemError(f"unknown form {head!r}",
                               form.line, form.col)

    return ProblemFile(
        env=env_now(),
        assumes=tuple(assumes),
        goal=single.get("goal"),
        mode=mode or "fol",
        init=single.get("init"),
        next=single.get("next"),
        invariant=single.get("invariant"),
        inductive_invariant=single.get("inductive-invariant"),
        vars=vars_,
    )


def parse_problem(text: str) -> Obligation:
    """Parse a problem file into an obligation.  Requires a (goal ...)."""
    pf = parse_file(text)
    if pf.goal is None:
        raise ProblemError("problem file has no (goal ...) form")
    return Obligation(
        hypotheses=pf.assumes, goal=pf.goal, env=pf.env, mode=pf.mode)


def parse_expr(text: str, env: DefinitionEnvironment) -> Expression:
    """Parse a single expression (convenience entry point for tests)."""
    nodes = read_sexprs(text)
    if len(nodes) != 1:
        raise ProblemError("expected exactly one expression")
    return parse_expression(nodes[0], env)
