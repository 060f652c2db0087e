"""Abstraction of modal subexpressions into first-order logic.

Every nabla/prime subterm is replaced by a fresh operator symbol applied to
the enclosing bound rigid variables that occur free in it; applications of
defined operators are replaced by fresh symbols indexed by the operator and
the epsilon-vector of their non-Leibniz, non-rigid arguments.  Symbols are
interned in a table keyed by the alpha-canonical (de Bruijn) rendering of
the abstracted subterm, so subterms identical up to bound-variable renaming
share one symbol.

The output is a pure first-order expression over the extended variable set:
flexible variables stay in place and become free first-order variables.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from itertools import product
from typing import Optional, Union

from .leibniz import (
    EpsilonEntry,
    LeibnizTable,
    Star,
    classify_args,
    compute_leibniz,
)
from .models import FOLStructure, KripkeModel, Value
from .semantics import eval_expr
from .syntax import (
    FALSE,
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
    alpha_key,
    free_rigid_vars,
    fresh_name,
    is_rigid,
    not_,
)


@dataclass(frozen=True)
class CoalesceConfig:
    # "binder": abstracted variables keep the binder-stack order
    # (innermost first); "appearance": reordered by first occurrence in the
    # abstracted subterm, which identifies more symbols.
    order: str = "binder"


DEFAULT_CONFIG = CoalesceConfig()


@dataclass(frozen=True)
class ModalKey:
    kind: str  # "nabla" | "prime"
    nvars: int
    body: tuple


@dataclass(frozen=True)
class DefKey:
    op: str
    nvars: int
    entries: tuple  # ("star",) or alpha key per argument position


@dataclass(frozen=True)
class SymbolEntry:
    """Interned fresh symbol plus a representative of its key, kept for
    witness construction and pretty-printing."""

    name: str
    arity: int
    key: Union[ModalKey, DefKey]
    zvars: tuple[str, ...]
    node: Optional[Expression] = None  # modal keys: the nabla/prime node
    op: Optional[str] = None  # def keys: the defined operator
    entries: Optional[tuple[EpsilonEntry, ...]] = None


def _digest(key) -> str:
    return hashlib.blake2b(repr(key).encode(), digest_size=4).hexdigest()


@dataclass
class SymbolTable:
    """Bijection between coalescing keys and fresh operator symbols.

    Confined to one obligation's translation; freeze conceptually once the
    translation is done.
    """

    env: DefinitionEnvironment
    entries: dict = field(default_factory=dict)
    _taken: set = field(default_factory=set)
    _leibniz: Optional[LeibnizTable] = None

    @property
    def leibniz(self) -> LeibnizTable:
        if self._leibniz is None:
            self._leibniz = compute_leibniz(self.env)
        return self._leibniz

    def in_order(self) -> tuple[SymbolEntry, ...]:
        return tuple(self.entries.values())

    def _fresh(self, key) -> str:
        base = f"c{len(self.entries)}__{_digest(key)}"
        name = base
        k = 1
        while name in self._taken or self.env.kind(name) is not None:
            name = f"{base}_{k}"
            k += 1
        self._taken.add(name)
        return name

    def intern_modal(self, key: ModalKey, zvars: tuple[str, ...],
                     node: Expression) -> SymbolEntry:
        entry = self.entries.get(key)
        if entry is None:
            entry = SymbolEntry(self._fresh(key), key.nvars, key,
                                zvars, node=node)
            self.entries[key] = entry
        return entry

    def intern_def(self, key: DefKey, zvars: tuple[str, ...], op: str,
                   eps: tuple[EpsilonEntry, ...]) -> SymbolEntry:
        entry = self.entries.get(key)
        if entry is None:
            entry = SymbolEntry(self._fresh(key),
                                len(eps) + key.nvars, key,
                                zvars, op=op, entries=eps)
            self.entries[key] = entry
        return entry

    def as_ops(self) -> dict[str, int]:
        return {e.name: e.arity for e in self.in_order()}


def _dedup_innermost(binders: tuple[str, ...]) -> tuple[str, ...]:
    # A name shadowed by an inner binder cannot bind anything below it.
    seen: set[str] = set()
    out = []
    for b in binders:
        if b not in seen:
            seen.add(b)
            out.append(b)
    return tuple(out)


def _select_zvars(
    binders: tuple[str, ...],
    free_in_body: tuple[str, ...],
    config: CoalesceConfig,
) -> tuple[str, ...]:
    candidates = _dedup_innermost(binders)
    freeset = set(free_in_body)
    z = tuple(b for b in candidates if b in freeset)
    if config.order == "appearance":
        pos = {name: i for i, name in enumerate(free_in_body)}
        z = tuple(sorted(z, key=lambda b: pos[b]))
    return z


def coalesce_fol(
    e: Expression,
    env: DefinitionEnvironment,
    table: SymbolTable,
    binders: tuple[str, ...] = (),
    config: CoalesceConfig = DEFAULT_CONFIG,
) -> Expression:
    """First-order abstraction of e.  `binders` lists the rigid variables
    bound above e, innermost first."""

    def go(e: Expression, binders: tuple[str, ...]) -> Expression:
        match e:
            case RigidVar() | FlexVar() | FalseExpr():
                return e
            case OpApp(op, args):
                return OpApp(op, tuple(go(a, binders) for a in args))
            case Eq(lhs, rhs):
                return Eq(go(lhs, binders), go(rhs, binders))
            case Implies(lhs, rhs):
                return Implies(go(lhs, binders), go(rhs, binders))
            case Forall(var, body):
                return Forall(var, go(body, (var,) + binders))
            case Nabla(body) | Prime(body):
                kind = "nabla" if isinstance(e, Nabla) else "prime"
                z = _select_zvars(binders, free_rigid_vars(body), config)
                key = ModalKey(kind, len(z), alpha_key(e, z))
                entry = table.intern_modal(key, z, e)
                return OpApp(entry.name,
                             tuple(RigidVar(x) for x in z))
            case DefApp(op, args):
                eps = classify_args(op, args, table.leibniz, env)
                concrete_free: list[str] = []
                for ent in eps:
                    if not isinstance(ent, Star):
                        for x in free_rigid_vars(ent):
                            if x not in concrete_free:
                                concrete_free.append(x)
                z = _select_zvars(binders, tuple(concrete_free), config)
                canon = tuple(
                    ("star",) if isinstance(ent, Star)
                    else alpha_key(ent, z)
                    for ent in eps)
                key = DefKey(op, len(z), canon)
                entry = table.intern_def(key, z, op, eps)
                new_args = tuple(go(a, binders) for a in args) + tuple(
                    RigidVar(x) for x in z)
                return OpApp(entry.name, new_args)
        raise InternalError(f"unknown expression node {e!r}")

    return go(e, binders)


@dataclass(frozen=True)
class CoalescedFol:
    hypotheses: tuple[Expression, ...]
    goal: Expression
    table: SymbolTable
    env: DefinitionEnvironment  # original env extended with fresh symbols


def coalesce_obligation_fol(
    ob: Obligation, config: CoalesceConfig = DEFAULT_CONFIG
) -> CoalescedFol:
    """Translate a whole sequent with one shared symbol table, so recurring
    subexpressions share fresh symbols across hypotheses and goal."""
    if ob.mode == "ml":
        raise FomlError("obligation has mode ml, not fol")
    table = SymbolTable(ob.env)
    hyps = tuple(
        coalesce_fol(h, ob.env, table, config=config)
        for h in ob.hypotheses)
    goal = coalesce_fol(ob.goal, ob.env, table, config=config)
    env = ob.env.extended(ops=table.as_ops())
    return CoalescedFol(hyps, goal, table, env)


def rewrite_rigid_box(
    e: Expression,
    env: DefinitionEnvironment,
    reflexive: bool = False,
) -> Expression:
    """Optional pre-coalescing rewrite: at formula positions, a nabla over a
    rigid body is replaced by `nabla false \\/ body` (just `body` when the
    frame is declared reflexive).  Term positions are left alone, where the
    replacement would change the value rather than just the truth.
    """

    def form(e: Expression) -> Expression:
        match e:
            case Nabla(body):
                if is_rigid(body, env):
                    if reflexive:
                        return body
                    return Implies(not_(Nabla(FALSE)), body)
                return Nabla(form(body))
            case Implies(lhs, rhs):
                return Implies(form(lhs), form(rhs))
            case Forall(var, body):
                return Forall(var, form(body))
            case Prime(body):
                return Prime(form(body))
            case _:
                return term(e)

    def term(e: Expression) -> Expression:
        match e:
            case RigidVar() | FlexVar() | FalseExpr():
                return e
            case OpApp(op, args):
                return OpApp(op, tuple(term(a) for a in args))
            case DefApp(op, args):
                return DefApp(op, tuple(term(a) for a in args))
            case Eq(lhs, rhs):
                return Eq(term(lhs), term(rhs))
            case Implies(lhs, rhs):
                # truth-only context even when the node sits under a term
                return Implies(form(lhs), form(rhs))
            case Forall(var, body):
                return Forall(var, form(body))
            case Nabla(body):
                return Nabla(form(body))
            case Prime(body):
                return Prime(form(body))
        raise InternalError(f"unknown expression node {e!r}")

    return form(e)


def build_witness_structure(
    m: KripkeModel,
    w: Value,
    table: SymbolTable,
    env: DefinitionEnvironment,
) -> FOLStructure:
    """The structure extracted from a Kripke model at a state: rigid
    variables keep their values, flexible variables take their value at w,
    and every fresh symbol is interpreted by evaluating its abstracted
    subterm at w under the argument valuation."""
    xi = dict(m.xi)
    for v in env.flex_vars:
        if (v, w) in m.zeta:
            xi[v] = m.zeta[(v, w)]

    op_interp = {op: dict(tbl) for op, tbl in m.op_interp.items()}
    for entry in table.in_order():
        tbl: dict[tuple[Value, ...], Value] = {}
        for argvals in product(m.universe, repeat=entry.arity):
            tbl[argvals] = _interpret_symbol(m, w, entry, argvals, env)
        op_interp[entry.name] = tbl

    return FOLStructure(m.universe, m.tt, m.ff, op_interp, xi)


def _interpret_symbol(
    m: KripkeModel,
    w: Value,
    entry: SymbolEntry,
    argvals: tuple[Value, ...],
    env: DefinitionEnvironment,
) -> Value:
    if entry.node is not None:
        bindings = dict(zip(entry.zvars, argvals))
        return eval_expr(m, w, entry.node, env, bindings)

    # Defined-operator symbol: evaluate d(alpha_1 .. alpha_n) at w where
    # alpha_i is the concrete epsilon entry, or a fresh variable bound to
    # the argument value at star positions.  Fresh variables must avoid the
    # free variables of the concrete entries.
    eps = entry.entries
    n = len(eps)
    star_vals = dict(zip(entry.zvars, argvals[n:]))
    avoid = set(entry.zvars) | env.all_names()
    for ent in eps:
        if not isinstance(ent, Star):
            avoid.update(free_rigid_vars(ent))
    alphas: list[Expression] = []
    bindings = dict(star_vals)
    for i, ent in enumerate(eps):
        if isinstance(ent, Star):
            x = fresh_name(f"p{i}", avoid)
            avoid.add(x)
            alphas.append(RigidVar(x))
            bindings[x] = argvals[i]
        else:
            alphas.append(ent)
    return eval_expr(m, w, DefApp(entry.op, tuple(alphas)), env, bindings)


def pretty_key(entry: SymbolEntry) -> str:
    """Human-readable rendering of a symbol's key for the symbols block."""
    from .printer import print_expr

    zs = " ".join(entry.zvars)
    if entry.node is not None:
        return f"(lambda ({zs}) {print_expr(entry.node)})"
    parts = []
    for ent in entry.entries:
        if isinstance(ent, Star):
            parts.append("*")
        else:
            parts.append(print_expr(ent))
    inner = " ".join([entry.op] + parts)
    if entry.zvars:
        return f"(lambda ({zs}) ({inner}))"
    return f"({inner})"


def symbols_block(table: SymbolTable) -> str:
    lines = ["(symbols"]
    for entry in table.in_order():
        lines.append(f"  ({entry.name} {entry.arity} {pretty_key(entry)})")
    lines.append(")")
    return "\n".join(lines)
