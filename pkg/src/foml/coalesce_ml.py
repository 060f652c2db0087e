"""Abstraction of first-order subexpressions into propositional modal logic.

Every maximal first-order subexpression (rigid variable, operator or
defined-operator application, equality, quantified formula) becomes a fresh
propositional atom; flexible variables pass through and the propositional
skeleton (false, implication, modalities) is preserved.  Quantified keys
are compared alpha-canonically, so bound-variable renaming does not split
atoms.

The hypothesis set pairs every atom whose source expression is rigid with
the stability law `atom => nabla atom` (and its prime analogue when the
obligation mentions prime).
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from .models import KripkeModel, PropModel, Value
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
    alpha_key,
    contains_node,
    free_flex_vars,
    is_rigid,
)


@dataclass(frozen=True)
class AtomEntry:
    name: str
    source: Expression  # representative first-order subexpression


@dataclass
class AtomTable:
    """Alpha-canonical first-order subexpression -> fresh atom name."""

    env: DefinitionEnvironment
    entries: dict = field(default_factory=dict)
    _taken: set = field(default_factory=set)

    def intern(self, e: Expression) -> AtomEntry:
        key = alpha_key(e)
        entry = self.entries.get(key)
        if entry is None:
            digest = hashlib.blake2b(repr(key).encode(),
                                     digest_size=4).hexdigest()
            base = f"a{len(self.entries)}__{digest}"
            name = base
            k = 1
            while name in self._taken or self.env.kind(name) is not None:
                name = f"{base}_{k}"
                k += 1
            self._taken.add(name)
            entry = AtomEntry(name, e)
            self.entries[key] = entry
        return entry

    def in_order(self) -> tuple[AtomEntry, ...]:
        return tuple(self.entries.values())


def coalesce_ml(
    e: Expression, env: DefinitionEnvironment, table: AtomTable
) -> Expression:
    """Propositional modal abstraction of e."""
    match e:
        case FlexVar():
            return e
        case FalseExpr():
            return e
        case Implies(lhs, rhs):
            return Implies(coalesce_ml(lhs, env, table),
                           coalesce_ml(rhs, env, table))
        case Nabla(body):
            return Nabla(coalesce_ml(body, env, table))
        case Prime(body):
            return Prime(coalesce_ml(body, env, table))
        case RigidVar() | OpApp() | DefApp() | Eq() | Forall():
            return FlexVar(table.intern(e).name)
    raise InternalError(f"unknown expression node {e!r}")


def hypotheses(
    table: AtomTable,
    env: DefinitionEnvironment,
    include_prime: bool = False,
) -> tuple[Expression, ...]:
    """Stability hypotheses, one per atom whose source is rigid."""
    out: list[Expression] = []
    for entry in table.in_order():
        if is_rigid(entry.source, env):
            atom = FlexVar(entry.name)
            out.append(Implies(atom, Nabla(atom)))
            if include_prime:
                out.append(Implies(atom, Prime(atom)))
    return tuple(out)


@dataclass(frozen=True)
class CoalescedMl:
    hypotheses: tuple[Expression, ...]  # translated Gamma
    goal: Expression
    stability: tuple[Expression, ...]  # the H set
    table: AtomTable


def coalesce_obligation_ml(ob: Obligation) -> CoalescedMl:
    """Translate a sequent to propositional modal logic with one shared atom
    table, and produce the hypothesis set for all rigid-source atoms of the
    hypotheses and goal together."""
    table = AtomTable(ob.env)
    hyps = tuple(coalesce_ml(h, ob.env, table) for h in ob.hypotheses)
    goal = coalesce_ml(ob.goal, ob.env, table)
    uses_prime = any(contains_node(e, Prime) for e in ob.all_exprs())
    stab = hypotheses(table, ob.env, include_prime=uses_prime)
    return CoalescedMl(hyps, goal, stab, table)


def build_witness_propmodel(
    m: KripkeModel,
    table: AtomTable,
    env: DefinitionEnvironment,
) -> PropModel:
    """Propositional model over the same states and relations: an atom is
    true at a state exactly when its source expression evaluates to tt
    there, and an original flexible variable is true exactly when its value
    is tt."""
    from .semantics import eval_expr

    zeta: dict[tuple[str, Value], str] = {}
    for entry in table.in_order():
        for w in m.states:
            val = eval_expr(m, w, entry.source, env)
            zeta[(entry.name, w)] = "tt" if val == m.tt else "ff"
    for v in env.flex_vars:
        for w in m.states:
            if (v, w) in m.zeta:
                zeta[(v, w)] = "tt" if m.zeta[(v, w)] == m.tt else "ff"
    return PropModel(states=m.states, R=m.R, zeta=zeta, primeR=m.primeR)


def atoms_block(table: AtomTable) -> str:
    from .printer import print_expr

    lines = ["(atoms"]
    for entry in table.in_order():
        lines.append(f"  ({entry.name} {print_expr(entry.source)})")
    lines.append(")")
    return "\n".join(lines)


def ml_atoms_of(e: Expression) -> tuple[str, ...]:
    """Atom names occurring in a propositional modal formula."""
    return free_flex_vars(e)
