"""Bounded enumeration of finite models and brute-force countermodel search.

Enumeration order is fixed (universe size, then state count, then valuation
/ table / relation assignments in lexicographic order), so searches are
deterministic and the first countermodel found is reproducible.  Absence of
a countermodel within bounds is reported distinctly from running into the
examination cap.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Callable, Iterable, Iterator, Mapping, Optional, Sequence

from .models import FOLStructure, KripkeModel, PropModel, Value
from .semantics import countermodel_state, eval_fol
from .syntax import (
    DefinitionEnvironment,
    Expression,
    Obligation,
    Prime,
    collect_signature,
    contains_node,
)


@dataclass(frozen=True)
class SearchBounds:
    max_universe: int = 2
    max_states: int = 2
    max_models: int = 2_000_000


@dataclass
class SearchResult:
    status: str  # "found" | "none" | "resource-out"
    model: object = None
    state: object = None
    examined: int = 0

    @property
    def found(self) -> bool:
        return self.status == "found"

    @property
    def exhausted(self) -> bool:
        return self.status == "none"


def _lazy_product(spaces: Sequence[Callable[[], Iterator]]) -> Iterator[tuple]:
    """Cartesian product over factor *generators*, never materializing a
    factor's space (itertools.product would)."""
    if not spaces:
        yield ()
        return
    head, rest = spaces[0], spaces[1:]
    for h in head():
        for r in _lazy_product(rest):
            yield (h,) + r


def _tables_space(
    ops: Mapping[str, int], universe: tuple[Value, ...]
) -> Sequence[Callable[[], Iterator[dict]]]:
    factors = []
    for op in ops:
        arity = ops[op]
        arg_tuples = list(product(universe, repeat=arity))

        def space(op=op, arg_tuples=arg_tuples):
            for values in product(universe, repeat=len(arg_tuples)):
                yield dict(zip(arg_tuples, values))

        factors.append(space)
    return factors


def _relations(states: tuple[Value, ...]) -> Iterator[frozenset]:
    pairs = [(s, t) for s in states for t in states]
    for mask in product((False, True), repeat=len(pairs)):
        yield frozenset(p for p, keep in zip(pairs, mask) if keep)


def _functions(states: tuple[Value, ...]) -> Iterator[frozenset]:
    for image in product(states, repeat=len(states)):
        yield frozenset(zip(states, image))


def enumerate_models(
    ops: Mapping[str, int],
    rigid: Sequence[str],
    flex: Sequence[str],
    max_universe: int = 2,
    max_states: int = 2,
    prime: Optional[str] = None,  # None | "relational" | "functional"
) -> Iterator[KripkeModel]:
    """All Kripke models over the given signature, universes {tt,ff} and
    upward, up to the given bounds."""
    for usize in range(2, max_universe + 1):
        universe = tuple(range(usize))
        tt, ff = 0, 1
        for nstates in range(1, max_states + 1):
            states = tuple(range(nstates))
            flex_keys = [(v, w) for v in flex for w in states]
            for xi_vals in product(universe, repeat=len(rigid)):
                xi = dict(zip(rigid, xi_vals))
                for tables in _lazy_product(_tables_space(ops, universe)):
                    op_interp = dict(zip(ops, tables))
                    for zeta_vals in product(universe,
                                             repeat=len(flex_keys)):
                        zeta = dict(zip(flex_keys, zeta_vals))
                        for R in _relations(states):
                            if prime is None:
                                yield KripkeModel(
                                    universe, tt, ff, op_interp, xi,
                                    states, R, zeta)
                                continue
                            prime_space = (
                                _functions(states)
                                if prime == "functional"
                                else _relations(states))
                            for pR in prime_space:
                                yield KripkeModel(
                                    universe, tt, ff, op_interp, xi,
                                    states, R, zeta, primeR=pR)


def find_countermodel(
    ob: Obligation,
    bounds: SearchBounds = SearchBounds(),
    functional_prime: bool = False,
) -> SearchResult:
    """Exhaustive bounded search for a model satisfying every hypothesis at
    every state while falsifying the goal at some state."""
    ops, rigid, flex = collect_signature(ob.all_exprs(), ob.env)
    needs_prime = any(
        contains_node(e, Prime) for e in ob.all_exprs()) or any(
        contains_node(d.body, Prime) for d in ob.env.definitions)
    prime = None
    if needs_prime:
        prime = "functional" if functional_prime else "relational"
    examined = 0
    for m in enumerate_models(ops, rigid, flex, bounds.max_universe,
                              bounds.max_states, prime):
        examined += 1
        if examined > bounds.max_models:
            return SearchResult("resource-out", examined=examined - 1)
        w = countermodel_state(m, ob)
        if w is not None:
            return SearchResult("found", model=m, state=w,
                                examined=examined)
    return SearchResult("none", examined=examined)


def enumerate_fol_structures(
    ops: Mapping[str, int],
    variables: Sequence[str],
    max_universe: int = 2,
) -> Iterator[FOLStructure]:
    for usize in range(2, max_universe + 1):
        universe = tuple(range(usize))
        for xi_vals in product(universe, repeat=len(variables)):
            xi = dict(zip(variables, xi_vals))
            for tables in _lazy_product(_tables_space(ops, universe)):
                yield FOLStructure(universe, 0, 1,
                                   dict(zip(ops, tables)), xi)


def find_fol_countermodel(
    hypotheses: Sequence[Expression],
    goal: Expression,
    ops: Mapping[str, int],
    variables: Sequence[str],
    bounds: SearchBounds = SearchBounds(),
) -> SearchResult:
    """Bounded search for a first-order structure satisfying the hypotheses
    and falsifying the goal (shared valuation of free variables)."""
    examined = 0
    for s in enumerate_fol_structures(ops, variables, bounds.max_universe):
        examined += 1
        if examined > bounds.max_models:
            return SearchResult("resource-out", examined=examined - 1)
        if all(eval_fol(s, h) == s.tt for h in hypotheses) \
                and eval_fol(s, goal) != s.tt:
            return SearchResult("found", model=s, examined=examined)
    return SearchResult("none", examined=examined)


def fol_signature_of(
    exprs: Iterable[Expression], env: DefinitionEnvironment
) -> tuple[dict[str, int], tuple[str, ...]]:
    """Signature of a coalesced (pure first-order) sequent: operators plus
    the merged free-variable list (rigid then flexible) valued by xi."""
    ops, rigid, flex = collect_signature(exprs, env)
    return ops, rigid + flex


def _frame_ok(R: frozenset, states: tuple, frame: str) -> bool:
    if frame in ("t", "s4"):
        if any((w, w) not in R for w in states):
            return False
    if frame in ("k4", "s4"):
        for (a, b) in R:
            for (c, d) in R:
                if b == c and (a, d) not in R:
                    return False
    return True


def enumerate_propmodels(
    atoms: Sequence[str],
    max_states: int = 3,
    frame: str = "k",
    with_prime: bool = False,
    prime_frame: str = "k",
) -> Iterator[PropModel]:
    """All propositional models up to max_states, restricted to the frame
    class; the oracle side of the prover's agreement property."""
    for nstates in range(1, max_states + 1):
        states = tuple(range(nstates))
        keys = [(a, w) for a in atoms for w in states]
        for R in _relations(states):
            if not _frame_ok(R, states, frame):
                continue
            for vals in product(("tt", "ff"), repeat=len(keys)):
                zeta = dict(zip(keys, vals))
                if not with_prime:
                    yield PropModel(states, R, zeta)
                    continue
                for pR in _relations(states):
                    if _frame_ok(pR, states, prime_frame):
                        yield PropModel(states, R, zeta, primeR=pR)
