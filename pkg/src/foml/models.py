"""Finite models: Kripke models, first-order structures, propositional
Kripke models, and the s-expression model-file format.

Universe elements and states are plain atoms (ints or strings).  The
interpretation of the modality is not stored: it is fixed by its defining
condition (a set of values maps to tt iff it is included in {tt}).
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping, Optional, Union

from .parser import ProblemError, SAtom, SList, SNode, read_sexprs
from .syntax import FomlError

Value = Union[int, str]


def _parse_atom_value(text: str) -> Value:
    try:
        return int(text)
    except ValueError:
        return text


def _fmt(v: Value) -> str:
    return str(v)


@dataclass(frozen=True, eq=True)
class KripkeModel:
    universe: tuple[Value, ...]
    tt: Value
    ff: Value
    op_interp: Mapping[str, Mapping[tuple[Value, ...], Value]]
    xi: Mapping[str, Value]
    states: tuple[Value, ...]
    R: frozenset[tuple[Value, Value]]
    zeta: Mapping[tuple[str, Value], Value]
    primeR: Optional[frozenset[tuple[Value, Value]]] = None

    def validate(self) -> None:
        if self.tt == self.ff:
            raise FomlError("tt and ff must be distinct")
        if self.tt not in self.universe or self.ff not in self.universe:
            raise FomlError("tt and ff must belong to the universe")
        if not self.states:
            raise FomlError("a model needs at least one state")
        udom = set(self.universe)
        for op, table in self.op_interp.items():
            arities = {len(k) for k in table} or {0}
            if len(arities) != 1:
                raise FomlError(f"mixed arities in table for {op!r}")
            (n,) = arities
            if len(table) != len(self.universe) ** n:
                raise FomlError(f"table for {op!r} is not total")
            for args, val in table.items():
                if val not in udom or any(a not in udom for a in args):
                    raise FomlError(f"table for {op!r} leaves the universe")

    def successors(self, w: Value, relation: frozenset) -> list[Value]:
        return [t for (s, t) in sorted(relation, key=str) if s == w]

    def prime_is_function(self) -> bool:
        """True iff primeR is a total function on states (TLA next-state
        reading, under which term-level prime is evaluated directly)."""
        if self.primeR is None:
            return False
        counts = {w: 0 for w in self.states}
        for (s, _) in self.primeR:
            counts[s] += 1
        return all(c == 1 for c in counts.values())

    def prime_successor(self, w: Value) -> Value:
        for (s, t) in self.primeR:
            if s == w:
                return t
        raise FomlError(f"state {w!r} has no prime successor")


@dataclass(frozen=True, eq=True)
class FOLStructure:
    """First-order structure over the extended variable set: xi values both
    rigid and flexible variable names."""

    universe: tuple[Value, ...]
    tt: Value
    ff: Value
    op_interp: Mapping[str, Mapping[tuple[Value, ...], Value]]
    xi: Mapping[str, Value]


@dataclass(frozen=True, eq=True)
class PropModel:
    """Propositional Kripke model; zeta is total on atoms x states and
    valued in {tt, ff}."""

    states: tuple[Value, ...]
    R: frozenset[tuple[Value, Value]]
    zeta: Mapping[tuple[str, Value], Value]
    primeR: Optional[frozenset[tuple[Value, Value]]] = None
    tt: Value = "tt"
    ff: Value = "ff"

    def atoms(self) -> tuple[str, ...]:
        seen: list[str] = []
        for (a, _w) in self.zeta:
            if a not in seen:
                seen.append(a)
        return tuple(seen)


def serialize_model(m: KripkeModel) -> str:
    parts = [f"(universe {' '.join(_fmt(v) for v in m.universe)})",
             f"(tt {_fmt(m.tt)})",
             f"(ff {_fmt(m.ff)})"]
    for op, table in m.op_interp.items():
        rows = " ".join(
            f"(row {' '.join(_fmt(a) for a in args)}"
            f"{' ' if args else ''}{_fmt(val)})"
            for args, val in sorted(table.items(), key=lambda kv: str(kv[0]))
        )
        parts.append(f"(op {op} {rows})")
    if m.xi:
        rows = " ".join(f"({x} {_fmt(v)})" for x, v in sorted(m.xi.items()))
        parts.append(f"(xi {rows})")
    parts.append(f"(states {' '.join(_fmt(s) for s in m.states)})")
    rel = " ".join(f"({_fmt(s)} {_fmt(t)})"
                   for s, t in sorted(m.R, key=str))
    parts.append(f"(R {rel})" if rel else "(R)")
    if m.zeta:
        rows = " ".join(
            f"({v} {_fmt(w)} {_fmt(val)})"
            for (v, w), val in sorted(m.zeta.items(), key=lambda kv: str(kv))
        )
        parts.append(f"(zeta {rows})")
    if m.primeR is not None:
        rel = " ".join(f"({_fmt(s)} {_fmt(t)})"
                       for s, t in sorted(m.primeR, key=str))
        parts.append(f"(primeR {rel})" if rel else "(primeR)")
    body = "\n  ".join(parts)
    return f"(model\n  {body})\n"


def _expect_list(node: SNode, what: str) -> SList:
    if not isinstance(node, SList):
        raise ProblemError(f"expected {what}", node.line, node.col)
    return node


def _atom_text(node: SNode, what: str) -> str:
    if not isinstance(node, SAtom):
        raise ProblemError(f"expected {what}", node.line, node.col)
    return node.text


def parse_model(text: str) -> KripkeModel:
    nodes = read_sexprs(text)
    if len(nodes) != 1:
        raise ProblemError("model file must contain exactly one (model ...)")
    top = _expect_list(nodes[0], "(model ...)")
    if not top.items or _atom_text(top.items[0], "model") != "model":
        raise ProblemError("model file must start with (model ...)",
                           top.line, top.col)

    universe: tuple[Value, ...] = ()
    tt: Optional[Value] = None
    ff: Optional[Value] = None
    ops: dict[str, dict[tuple[Value, ...], Value]] = {}
    xi: dict[str, Value] = {}
    states: tuple[Value, ...] = ()
    R: Optional[frozenset] = None
    zeta: dict[tuple[str, Value], Value] = {}
    primeR: Optional[frozenset] = None

    def pairs(items) -> frozenset:
        rel = set()
        for it in items:
            lst = _expect_list(it, "a state pair")
            if len(lst.items) != 2:
                raise ProblemError("state pair needs two states",
                                   lst.line, lst.col)
            rel.add((_parse_atom_value(_atom_text(lst.items[0], "a state")),
                     _parse_atom_value(_atom_text(lst.items[1], "a state"))))
        return frozenset(rel)

    for section in top.items[1:]:
        lst = _expect_list(section, "a model section")
        if not lst.items:
            raise ProblemError("empty model section", lst.line, lst.col)
        head = _atom_text(lst.items[0], "a section name")
        body = lst.items[1:]
        if head == "universe":
            universe = tuple(
                _parse_atom_value(_atom_text(n, "a value")) for n in body)
        elif head == "tt":
            tt = _parse_atom_value(_atom_text(body[0], "a value"))
        elif head == "ff":
            ff = _parse_atom_value(_atom_text(body[0], "a value"))
        elif head == "op":
            name = _atom_text(body[0], "an operator name")
            table: dict[tuple[Value, ...], Value] = {}
            for row in body[1:]:
                r = _expect_list(row, "(row args.. value)")
                if not r.items or _atom_text(r.items[0], "row") != "row":
                    raise ProblemError("expected (row ...)", r.line, r.col)
                vals = [_parse_atom_value(_atom_text(n, "a value"))
                        for n in r.items[1:]]
                if not vals:
                    raise ProblemError("row needs a value", r.line, r.col)
                table[tuple(vals[:-1])] = vals[-1]
            ops[name] = table
        elif head == "xi":
            for row in body:
                r = _expect_list(row, "(x value)")
                xi[_atom_text(r.items[0], "a variable")] = \
                    _parse_atom_value(_atom_text(r.items[1], "a value"))
        elif head == "states":
            states = tuple(
                _parse_atom_value(_atom_text(n, "a state")) for n in body)
        elif head == "R":
            R = pairs(body)
        elif head == "primeR":
            primeR = pairs(body)
        elif head == "zeta":
            for row in body:
                r = _expect_list(row, "(v state value)")
                if len(r.items) != 3:
                    raise ProblemError("(zeta (v state value) ...)",
                                       r.line, r.col)
                v = _atom_text(r.items[0], "a flexible variable")
                w = _parse_atom_value(_atom_text(r.items[1], "a state"))
                val = _parse_atom_value(_atom_text(r.items[2], "a value"))
                zeta[(v, w)] = val
        else:
            raise ProblemError(f"unknown model section {head!r}",
                               lst.line, lst.col)

    if tt is None or ff is None or not universe or not states or R is None:
        raise ProblemError(
            "model file needs universe, tt, ff, states and R sections")
    m = KripkeModel(universe=universe, tt=tt, ff=ff, op_interp=ops, xi=xi,
                    states=states, R=R, zeta=zeta, primeR=primeR)
    m.validate()
    return m


def propmodel_as_kripke(k: PropModel) -> KripkeModel:
    """View a propositional model as a Kripke model over the two-element
    universe {tt, ff}; used to print prover countermodels in the model-file
    format."""
    return KripkeModel(
        universe=(k.tt, k.ff),
        tt=k.tt,
        ff=k.ff,
        op_interp={},
        xi={},
        states=k.states,
        R=k.R,
        zeta=dict(k.zeta),
        primeR=k.primeR,
    )


def kripke_as_propmodel(m: KripkeModel) -> PropModel:
    """Inverse view, for reading back printed prover countermodels."""
    return PropModel(states=m.states, R=m.R, zeta=dict(m.zeta),
                     primeR=m.primeR, tt=m.tt, ff=m.ff)


def with_xi(m: KripkeModel, extra: Mapping[str, Value]) -> KripkeModel:
    if not extra:
        return m
    xi = dict(m.xi)
    xi.update(extra)
    return replace(m, xi=xi)
