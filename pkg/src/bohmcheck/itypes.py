"""Intersection types over automaton states.

A type is a state q or an arrow S -> t whose premise S is a finite set
of types.  The stratum of q is its rank; the stratum of an arrow is the
stratum of its result.  Well formed arrows never let a premise exceed
the stratum of the result, which is what ties the type system to the
stratified model: a type denotes a step function, a set of types the
join of its members, and every model element is the denotation of the
set produced by represent.

Subsumption compares types structurally (contravariant in premises) and
coincides with the pointwise order on denotations.  Applying a type set
to another keeps the results of arrows whose premises are subsumed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

from .automata import WAA
from .model import BaseSet, Ctx, Elem, LatticeTooLarge
from .terms import O, Arrow, SimpleType


class TypeError_(Exception):
    pass


@dataclass(frozen=True)
class StateT:
    state: str


@dataclass(frozen=True)
class ArrowT:
    prems: frozenset["IType"]
    res: "IType"


IType = StateT | ArrowT
TySet = frozenset[IType]


def arrow(prems, res: IType) -> ArrowT:
    return ArrowT(frozenset(prems), res)


def result_state(t: IType) -> str:
    while isinstance(t, ArrowT):
        t = t.res
    return t.state


def stratum(t: IType, ranks: dict[str, int]) -> int:
    """Rank of the state a type ultimately results in."""
    return ranks[result_state(t)]


def well_formed(t: IType, aut: WAA, ty: SimpleType) -> bool:
    """Shape check: fits the simple type, premises within the result stratum."""
    if isinstance(t, StateT):
        return ty == O and t.state in aut.states
    if ty == O or not isinstance(t, ArrowT):
        return False
    k = stratum(t, aut.ranks) if result_state(t) in aut.states else -1
    if k < 0:
        return False
    for g in t.prems:
        if not well_formed(g, aut, ty.arg):
            return False
        if stratum(g, aut.ranks) > k:
            return False
    return well_formed(t.res, aut, ty.res)


def well_formed_set(s: TySet, aut: WAA, ty: SimpleType) -> bool:
    return all(well_formed(t, aut, ty) for t in s)


# -- subsumption

def tle(s: IType, t: IType) -> bool:
    """s is at most t: same state, or premise-weaker arrow into a smaller result."""
    if isinstance(s, StateT) or isinstance(t, StateT):
        return s == t
    return tle_set(t.prems, s.prems) and tle(s.res, t.res)


def tle_set(s: TySet, t: TySet) -> bool:
    """Every member of s is below some member of t."""
    return all(any(tle(x, y) for y in t) for x in s)


def tyset_eq(s: TySet, t: TySet) -> bool:
    return tle_set(s, t) and tle_set(t, s)


def type_apply(s: TySet, t: TySet) -> TySet:
    """Results of the arrows in s whose premises are covered by t."""
    return frozenset(u.res for u in s if isinstance(u, ArrowT) and tle_set(u.prems, t))


# -- rendering and parsing

def render_itype(t: IType) -> str:
    if isinstance(t, StateT):
        return t.state
    return render_tyset(t.prems) + " -> " + render_itype(t.res)


def render_tyset(s: TySet) -> str:
    return "{" + ", ".join(sorted(render_itype(t) for t in s)) + "}"


def _tokens(text: str) -> Iterator[str]:
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in "{},()":
            yield ch
            i += 1
            continue
        if text.startswith("->", i):
            yield "->"
            i += 2
            continue
        j = i
        while j < len(text) and (text[j].isalnum() or text[j] == "_"):
            j += 1
        if j == i:
            raise TypeError_(f"bad character {ch!r} in type")
        yield text[i:j]
        i = j


class _TyParser:
    def __init__(self, text: str):
        self.toks = list(_tokens(text))
        self.pos = 0

    def peek(self):
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def next(self):
        tok = self.peek()
        if tok is None:
            raise TypeError_("unexpected end of type")
        self.pos += 1
        return tok

    def expect(self, want: str):
        got = self.next()
        if got != want:
            raise TypeError_(f"expected {want!r}, got {got!r}")

    def type_(self) -> IType:
        tok = self.peek()
        if tok == "{":
            prems = self.set_()
            self.expect("->")
            return ArrowT(prems, self.type_())
        if tok == "(":
            self.next()
            t = self.type_()
            self.expect(")")
            return t
        name = self.next()
        if name in ("->", "}", ")", ","):
            raise TypeError_(f"expected a type, got {name!r}")
        return StateT(name)

    def set_(self) -> TySet:
        self.expect("{")
        out = []
        if self.peek() == "}":
            self.next()
            return frozenset()
        out.append(self.type_())
        while self.peek() == ",":
            self.next()
            out.append(self.type_())
        self.expect("}")
        return frozenset(out)

    def done(self):
        if self.pos != len(self.toks):
            raise TypeError_(f"trailing input {self.toks[self.pos]!r} in type")


def parse_itype(text: str) -> IType:
    p = _TyParser(text)
    t = p.type_()
    p.done()
    return t


def parse_tyset(text: str) -> TySet:
    p = _TyParser(text)
    s = p.set_()
    p.done()
    return s


# -- enumeration

def types_at(aut: WAA, ty: SimpleType, k: int, cap: int = 50_000) -> frozenset[IType]:
    """All well formed types of exactly stratum k at a simple type."""
    if ty == O:
        return frozenset(StateT(q) for q in aut.states_at(k))
    prem_pool = types_up_to(aut, ty.arg, k, cap)
    results = types_at(aut, ty.res, k, cap)
    prems_list = list(prem_pool)
    if len(prems_list) > 20:
        raise LatticeTooLarge(f"{len(prems_list)} premise candidates at {ty}")
    out = set()
    for mask in range(1 << len(prems_list)):
        prems = frozenset(prems_list[i] for i in range(len(prems_list)) if mask >> i & 1)
        for r in results:
            out.add(ArrowT(prems, r))
            if len(out) > cap:
                raise LatticeTooLarge(f"more than {cap} types at {ty}")
    return frozenset(out)


def types_up_to(aut: WAA, ty: SimpleType, k: int, cap: int = 50_000) -> frozenset[IType]:
    """All well formed types of stratum at most k at a simple type."""
    out = set()
    for j in range(k + 1):
        out |= types_at(aut, ty, j, cap)
    return frozenset(out)


# -- denotations

def interp(t: IType, ctx: Ctx, ty: SimpleType, k: int) -> Elem:
    """Denotation at level k: states give singletons, arrows step functions."""
    if isinstance(t, StateT):
        present = t.state in ctx.states_up_to(k)
        return BaseSet(frozenset([t.state]) if present else frozenset())
    d = interp_set(t.prems, ctx, ty.arg, k)
    e = interp(t.res, ctx, ty.res, k)
    return ctx.step(d, e, ty.arg, ty.res, k)


def interp_set(s: TySet, ctx: Ctx, ty: SimpleType, k: int) -> Elem:
    out = ctx.bottom(ty, k)
    for t in s:
        out = ctx.join(out, interp(t, ctx, ty, k), ty)
    return out


def dual_interp(t: IType, ctx: Ctx, ty: SimpleType, k: int) -> Elem:
    """Refutation denotation: complements of states, co-step functions."""
    if isinstance(t, StateT):
        return BaseSet(ctx.states_up_to(k) - {t.state})
    d = dual_interp_set(t.prems, ctx, ty.arg, k)
    e = dual_interp(t.res, ctx, ty.res, k)
    return ctx.costep(d, e, ty.arg, ty.res, k)


def dual_interp_set(s: TySet, ctx: Ctx, ty: SimpleType, k: int) -> Elem:
    out = ctx.top(ty, k)
    for t in s:
        out = ctx.meet(out, dual_interp(t, ctx, ty, k), ty)
    return out


# -- from model elements back to type sets

def represent(d: Elem, ctx: Ctx, ty: SimpleType, k: int) -> TySet:
    """A type set denoting exactly d at level k.

    Built stratum by stratum: the part of d explained by level k-1 is
    represented recursively from its projection, and what is new at
    level k becomes arrows recording d's action on every argument.
    """
    if k < 0:
        return frozenset()
    low = represent(ctx.down(d, ty, k), ctx, ty, k - 1) if k > 0 else frozenset()
    return low | new_at(d, ctx, ty, k)


def new_at(d: Elem, ctx: Ctx, ty: SimpleType, k: int) -> TySet:
    """Types of exactly stratum k carried by d."""
    if ty == O:
        return frozenset(StateT(q) for q in d.states & ctx.states_at(k))
    out = set()
    for e in ctx.lattice(ty.arg, k).elems:
        u = represent(e, ctx, ty.arg, k)
        for t in new_at(d.apply(e), ctx, ty.res, k):
            out.add(ArrowT(u, t))
    return frozenset(out)
