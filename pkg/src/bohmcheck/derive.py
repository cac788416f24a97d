"""Derivation generation from the model, and the combined decision routine.

The generator walks the term carrying a syntactic environment (type
sets), its semantic shadow (model elements), and a goal type set whose
denotation is known to sit below the subterm's value.  Each case builds
a node concluding exactly its goal:

  variables and constants conclude their axiom set, adjusted by one
  subsumption; applications request the full representation of the
  argument's value, trimming each arrow premise to the stratum of its
  result so the application conclusion stays exact; abstractions split
  the goal into groups sharing one premise set and one result stratum.

Fixpoints follow the stage structure of the model's fixpoint.  Each
even stage closes in one split-rule step whose new types are read off
the stage value; each odd stage replays the ascending iteration, one
plain fixpoint rule per step, every conclusion the representation of
the iterate.  A final subsumption lands on the requested goal.

Refutations run the same generator against the dualized automaton and
rename every rule to its mirrored form.  decide computes the accepted
states in the model, then backs them with a positive certificate for
the accepted set and a refutation certificate for the complement, both
validated by the syntactic checker before they are returned.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .automata import WAA, dualize
from .derivations import (
    Derivation,
    DNode,
    POSITIVE_TO_DUAL,
    check_derivation,
)
from .itypes import (
    ArrowT,
    IType,
    StateT,
    TySet,
    interp_set,
    render_itype,
    render_tyset,
    represent,
    stratum,
    tle_set,
    type_apply,
)
from .model import Ctx, Elem
from .terms import (
    Abs,
    App,
    Const,
    Fix,
    SimpleType,
    Term,
    Var,
    free_vars,
    infer_simple_type,
)


class DeriveError(Exception):
    pass


def _trim(s: TySet, j: int, ranks: dict[str, int]) -> TySet:
    return frozenset(t for t in s if stratum(t, ranks) <= j)


def _sorted_types(s: TySet) -> list[IType]:
    return sorted(s, key=render_itype)


@dataclass
class _Site:
    """Everything a goal needs at one subterm address."""

    path: tuple
    env_syn: dict[str, TySet]
    env_sem: dict[str, Elem]
    scope: dict[str, SimpleType]

    def child(self, i: int) -> "_Site":
        return _Site(self.path + (i,), self.env_syn, self.env_sem, self.scope)

    def bind(self, var: str, tyset: TySet, sem: Elem, ty: SimpleType) -> "_Site":
        return _Site(
            self.path,
            {**self.env_syn, var: tyset},
            {**self.env_sem, var: sem},
            {**self.scope, var: ty},
        )


class Deriver:
    """Produces checkable positive derivations over one evaluation context."""

    def __init__(self, ctx: Ctx):
        self.ctx = ctx
        self.aut = ctx.aut
        self.k = ctx.aut.max_rank

    def derive(self, term: Term, target: TySet) -> Derivation:
        if free_vars(term):
            raise DeriveError("term must be closed")
        ty = infer_simple_type(term)
        value = self.ctx.eval(term, {}, self.k)
        goal = interp_set(target, self.ctx, ty, self.k)
        if not self.ctx.leq(goal, value, ty, self.k):
            raise DeriveError("the term does not have the requested types")
        root = self._node(term, _Site((), {}, {}, {}), target)
        return Derivation(term, False, root)

    # each case returns a node concluding exactly the goal s,
    # valid whenever the denotation of s is below the subterm's value here
    def _node(self, sub: Term, site: _Site, s: TySet) -> DNode:
        if isinstance(sub, Var):
            return self._var(sub, site, s)
        if isinstance(sub, Const):
            return self._const(sub, site, s)
        if isinstance(sub, App):
            return self._app(sub, site, s)
        if isinstance(sub, Abs):
            return self._abs(sub, site, s)
        if isinstance(sub, Fix):
            return self._fix(sub, site, s)
        raise DeriveError(f"cannot derive for {type(sub).__name__}")

    def _subsume(self, node: DNode, s: TySet) -> DNode:
        if node.tyset == s:
            return node
        if not tle_set(s, node.tyset):
            raise DeriveError(
                f"goal {render_tyset(s)} not below {render_tyset(node.tyset)}"
            )
        return DNode("Subsume", node.path, dict(node.env), s, [node])

    def _nullary(self, site: _Site) -> DNode:
        return DNode("Intersect", site.path, dict(site.env_syn), frozenset())

    def _var(self, sub: Var, site: _Site, s: TySet) -> DNode:
        have = site.env_syn.get(sub.name, frozenset())
        axiom = DNode("Axiom", site.path, dict(site.env_syn), have)
        return self._subsume(axiom, s)

    def _const(self, sub: Const, site: _Site, s: TySet) -> DNode:
        arity = self.aut.sig.arity(sub.name)
        if arity == 0:
            have = frozenset(
                StateT(q) for q in self.aut.states if self.aut.tuples(q, sub.name)
            )
            node = DNode("ConstNullary", site.path, dict(site.env_syn), have)
            return self._subsume(node, s)
        parts = [self._const_arrow(sub, site, t, arity) for t in _sorted_types(s)]
        if len(parts) == 1 and parts[0].tyset == s:
            return parts[0]
        return DNode("Intersect", site.path, dict(site.env_syn), s, parts)

    def _const_arrow(self, sub: Const, site: _Site, t: IType, arity: int) -> DNode:
        prems: list[frozenset[str]] = []
        walk: IType = t
        for _ in range(arity):
            if not isinstance(walk, ArrowT) or not all(
                isinstance(g, StateT) for g in walk.prems
            ):
                raise DeriveError(f"{render_itype(t)} does not fit a letter")
            prems.append(frozenset(g.state for g in walk.prems))
            walk = walk.res
        if not isinstance(walk, StateT):
            raise DeriveError(f"{render_itype(t)} does not fit a letter")
        choices = sorted(
            self.aut.tuples(walk.state, sub.name),
            key=lambda tup: tuple(tuple(sorted(c)) for c in tup),
        )
        for tup in choices:
            if all(tup[i] <= prems[i] for i in range(arity)):
                exact: IType = walk
                for comp in reversed(tup):
                    exact = ArrowT(frozenset(StateT(q) for q in comp), exact)
                node = DNode("ConstTrans", site.path, dict(site.env_syn), frozenset([exact]))
                return self._subsume(node, frozenset([t]))
        raise DeriveError(f"no transition supports {render_itype(t)}")

    def _app(self, sub: App, site: _Site, s: TySet) -> DNode:
        fn_ty = infer_simple_type(sub.fn, site.scope)
        arg_ty = fn_ty.arg
        arg_val = self.ctx.eval(sub.arg, site.env_sem, self.k)
        t_arg = represent(arg_val, self.ctx, arg_ty, self.k)
        u = frozenset(
            ArrowT(_trim(t_arg, stratum(t, self.aut.ranks), self.aut.ranks), t)
            for t in s
        )
        pf = self._node(sub.fn, site.child(0), u)
        pa = self._node(sub.arg, site.child(1), t_arg)
        if type_apply(pf.tyset, pa.tyset) != s:
            raise DeriveError("application conclusion drifted from the goal")
        return DNode("App", site.path, dict(site.env_syn), s, [pf, pa])

    def _abs(self, sub: Abs, site: _Site, s: TySet) -> DNode:
        if not s:
            return self._nullary(site)
        groups: dict[tuple, list[ArrowT]] = {}
        for t in _sorted_types(s):
            if not isinstance(t, ArrowT):
                raise DeriveError("abstraction goal must be arrows")
            key = (render_tyset(t.prems), stratum(t.res, self.aut.ranks))
            groups.setdefault(key, []).append(t)
        parts = []
        for key in sorted(groups):
            arrows = groups[key]
            prems = arrows[0].prems
            results = frozenset(t.res for t in arrows)
            inner = site.child(0).bind(
                sub.var,
                prems,
                interp_set(prems, self.ctx, sub.var_ty, self.k),
                sub.var_ty,
            )
            body = self._node(sub.body, inner, results)
            parts.append(DNode("Abs", site.path, dict(site.env_syn), frozenset(arrows), [body]))
        if len(parts) == 1:
            return parts[0]
        return DNode("Intersect", site.path, dict(site.env_syn), s, parts)

    def _fix(self, sub: Fix, site: _Site, s: TySet) -> DNode:
        fty = sub.var_ty
        fn = lambda d: self.ctx.eval(sub.body, {**site.env_sem, sub.var: d}, self.k)
        levels = self.ctx.fixpoint_levels(fn, fty, self.k)
        reps = [represent(levels[j], self.ctx, fty, j) for j in range(self.k + 1)]
        lam = Abs(sub.var, fty, sub.body)
        node: Optional[DNode] = None
        for j in range(self.k + 1):
            prev_set = reps[j - 1] if j else frozenset()
            if j % 2 == 0:
                node = self._fix_even(lam, site, reps[j], prev_set, node)
            else:
                node = self._fix_odd(sub, lam, site, j, levels, reps, node, fty)
        return self._subsume(node, s)

    def _fix_even(self, lam: Abs, site: _Site, cur: TySet, prev_set: TySet,
                  prev: Optional[DNode]) -> DNode:
        new = cur - prev_set
        if prev is None:
            prev = self._nullary(site)
        if new:
            arrows = frozenset(ArrowT(cur, g) for g in new)
            p1 = self._abs(lam, site.child(0), arrows)
        else:
            p1 = self._nullary(site.child(0))
        return DNode("YEven", site.path, dict(site.env_syn), cur, [p1, prev])

    def _fix_odd(self, sub: Fix, lam: Abs, site: _Site, j: int, levels, reps,
                 prev: DNode, fty: SimpleType) -> DNode:
        fj = self._level_fn(sub, site, fty, j)
        d = self.ctx.materialize(self.ctx.lift_inf(levels[j - 1], fty, j - 1), fty, j)
        t_cur = represent(d, self.ctx, fty, j)
        if t_cur != prev.tyset:
            raise DeriveError("stage start does not match the previous conclusion")
        node = prev
        key = self.ctx.key_of(d, fty, j)
        for _ in range(100_000):
            d_next = self.ctx.materialize(fj(d), fty, j)
            key_next = self.ctx.key_of(d_next, fty, j)
            if key_next == key:
                break
            t_next = represent(d_next, self.ctx, fty, j)
            u = frozenset(
                ArrowT(_trim(t_cur, stratum(t, self.aut.ranks), self.aut.ranks), t)
                for t in t_next
            )
            pf = self._node(lam, site.child(0), u)
            if type_apply(pf.tyset, node.tyset) != t_next:
                raise DeriveError("fixpoint step drifted from the iterate")
            node = DNode("YOdd", site.path, dict(site.env_syn), t_next, [pf, node])
            d, key, t_cur = d_next, key_next, t_next
        else:
            raise DeriveError("fixpoint iteration did not stabilize")
        if t_cur != reps[j]:
            raise DeriveError("stage end does not match the stage value")
        return node

    def _level_fn(self, sub: Fix, site: _Site, fty: SimpleType, j: int):
        fn = lambda d: self.ctx.eval(sub.body, {**site.env_sem, sub.var: d}, self.k)
        for level in range(self.k, j, -1):
            fn = (
                lambda e, inner=fn, level=level: self.ctx.down(
                    inner(self.ctx.lift_inf(e, fty, level - 1)), fty, level
                )
            )
        return fn


def _transliterate(node: DNode) -> None:
    node.rule = POSITIVE_TO_DUAL[node.rule]
    for p in node.premises:
        _transliterate(p)


def derive_positive(aut: WAA, term: Term, target: TySet,
                    ctx: Optional[Ctx] = None, cap: Optional[int] = None) -> Derivation:
    """A checkable derivation that the term has every type in the target."""
    if ctx is None:
        ctx = Ctx(aut, cap) if cap else Ctx(aut)
    return Deriver(ctx).derive(term, target)


def derive_refutation(aut: WAA, term: Term, target: TySet,
                      ctx: Optional[Ctx] = None, cap: Optional[int] = None) -> Derivation:
    """A checkable derivation that the term has no type in the target.

    The context, when supplied, must be over the dualized automaton.
    """
    if ctx is None:
        dual = dualize(aut, cap) if cap else dualize(aut)
        ctx = Ctx(dual, cap) if cap else Ctx(dual)
    try:
        deriv = Deriver(ctx).derive(term, target)
    except DeriveError as e:
        if "does not have" in str(e):
            raise DeriveError(
                "the term has one of the target types, so they cannot be refuted"
            ) from None
        raise
    _transliterate(deriv.root)
    return Derivation(term, True, deriv.root)


@dataclass
class Decision:
    """Outcome of the full pipeline for one closed term of base type."""

    value: frozenset[str]
    accepted: bool
    positive: Derivation
    refutation: Derivation


def decide(aut: WAA, term: Term, cap: Optional[int] = None, check: bool = True) -> Decision:
    """Accepted states with mutually checking certificates for both sides."""
    ctx = Ctx(aut, cap) if cap else Ctx(aut)
    out = ctx.eval(term, {}, aut.max_rank)
    value = out.states
    pos = derive_positive(aut, term, frozenset(StateT(q) for q in value), ctx=ctx)
    neg = derive_refutation(
        aut, term, frozenset(StateT(q) for q in frozenset(aut.states) - value), cap=cap
    )
    if check:
        if check_derivation(pos, aut) != frozenset(StateT(q) for q in value):
            raise DeriveError("positive certificate failed its check")
        if check_derivation(neg, aut) != frozenset(StateT(q) for q in frozenset(aut.states) - value):
            raise DeriveError("refutation certificate failed its check")
    return Decision(value, aut.initial in value, pos, neg)
