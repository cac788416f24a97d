"""Stratified finite models for weak automaton acceptance.

Level 0 is the monotone function hierarchy over subsets of the rank 0
states.  Level k refines level k-1: base elements are subsets of the
states of rank at most k, and a function belongs to level k only when it
factors through some level k-1 function (applying it and projecting the
result down must agree with projecting the argument down first).  The
three maps down / lift_inf / lift_sup form Galois connections between
adjacent levels, and every element splits into its projection plus a
"new at this level" part extracted by bar.

The fixpoint alternates: greatest on even levels, least on odd ones,
each stage starting from the lifted fixpoint of the level below.  With
constants interpreted from the transition function, evaluating a closed
term of base type at the top level yields exactly the states from which
the automaton accepts the term's Bohm tree.
"""

from __future__ import annotations

from typing import Callable, Optional

from .automata import WAA
from .terms import (
    O,
    Abs,
    App,
    Arrow,
    Const,
    Fix,
    SimpleType,
    Term,
    Var,
    alpha_key,
    free_vars,
)


class ModelError(Exception):
    pass


class LatticeTooLarge(ModelError):
    """A function space grew past the configured element cap."""


DEFAULT_CAP = 200_000


class BaseSet:
    """Element of a base type lattice: a set of automaton states."""

    __slots__ = ("states",)

    def __init__(self, states: frozenset[str]):
        self.states = frozenset(states)

    def __repr__(self) -> str:
        return "BaseSet({" + ",".join(sorted(self.states)) + "})"


class Func:
    def apply(self, arg: "Elem") -> "Elem":
        raise NotImplementedError


Elem = BaseSet | Func


class LazyFunc(Func):
    """Arrow element given by a python function; compared extensionally."""

    __slots__ = ("fn",)

    def __init__(self, fn: Callable[[Elem], Elem]):
        self.fn = fn

    def apply(self, arg: Elem) -> Elem:
        return self.fn(arg)


class Closure(Func):
    """Delayed abstraction body under a captured environment."""

    __slots__ = ("ctx", "k", "var", "body", "env")

    def __init__(self, ctx: "Ctx", k: int, var: str, body: Term, env: dict):
        self.ctx = ctx
        self.k = k
        self.var = var
        self.body = body
        self.env = dict(env)

    def apply(self, arg: Elem) -> Elem:
        return self.ctx.eval(self.body, {**self.env, self.var: arg}, self.k)


class Table(Func):
    """Materialized arrow element: values aligned with the argument lattice."""

    __slots__ = ("lattice", "values", "key")

    def __init__(self, lattice: "Lattice", values: tuple, key=None):
        self.lattice = lattice
        self.values = values
        if key is None:
            key = tuple(v.states if isinstance(v, BaseSet) else v.key for v in values)
        self.key = key

    def apply(self, arg: Elem) -> Elem:
        return self.values[self.lattice.index_of(arg)]


def key_leq(k1, k2) -> bool:
    if isinstance(k1, frozenset):
        return k1 <= k2
    return all(key_leq(a, b) for a, b in zip(k1, k2))


class Lattice:
    """Enumerated carrier of one level at one simple type."""

    def __init__(self, ctx: "Ctx", ty: SimpleType, k: int, elems: list, keys: list):
        self.ctx = ctx
        self.ty = ty
        self.k = k
        self.elems = elems
        self.keys = keys
        self.index = {key: i for i, key in enumerate(keys)}
        self._ups: Optional[list[list[int]]] = None
        self._hasse: Optional[list[list[int]]] = None

    def __len__(self) -> int:
        return len(self.elems)

    def index_of(self, elem: Elem) -> int:
        key = self.ctx.key_of(elem, self.ty, self.k)
        try:
            return self.index[key]
        except KeyError:
            raise ModelError(f"element outside the lattice of {self.ty} at level {self.k}") from None

    def ups(self) -> list[list[int]]:
        if self._ups is None:
            n = len(self.keys)
            self._ups = [
                [j for j in range(n) if key_leq(self.keys[i], self.keys[j])]
                for i in range(n)
            ]
        return self._ups

    def hasse_preds(self) -> list[list[int]]:
        # immediate predecessors; elems are listed in a linear extension
        if self._hasse is None:
            n = len(self.keys)
            below = [
                [j for j in range(n) if j != i and key_leq(self.keys[j], self.keys[i])]
                for i in range(n)
            ]
            self._hasse = []
            for i in range(n):
                maximal = [
                    j
                    for j in below[i]
                    if not any(
                        j != l and key_leq(self.keys[j], self.keys[l]) for l in below[i]
                    )
                ]
                self._hasse.append(maximal)
        return self._hasse


class Ctx:
    """Evaluation context: automaton, lattice cache, and the model operations."""

    def __init__(self, aut: WAA, cap: int = DEFAULT_CAP):
        self.aut = aut
        self.cap = cap
        self._lattices: dict[tuple[SimpleType, int], Lattice] = {}
        self._fix_memo: dict = {}

    # -- state helpers

    def states_up_to(self, k: int) -> frozenset[str]:
        return self.aut.states_up_to(k)

    def states_at(self, k: int) -> frozenset[str]:
        return self.aut.states_at(k)

    # -- canonical keys and comparisons

    def key_of(self, e: Elem, ty: SimpleType, k: int):
        if ty == O:
            if not isinstance(e, BaseSet):
                raise ModelError(f"expected a base element, got {type(e).__name__}")
            return e.states
        if isinstance(e, Table) and e.lattice.ty == ty.arg and e.lattice.k == k:
            return e.key
        arg_lat = self.lattice(ty.arg, k)
        return tuple(self.key_of(e.apply(a), ty.res, k) for a in arg_lat.elems)

    def leq(self, e1: Elem, e2: Elem, ty: SimpleType, k: int) -> bool:
        return key_leq(self.key_of(e1, ty, k), self.key_of(e2, ty, k))

    def join(self, e1: Elem, e2: Elem, ty: SimpleType) -> Elem:
        if ty == O:
            return BaseSet(e1.states | e2.states)
        return LazyFunc(lambda a: self.join(e1.apply(a), e2.apply(a), ty.res))

    def meet(self, e1: Elem, e2: Elem, ty: SimpleType) -> Elem:
        if ty == O:
            return BaseSet(e1.states & e2.states)
        return LazyFunc(lambda a: self.meet(e1.apply(a), e2.apply(a), ty.res))

    def bottom(self, ty: SimpleType, k: int) -> Elem:
        if ty == O:
            return BaseSet(frozenset())
        return LazyFunc(lambda a: self.bottom(ty.res, k))

    def top(self, ty: SimpleType, k: int) -> Elem:
        if ty == O:
            return BaseSet(self.states_up_to(k))
        return LazyFunc(lambda a: self.top(ty.res, k))

    # -- level changing maps

    def down(self, e: Elem, ty: SimpleType, k: int) -> Elem:
        """Project a level k element to level k-1."""
        if ty == O:
            return BaseSet(e.states & self.states_up_to(k - 1))
        return LazyFunc(
            lambda a: self.down(e.apply(self.lift_inf(a, ty.arg, k - 1)), ty.res, k)
        )

    def lift_inf(self, e: Elem, ty: SimpleType, k: int) -> Elem:
        """Least refinement of a level k element at level k+1."""
        if ty == O:
            return BaseSet(e.states)
        return LazyFunc(lambda a: self.lift_inf(e.apply(self.down(a, ty.arg, k + 1)), ty.res, k))

    def lift_sup(self, e: Elem, ty: SimpleType, k: int) -> Elem:
        """Greatest refinement of a level k element at level k+1."""
        if ty == O:
            return BaseSet(e.states | self.states_at(k + 1))
        return LazyFunc(lambda a: self.lift_sup(e.apply(self.down(a, ty.arg, k + 1)), ty.res, k))

    def bar(self, e: Elem, ty: SimpleType, k: int) -> Elem:
        """The part of an element that is new at level k."""
        if ty == O:
            return BaseSet(e.states & self.states_at(k))
        return LazyFunc(lambda a: self.bar(e.apply(a), ty.res, k))

    def step(self, d: Elem, e: Elem, arg_ty: SimpleType, res_ty: SimpleType, k: int) -> Elem:
        """Step function: returns e on arguments above d, bottom elsewhere."""
        return LazyFunc(
            lambda a: e if self.leq(d, a, arg_ty, k) else self.bottom(res_ty, k)
        )

    def costep(self, d: Elem, e: Elem, arg_ty: SimpleType, res_ty: SimpleType, k: int) -> Elem:
        """Co-step function: returns e on arguments below d, top elsewhere."""
        return LazyFunc(
            lambda a: e if self.leq(a, d, arg_ty, k) else self.top(res_ty, k)
        )

    # -- lattice enumeration

    def lattice(self, ty: SimpleType, k: int) -> Lattice:
        lat = self._lattices.get((ty, k))
        if lat is None:
            lat = self._build(ty, k)
            self._lattices[(ty, k)] = lat
        return lat

    def _build(self, ty: SimpleType, k: int) -> Lattice:
        if ty == O:
            names = sorted(self.states_up_to(k))
            subsets = []
            for mask in range(1 << len(names)):
                subsets.append(frozenset(names[i] for i in range(len(names)) if mask >> i & 1))
            subsets.sort(key=lambda s: (len(s), tuple(sorted(s))))
            if len(subsets) > self.cap:
                raise LatticeTooLarge(f"{len(subsets)} base elements at level {k}")
            return Lattice(self, ty, k, [BaseSet(s) for s in subsets], subsets)
        return self._build_arrow(ty, k)

    def _build_arrow(self, ty: SimpleType, k: int) -> Lattice:
        arg = self.lattice(ty.arg, k)
        res = self.lattice(ty.res, k)
        preds = arg.hasse_preds()
        res_ups = [set(u) for u in res.ups()]
        res_rank = [sum(1 for j in range(len(res)) if key_leq(res.keys[j], res.keys[i])) for i in range(len(res))]
        all_res = set(range(len(res)))

        assignments: list[tuple[int, ...]] = []
        values: list[int] = []

        def extend(i: int) -> None:
            if i == len(arg):
                assignments.append(tuple(values))
                if len(assignments) > self.cap:
                    raise LatticeTooLarge(
                        f"more than {self.cap} functions {ty} at level {k}"
                    )
                return
            allowed = all_res
            for p in preds[i]:
                allowed = allowed & res_ups[values[p]]
            for v in sorted(allowed):
                values.append(v)
                extend(i + 1)
                values.pop()

        extend(0)
        if k > 0:
            low = self.lattice(ty, k - 1)
            arglow = self.lattice(ty.arg, k - 1)
            lift_index = [
                arg.index_of(self.lift_inf(a1, ty.arg, k - 1)) for a1 in arglow.elems
            ]
            down_index = [
                arglow.index_of(self.down(a, ty.arg, k)) for a in arg.elems
            ]
            kept = []
            for vals in assignments:
                res_elems = [res.elems[v] for v in vals]
                down_keys = [
                    self.key_of(self.down(r, ty.res, k), ty.res, k - 1) for r in res_elems
                ]
                f_down_key = tuple(down_keys[lift_index[i1]] for i1 in range(len(arglow)))
                if f_down_key not in low.index:
                    continue
                if all(down_keys[i] == f_down_key[down_index[i]] for i in range(len(arg))):
                    kept.append(vals)
            assignments = kept
        assignments.sort(key=lambda vals: (sum(res_rank[v] for v in vals), vals))
        elems = []
        keys = []
        for vals in assignments:
            table = Table(arg, tuple(res.elems[v] for v in vals),
                          key=tuple(res.keys[v] for v in vals))
            elems.append(table)
            keys.append(table.key)
        return Lattice(self, ty, k, elems, keys)

    def materialize(self, e: Elem, ty: SimpleType, k: int) -> Elem:
        if ty == O:
            return BaseSet(e.states)
        if isinstance(e, Table) and e.lattice.ty == ty.arg and e.lattice.k == k:
            return e
        arg_lat = self.lattice(ty.arg, k)
        vals = tuple(self.materialize(e.apply(a), ty.res, k) for a in arg_lat.elems)
        return Table(arg_lat, vals)

    # -- constants

    def const_sem(self, name: str, k: int) -> Elem:
        arity = self.aut.sig.arity(name)
        local = self.states_up_to(k)
        if arity == 0:
            return BaseSet(frozenset(q for q in local if self.aut.tuples(q, name)))

        def finish(args: list[BaseSet]) -> BaseSet:
            hit = frozenset(
                q
                for q in local
                if any(
                    all(comp <= args[j].states for j, comp in enumerate(tup))
                    for tup in self.aut.tuples(q, name)
                )
            )
            return BaseSet(hit)

        def curry(collected: tuple) -> Elem:
            if len(collected) == arity:
                return finish(list(collected))
            return LazyFunc(lambda a: curry(collected + (a,)))

        return curry(())

    # -- fixpoints

    def fixpoint(self, fn: Callable[[Elem], Elem], ty: SimpleType, k: int) -> Elem:
        return self.fixpoint_levels(fn, ty, k)[-1]

    def fixpoint_levels(self, fn: Callable[[Elem], Elem], ty: SimpleType, k: int) -> list[Elem]:
        """All stage fixpoints, from level 0 up to level k.

        Stage j applies the level j projection of fn, starting from the
        lifted stage j-1 result; descending iteration on even levels,
        ascending on odd ones, plain greatest fixpoint at the floor.
        """
        if k == 0:
            start = self.top(ty, 0)
            return [self._iterate(fn, start, ty, 0)]
        low_fn = lambda e1: self.down(fn(self.lift_inf(e1, ty, k - 1)), ty, k)
        levels = self.fixpoint_levels(low_fn, ty, k - 1)
        if k % 2 == 0:
            start = self.lift_sup(levels[-1], ty, k - 1)
        else:
            start = self.lift_inf(levels[-1], ty, k - 1)
        levels.append(self._iterate(fn, start, ty, k))
        return levels

    def _iterate(self, fn: Callable[[Elem], Elem], start: Elem, ty: SimpleType, k: int) -> Elem:
        cur = self.materialize(start, ty, k)
        cur_key = self.key_of(cur, ty, k)
        for _ in range(100_000):
            nxt = self.materialize(fn(cur), ty, k)
            nxt_key = self.key_of(nxt, ty, k)
            if nxt_key == cur_key:
                return cur
            cur, cur_key = nxt, nxt_key
        raise ModelError("fixpoint iteration did not stabilize")

    # -- evaluation

    def eval(self, t: Term, env: dict[str, Elem], k: int) -> Elem:
        if isinstance(t, Var):
            try:
                return env[t.name]
            except KeyError:
                raise ModelError(f"unbound variable {t.name}") from None
        if isinstance(t, Const):
            return self.const_sem(t.name, k)
        if isinstance(t, App):
            fn = self.eval(t.fn, env, k)
            if not isinstance(fn, Func):
                raise ModelError("application of a base element")
            return fn.apply(self.eval(t.arg, env, k))
        if isinstance(t, Abs):
            return Closure(self, k, t.var, t.body, env)
        if isinstance(t, Fix):
            closed = not free_vars(t)
            memo_key = (alpha_key(t), k) if closed else None
            if memo_key is not None and memo_key in self._fix_memo:
                return self._fix_memo[memo_key]
            fn = lambda d: self.eval(t.body, {**env, t.var: d}, k)
            out = self.fixpoint(fn, t.var_ty, k)
            if memo_key is not None:
                self._fix_memo[memo_key] = out
            return out
        raise ModelError(f"cannot evaluate {type(t).__name__}")


def accept_by_model(aut: WAA, t: Term, cap: int = DEFAULT_CAP, ctx: Optional[Ctx] = None) -> frozenset[str]:
    """States from which the automaton accepts the Bohm tree of a closed base term."""
    if free_vars(t):
        raise ModelError("term must be closed")
    if ctx is None:
        ctx = Ctx(aut, cap)
    out = ctx.eval(t, {}, aut.max_rank)
    if not isinstance(out, BaseSet):
        raise ModelError("term must have base type")
    return out.states
