"""Exhaustive structural checks tying the layers to each other.

Every suite enumerates whole lattices, so a passing run is a proof for
the given automaton and types, not a sample.  The suites back the
selftest subcommand and the property tests; each returns the number of
cases it verified and raises AssertionError with a short message on the
first violation.
"""

from __future__ import annotations

from .automata import WAA
from .itypes import (
    interp,
    interp_set,
    represent,
    stratum,
    tle,
    tle_set,
    type_apply,
    types_up_to,
    well_formed_set,
)
from .model import Ctx, LatticeTooLarge, key_leq
from .terms import O, Arrow, SimpleType


def galois_laws(ctx: Ctx, ty: SimpleType, k: int) -> int:
    """Adjunctions between adjacent levels, plus projection of lifts."""
    if k == 0:
        return 0
    hi = ctx.lattice(ty, k)
    lo = ctx.lattice(ty, k - 1)
    cases = 0
    for d in hi.elems:
        dk = ctx.key_of(d, ty, k)
        down_key = ctx.key_of(ctx.down(d, ty, k), ty, k - 1)
        assert down_key in lo.index, "projection left the lower lattice"
        for e in lo.elems:
            ek = ctx.key_of(e, ty, k - 1)
            sup_key = ctx.key_of(ctx.lift_sup(e, ty, k - 1), ty, k)
            inf_key = ctx.key_of(ctx.lift_inf(e, ty, k - 1), ty, k)
            assert key_leq(down_key, ek) == key_leq(dk, sup_key), "upper adjunction"
            assert key_leq(inf_key, dk) == key_leq(ek, down_key), "lower adjunction"
            cases += 1
    for e in lo.elems:
        ek = ctx.key_of(e, ty, k - 1)
        for lift in (ctx.lift_inf, ctx.lift_sup):
            back = ctx.down(lift(e, ty, k - 1), ty, k)
            assert ctx.key_of(back, ty, k - 1) == ek, "lift then project"
            cases += 1
    return cases


def decomposition(ctx: Ctx, ty: SimpleType, k: int) -> int:
    """Every element is the least lift of its projection joined with its new part."""
    if k == 0:
        return 0
    cases = 0
    for d in ctx.lattice(ty, k).elems:
        low = ctx.lift_inf(ctx.down(d, ty, k), ty, k - 1)
        glued = ctx.join(low, ctx.bar(d, ty, k), ty)
        assert ctx.key_of(glued, ty, k) == ctx.key_of(d, ty, k), "decomposition"
        cases += 1
    return cases


def application_commutation(ctx: Ctx, fty: Arrow, k: int) -> int:
    """Projecting an application equals applying the projections."""
    if k == 0:
        return 0
    cases = 0
    for f in ctx.lattice(fty, k).elems:
        fd = ctx.down(f, fty, k)
        for e in ctx.lattice(fty.arg, k).elems:
            lhs = ctx.key_of(ctx.down(f.apply(e), fty.res, k), fty.res, k - 1)
            rhs = ctx.key_of(fd.apply(ctx.down(e, fty.arg, k)), fty.res, k - 1)
            assert lhs == rhs, "application does not commute with projection"
            cases += 1
    return cases


def fixpoint_stages(ctx: Ctx, ty: SimpleType, k: int) -> int:
    """Stage fixpoints agree with their direct iteration characterization."""
    endo = Arrow(ty, ty)
    cases = 0
    for f in ctx.lattice(endo, k).elems:
        fns = {k: f.apply}
        for j in range(k - 1, -1, -1):
            above = fns[j + 1]
            fns[j] = (
                lambda e, above=above, j=j: ctx.down(
                    above(ctx.lift_inf(e, ty, j)), ty, j + 1
                )
            )
        levels = ctx.fixpoint_levels(f.apply, ty, k)
        cur = ctx.materialize(ctx.top(ty, 0), ty, 0)
        for j in range(k + 1):
            if j > 0:
                lifted = (ctx.lift_sup if j % 2 == 0 else ctx.lift_inf)(cur, ty, j - 1)
                cur = ctx.materialize(lifted, ty, j)
            while True:
                nxt = ctx.materialize(fns[j](cur), ty, j)
                if ctx.key_of(nxt, ty, j) == ctx.key_of(cur, ty, j):
                    break
                cur = nxt
            assert ctx.key_of(levels[j], ty, j) == ctx.key_of(cur, ty, j), (
                f"stage {j} fixpoint disagrees"
            )
            cases += 1
        fixed = f.apply(levels[k])
        assert ctx.key_of(fixed, ty, k) == ctx.key_of(levels[k], ty, k), "not a fixpoint"
    return cases


def represent_roundtrip(ctx: Ctx, ty: SimpleType, k: int) -> int:
    """Every element is the denotation of its representation."""
    cases = 0
    for d in ctx.lattice(ty, k).elems:
        s = represent(d, ctx, ty, k)
        assert well_formed_set(s, ctx.aut, ty), "representation not well formed"
        got = ctx.key_of(interp_set(s, ctx, ty, k), ty, k)
        assert got == ctx.key_of(d, ty, k), "representation denotes a different element"
        cases += 1
    return cases


def subsumption_completeness(ctx: Ctx, ty: SimpleType, k: int) -> int:
    """On represented sets, subsumption coincides with the semantic order."""
    lat = ctx.lattice(ty, k)
    reps = [represent(d, ctx, ty, k) for d in lat.elems]
    cases = 0
    for i, s in enumerate(reps):
        for j, t in enumerate(reps):
            sem = key_leq(lat.keys[i], lat.keys[j])
            assert tle_set(s, t) == sem, "subsumption misses the semantic order"
            cases += 1
    return cases


def subsumption_soundness(ctx: Ctx, ty: SimpleType, k: int, cap: int = 2_000) -> int:
    """On enumerated single types, subsumption implies the semantic order."""
    pool = sorted(types_up_to(ctx.aut, ty, k), key=repr)
    if len(pool) ** 2 > cap:
        pool = pool[: max(2, int(cap ** 0.5))]
    cases = 0
    for s in pool:
        ds = interp(s, ctx, ty, k)
        for t in pool:
            if tle(s, t):
                dt = interp(t, ctx, ty, k)
                assert ctx.leq(ds, dt, ty, k), "subsumption unsound"
            cases += 1
    return cases


def type_application_exactness(ctx: Ctx, fty: Arrow, k: int) -> int:
    """Applying represented sets mirrors applying the elements."""
    cases = 0
    for f in ctx.lattice(fty, k).elems:
        sf = represent(f, ctx, fty, k)
        for e in ctx.lattice(fty.arg, k).elems:
            se = represent(e, ctx, fty.arg, k)
            want = represent(f.apply(e), ctx, fty.res, k)
            assert type_apply(sf, se) == want, "type application drifts"
            cases += 1
    return cases


def level_slicing(ctx: Ctx, ty: SimpleType, k: int) -> int:
    """Stratum slices of a representation represent the projections."""
    ranks = ctx.aut.ranks
    cases = 0
    for d in ctx.lattice(ty, k).elems:
        s = represent(d, ctx, ty, k)
        dd = d
        for j in range(k - 1, -1, -1):
            dd = ctx.down(dd, ty, j + 1)
            sliced = frozenset(t for t in s if stratum(t, ranks) <= j)
            assert sliced == represent(dd, ctx, ty, j), "slice is not the projection"
            cases += 1
    return cases


def run_all(aut: WAA, cap: int = 200_000) -> list[tuple[str, int]]:
    """All suites over base, first and second order types at every level."""
    ctx = Ctx(aut, cap)
    o, oo = O, Arrow(O, O)
    ooo = Arrow(oo, O)
    m = aut.max_rank
    out: list[tuple[str, int]] = []

    def run(name, fn, *args):
        try:
            out.append((name, fn(*args)))
        except LatticeTooLarge:
            out.append((name + " (skipped: lattice too large)", 0))

    for k in range(m + 1):
        for ty, tag in [(o, "base"), (oo, "first order")]:
            run(f"galois laws, {tag}, level {k}", galois_laws, ctx, ty, k)
            run(f"decomposition, {tag}, level {k}", decomposition, ctx, ty, k)
            run(f"represent roundtrip, {tag}, level {k}", represent_roundtrip, ctx, ty, k)
            run(f"subsumption completeness, {tag}, level {k}", subsumption_completeness, ctx, ty, k)
            run(f"level slicing, {tag}, level {k}", level_slicing, ctx, ty, k)
        run(f"application commutation, level {k}", application_commutation, ctx, oo, k)
        run(f"type application, level {k}", type_application_exactness, ctx, oo, k)
        run(f"fixpoint stages, base, level {k}", fixpoint_stages, ctx, o, k)
    run(f"second order represent, level {m}", represent_roundtrip, ctx, ooo, m)
    run(f"second order subsumption, level {m}", subsumption_completeness, ctx, ooo, m)
    run(f"subsumption soundness, level {m}", subsumption_soundness, ctx, oo, m)
    run(f"first order fixpoint stages, level {m}", fixpoint_stages, ctx, oo, m)
    return out
