"""Simply typed lambda terms with a fixpoint binder, and their Bohm trees.

The term language is Church style: every binder carries its simple type, so
typing is syntax directed.  Tree constants come from a first-order signature
(each constant has type o -> ... -> o).  Reduction is head beta/delta
reduction; Bohm prefixes are produced by repeated head normalization with a
fuel bound and a cycle detector for divergence.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional


class TermError(Exception):
    """Raised for lexical, syntactic, typing, or signature problems."""


# ---------------------------------------------------------------------------
# Simple types


@dataclass(frozen=True)
class SimpleType:
    pass


@dataclass(frozen=True)
class Base(SimpleType):
    def __str__(self) -> str:
        return "o"


@dataclass(frozen=True)
class Arrow(SimpleType):
    arg: SimpleType
    res: SimpleType

    def __str__(self) -> str:
        left = str(self.arg)
        if isinstance(self.arg, Arrow):
            left = f"({left})"
        return f"{left}->{self.res}"


O = Base()


def type_order(ty: SimpleType) -> int:
    if isinstance(ty, Base):
        return 0
    assert isinstance(ty, Arrow)
    return max(type_order(ty.arg) + 1, type_order(ty.res))


def type_arity(ty: SimpleType) -> int:
    n = 0
    while isinstance(ty, Arrow):
        ty = ty.res
        n += 1
    return n


def arg_types(ty: SimpleType) -> list[SimpleType]:
    out = []
    while isinstance(ty, Arrow):
        out.append(ty.arg)
        ty = ty.res
    return out


def first_order_type(arity: int) -> SimpleType:
    ty: SimpleType = O
    for _ in range(arity):
        ty = Arrow(O, ty)
    return ty


class Signature:
    """Maps constant names to their simple types.

    Tree signature: every constant type must be o -> ... -> o, so constants
    label tree nodes whose children are again trees.
    """

    def __init__(self, consts: Mapping[str, SimpleType]):
        for name, ty in consts.items():
            if ty != first_order_type(type_arity(ty)):
                raise TermError(f"constant {name}: type {ty} is not first order over o")
        self._consts = dict(consts)

    def __contains__(self, name: str) -> bool:
        return name in self._consts

    def __getitem__(self, name: str) -> SimpleType:
        return self._consts[name]

    def arity(self, name: str) -> int:
        return type_arity(self._consts[name])

    def names(self) -> list[str]:
        return sorted(self._consts)

    def merged(self, other: "Signature") -> "Signature":
        out = dict(self._consts)
        for name, ty in other._consts.items():
            if name in out and out[name] != ty:
                raise TermError(f"constant {name}: conflicting types {out[name]} and {ty}")
            out[name] = ty
        return Signature(out)


# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class Term:
    pass


@dataclass(frozen=True)
class Var(Term):
    name: str


@dataclass(frozen=True)
class Const(Term):
    name: str
    ty: SimpleType


@dataclass(frozen=True)
class App(Term):
    fn: Term
    arg: Term


@dataclass(frozen=True)
class Abs(Term):
    var: str
    var_ty: SimpleType
    body: Term


@dataclass(frozen=True)
class Fix(Term):
    """Fixpoint binder: Fix(x, A, M) is the fixpoint of fun x:A. M."""

    var: str
    var_ty: SimpleType
    body: Term


def fix_of(m: Term, arg_ty: SimpleType) -> Term:
    """Normalize an applied fixpoint combinator: Y M becomes Y x.(M x)."""
    fresh = _fresh_name("x", free_vars(m))
    return Fix(fresh, arg_ty, App(m, Var(fresh)))


def omega(ty: SimpleType = O) -> Term:
    """The everywhere divergent term at the given type."""
    return Fix("x", ty, Var("x"))


def free_vars(t: Term) -> frozenset[str]:
    if isinstance(t, Var):
        return frozenset([t.name])
    if isinstance(t, Const):
        return frozenset()
    if isinstance(t, App):
        return free_vars(t.fn) | free_vars(t.arg)
    if isinstance(t, (Abs, Fix)):
        return free_vars(t.body) - {t.var}
    raise TypeError(t)


def _fresh_name(base: str, avoid: frozenset[str]) -> str:
    if base not in avoid:
        return base
    n = 1
    while f"{base}{n}" in avoid:
        n += 1
    return f"{base}{n}"


def substitute(t: Term, name: str, s: Term) -> Term:
    """Capture avoiding substitution of s for the free variable name in t."""
    if isinstance(t, Var):
        return s if t.name == name else t
    if isinstance(t, Const):
        return t
    if isinstance(t, App):
        return App(substitute(t.fn, name, s), substitute(t.arg, name, s))
    if isinstance(t, (Abs, Fix)):
        cls = type(t)
        if t.var == name:
            return t
        if t.var in free_vars(s) and name in free_vars(t.body):
            renamed = _fresh_name(t.var, free_vars(s) | free_vars(t.body))
            body = substitute(t.body, t.var, Var(renamed))
            return cls(renamed, t.var_ty, substitute(body, name, s))
        return cls(t.var, t.var_ty, substitute(t.body, name, s))
    raise TypeError(t)


def infer_simple_type(t: Term, env: Optional[Mapping[str, SimpleType]] = None) -> SimpleType:
    """Compute the simple type; raises TermError on ill typed applications."""
    env = dict(env or {})
    if isinstance(t, Var):
        if t.name not in env:
            raise TermError(f"unbound variable {t.name}")
        return env[t.name]
    if isinstance(t, Const):
        return t.ty
    if isinstance(t, App):
        fn_ty = infer_simple_type(t.fn, env)
        arg_ty = infer_simple_type(t.arg, env)
        if not isinstance(fn_ty, Arrow):
            raise TermError(f"applying a term of base type: {render(t)}")
        if fn_ty.arg != arg_ty:
            raise TermError(
                f"argument type mismatch in {render(t)}: expected {fn_ty.arg}, got {arg_ty}"
            )
        return fn_ty.res
    if isinstance(t, Abs):
        env[t.var] = t.var_ty
        return Arrow(t.var_ty, infer_simple_type(t.body, env))
    if isinstance(t, Fix):
        env[t.var] = t.var_ty
        body_ty = infer_simple_type(t.body, env)
        if body_ty != t.var_ty:
            raise TermError(f"fixpoint body type {body_ty} differs from binder type {t.var_ty}")
        return t.var_ty
    raise TypeError(t)


def alpha_key(t: Term, bound: tuple[str, ...] = ()) -> tuple:
    """Canonical de Bruijn style key; equal keys iff alpha equivalent terms."""
    if isinstance(t, Var):
        for i in range(len(bound) - 1, -1, -1):
            if bound[i] == t.name:
                return ("b", len(bound) - 1 - i)
        return ("f", t.name)
    if isinstance(t, Const):
        return ("c", t.name)
    if isinstance(t, App):
        return ("@", alpha_key(t.fn, bound), alpha_key(t.arg, bound))
    if isinstance(t, Abs):
        return ("L", str(t.var_ty), alpha_key(t.body, bound + (t.var,)))
    if isinstance(t, Fix):
        return ("Y", str(t.var_ty), alpha_key(t.body, bound + (t.var,)))
    raise TypeError(t)


def alpha_eq(t: Term, u: Term) -> bool:
    return alpha_key(t) == alpha_key(u)


# ---------------------------------------------------------------------------
# Reduction


def _unfold_fix(t: Fix) -> Term:
    # Y x.M  ->  (fun x.M)(Y x.M)
    return App(Abs(t.var, t.var_ty, t.body), t)


def head_step(t: Term) -> Optional[Term]:
    """One head beta/delta step under the lambda prefix; None if none applies."""
    if isinstance(t, Abs):
        body = head_step(t.body)
        return None if body is None else Abs(t.var, t.var_ty, body)
    if isinstance(t, Fix):
        return _unfold_fix(t)
    if isinstance(t, App):
        spine = [t]
        head = t.fn
        while isinstance(head, App):
            spine.append(head)
            head = head.fn
        if isinstance(head, Abs):
            inner = spine[-1]
            reduced = substitute(head.body, head.var, inner.arg)
            for node in reversed(spine[:-1]):
                reduced = App(reduced, node.arg)
            return reduced
        if isinstance(head, Fix):
            reduced = _unfold_fix(head)
            for node in reversed(spine):
                reduced = App(reduced, node.arg)
            return reduced
        return None
    return None


@dataclass(frozen=True)
class Hnf:
    term: Term


@dataclass(frozen=True)
class Diverges:
    pass


@dataclass(frozen=True)
class Exhausted:
    pass


HnfResult = Hnf | Diverges | Exhausted


def head_normal_form(t: Term, fuel: int = 10_000) -> HnfResult:
    """Iterate head_step up to fuel times.

    A repeated alpha canonical form along the head trace proves divergence
    (sound, not complete); running out of fuel reports Exhausted.
    """
    seen = {alpha_key(t)}
    for _ in range(fuel):
        nxt = head_step(t)
        if nxt is None:
            return Hnf(t)
        t = nxt
        key = alpha_key(t)
        if key in seen:
            return Diverges()
        seen.add(key)
    return Exhausted()


def spine(t: Term) -> tuple[list[tuple[str, SimpleType]], Term, list[Term]]:
    """Split into (lambda prefix, head, arguments)."""
    binders = []
    while isinstance(t, Abs):
        binders.append((t.var, t.var_ty))
        t = t.body
    args: list[Term] = []
    while isinstance(t, App):
        args.append(t.arg)
        t = t.fn
    args.reverse()
    return binders, t, args


# ---------------------------------------------------------------------------
# Bohm prefixes

OMEGA_LABEL = "Ω"


@dataclass(frozen=True)
class BTConst:
    name: str
    children: tuple["BTNode", ...]


@dataclass(frozen=True)
class BTOmega:
    """Head divergence was detected at this node."""


@dataclass(frozen=True)
class BTCutoff:
    """The expansion stopped here: depth bound reached or fuel ran out."""


BTNode = BTConst | BTOmega | BTCutoff


def bohm_prefix(t: Term, depth: int, fuel: int = 10_000) -> BTNode:
    """Depth bounded Bohm tree of a closed term of base type.

    Nodes deeper than depth become Cutoff leaves; so do nodes whose head
    normalization runs out of fuel.  Detected divergence becomes the Omega
    leaf.  Every node of the result is a signature constant applied to its
    children.
    """
    if free_vars(t):
        raise TermError(f"bohm_prefix needs a closed term, free: {sorted(free_vars(t))}")
    ty = infer_simple_type(t)
    if ty != O:
        raise TermError(f"bohm_prefix needs a term of base type, got {ty}")
    return _expand(t, depth, fuel)


def _expand(t: Term, depth: int, fuel: int) -> BTNode:
    if depth <= 0:
        return BTCutoff()
    res = head_normal_form(t, fuel)
    if isinstance(res, Diverges):
        return BTOmega()
    if isinstance(res, Exhausted):
        return BTCutoff()
    binders, head, args = spine(res.term)
    assert not binders and isinstance(head, Const), "closed base type hnf has a constant head"
    children = tuple(_expand(a, depth - 1, fuel) for a in args)
    return BTConst(head.name, children)


def bt_letters(node: BTNode) -> list[str]:
    """Constant labels in preorder; Omega and Cutoff leaves are skipped."""
    if isinstance(node, BTConst):
        out = [node.name]
        for child in node.children:
            out.extend(bt_letters(child))
        return out
    return []


def bt_render(node: BTNode) -> str:
    """Structural one line rendering, used by the machine output format."""
    if isinstance(node, BTConst):
        if not node.children:
            return node.name
        return f"{node.name}({','.join(bt_render(c) for c in node.children)})"
    if isinstance(node, BTOmega):
        return OMEGA_LABEL
    return "?"


def bt_agree(a: BTNode, b: BTNode) -> bool:
    """Prefix agreement: equal where both are expanded, Cutoff matches anything."""
    if isinstance(a, BTCutoff) or isinstance(b, BTCutoff):
        return True
    if isinstance(a, BTOmega) and isinstance(b, BTOmega):
        return True
    if isinstance(a, BTConst) and isinstance(b, BTConst):
        return a.name == b.name and len(a.children) == len(b.children) and all(
            bt_agree(x, y) for x, y in zip(a.children, b.children)
        )
    return False


# ---------------------------------------------------------------------------
# Reduction at arbitrary positions (used by the semantics invariance checks)


def redex_paths(t: Term, path: tuple[int, ...] = ()) -> Iterator[tuple[int, ...]]:
    """Positions where a beta or delta step applies.  Child 0 of an
    application is the function, child 1 the argument; binders have child 0."""
    if isinstance(t, App) and isinstance(t.fn, Abs):
        yield path
    if isinstance(t, Fix):
        yield path
    if isinstance(t, App):
        yield from redex_paths(t.fn, path + (0,))
        yield from redex_paths(t.arg, path + (1,))
    elif isinstance(t, (Abs, Fix)):
        yield from redex_paths(t.body, path + (0,))


def reduce_at(t: Term, path: tuple[int, ...]) -> Term:
    if not path:
        if isinstance(t, App) and isinstance(t.fn, Abs):
            return substitute(t.fn.body, t.fn.var, t.arg)
        if isinstance(t, Fix):
            return _unfold_fix(t)
        raise TermError("no redex at the given position")
    head, rest = path[0], path[1:]
    if isinstance(t, App):
        if head == 0:
            return App(reduce_at(t.fn, rest), t.arg)
        if head == 1:
            return App(t.fn, reduce_at(t.arg, rest))
    elif isinstance(t, (Abs, Fix)) and head == 0:
        return type(t)(t.var, t.var_ty, reduce_at(t.body, rest))
    raise TermError("bad position")


# ---------------------------------------------------------------------------
# Concrete syntax

_SYMBOLS = ("->", "\\", ":", ".", "(", ")")


def _tokenize(text: str) -> list[str]:
    toks = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "#":
            while i < len(text) and text[i] != "\n":
                i += 1
            continue
        if ch.isspace():
            i += 1
            continue
        if text.startswith("->", i):
            toks.append("->")
            i += 2
            continue
        if ch in "\\:.()":
            toks.append(ch)
            i += 1
            continue
        if ch.isalnum() or ch == "_":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] in "_'"):
                j += 1
            toks.append(text[i:j])
            i = j
            continue
        raise TermError(f"unexpected character {ch!r}")
    return toks


class _Parser:
    def __init__(self, toks: list[str]):
        self.toks = toks
        self.pos = 0

    def peek(self) -> Optional[str]:
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def next(self) -> str:
        tok = self.peek()
        if tok is None:
            raise TermError("unexpected end of input")
        self.pos += 1
        return tok

    def expect(self, tok: str) -> None:
        got = self.next()
        if got != tok:
            raise TermError(f"expected {tok!r}, got {got!r}")

    def parse_type(self) -> SimpleType:
        left = self.parse_type_atom()
        if self.peek() == "->":
            self.next()
            return Arrow(left, self.parse_type())
        return left

    def parse_type_atom(self) -> SimpleType:
        tok = self.next()
        if tok == "o":
            return O
        if tok == "(":
            ty = self.parse_type()
            self.expect(")")
            return ty
        raise TermError(f"expected a type, got {tok!r}")

    def parse_term(self) -> "_Raw":
        tok = self.peek()
        if tok == "\\":
            self.next()
            var = self._ident()
            self.expect(":")
            ty = self.parse_type()
            self.expect(".")
            return _RawAbs(var, ty, self.parse_term())
        if tok == "Y":
            self.next()
            var = self._ident()
            self.expect(":")
            ty = self.parse_type()
            self.expect(".")
            return _RawFix(var, ty, self.parse_term())
        atoms = [self.parse_atom()]
        while self._at_atom():
            atoms.append(self.parse_atom())
        out = atoms[0]
        for a in atoms[1:]:
            out = _RawApp(out, a)
        return out

    def _at_atom(self) -> bool:
        tok = self.peek()
        if tok is None or tok in _SYMBOLS or tok == "Y":
            return tok == "("
        return True

    def parse_atom(self) -> "_Raw":
        tok = self.peek()
        if tok == "(":
            self.next()
            t = self.parse_term()
            self.expect(")")
            return t
        return _RawName(self._ident())

    def _ident(self) -> str:
        tok = self.next()
        if tok in _SYMBOLS or tok == "Y":
            raise TermError(f"expected an identifier, got {tok!r}")
        if not (tok[0].isalpha() or tok[0] == "_"):
            raise TermError(f"bad identifier {tok!r}")
        return tok


@dataclass(frozen=True)
class _Raw:
    pass


@dataclass(frozen=True)
class _RawName(_Raw):
    name: str


@dataclass(frozen=True)
class _RawApp(_Raw):
    fn: _Raw
    arg: _Raw


@dataclass(frozen=True)
class _RawAbs(_Raw):
    var: str
    ty: SimpleType
    body: _Raw


@dataclass(frozen=True)
class _RawFix(_Raw):
    var: str
    ty: SimpleType
    body: _Raw


def _resolve(raw: _Raw, sig: Signature, bound: dict[str, SimpleType]) -> Term:
    if isinstance(raw, _RawName):
        if raw.name in bound:
            return Var(raw.name)
        if raw.name in sig:
            return Const(raw.name, sig[raw.name])
        raise TermError(f"unknown name {raw.name} (neither bound nor a signature constant)")
    if isinstance(raw, _RawApp):
        return App(_resolve(raw.fn, sig, bound), _resolve(raw.arg, sig, bound))
    if isinstance(raw, (_RawAbs, _RawFix)):
        cls = Abs if isinstance(raw, _RawAbs) else Fix
        inner = dict(bound)
        inner[raw.var] = raw.ty
        return cls(raw.var, raw.ty, _resolve(raw.body, sig, inner))
    raise TypeError(raw)


def parse_term(text: str, sig: Signature) -> Term:
    """Parse and resolve against the signature; free names must be constants."""
    parser = _Parser(_tokenize(text))
    raw = parser.parse_term()
    if parser.peek() is not None:
        raise TermError(f"trailing input at {parser.peek()!r}")
    term = _resolve(raw, sig, {})
    infer_simple_type(term)
    return term


def parse_type(text: str) -> SimpleType:
    parser = _Parser(_tokenize(text))
    ty = parser.parse_type()
    if parser.peek() is not None:
        raise TermError(f"trailing input at {parser.peek()!r}")
    return ty


# --- signature inference for term-only commands ----------------------------


@dataclass(frozen=True)
class _TyVar(SimpleType):
    n: int


def _unify(a: SimpleType, b: SimpleType, subst: dict[int, SimpleType]) -> None:
    a = _walk(a, subst)
    b = _walk(b, subst)
    if a == b:
        return
    if isinstance(a, _TyVar):
        subst[a.n] = b
        return
    if isinstance(b, _TyVar):
        subst[b.n] = a
        return
    if isinstance(a, Arrow) and isinstance(b, Arrow):
        _unify(a.arg, b.arg, subst)
        _unify(a.res, b.res, subst)
        return
    raise TermError(f"cannot unify {a} with {b}")


def _walk(ty: SimpleType, subst: dict[int, SimpleType]) -> SimpleType:
    while isinstance(ty, _TyVar) and ty.n in subst:
        ty = subst[ty.n]
    return ty


def _resolve_full(ty: SimpleType, subst: dict[int, SimpleType]) -> SimpleType:
    ty = _walk(ty, subst)
    if isinstance(ty, Arrow):
        return Arrow(_resolve_full(ty.arg, subst), _resolve_full(ty.res, subst))
    if isinstance(ty, _TyVar):
        return O  # an unconstrained constant defaults to a leaf
    return ty


def infer_signature(text: str, known: Optional[Signature] = None) -> Signature:
    """Reconstruct constant types from a Church annotated term.

    Binder annotations drive plain unification; the closed term is pinned to
    base type.  Constants already present in `known` keep their types.
    """
    parser = _Parser(_tokenize(text))
    raw = parser.parse_term()
    if parser.peek() is not None:
        raise TermError(f"trailing input at {parser.peek()!r}")
    consts: dict[str, SimpleType] = {}
    subst: dict[int, SimpleType] = {}
    counter = [0]

    def var_for(name: str) -> SimpleType:
        if name not in consts:
            if known is not None and name in known:
                consts[name] = known[name]
            else:
                counter[0] += 1
                consts[name] = _TyVar(counter[0])
        return consts[name]

    def ty_of(r: _Raw, env: dict[str, SimpleType]) -> SimpleType:
        if isinstance(r, _RawName):
            if r.name in env:
                return env[r.name]
            return var_for(r.name)
        if isinstance(r, _RawApp):
            fn_ty = ty_of(r.fn, env)
            arg_ty = ty_of(r.arg, env)
            counter[0] += 1
            res = _TyVar(counter[0])
            _unify(fn_ty, Arrow(arg_ty, res), subst)
            return res
        if isinstance(r, _RawAbs):
            inner = dict(env)
            inner[r.var] = r.ty
            return Arrow(r.ty, ty_of(r.body, inner))
        if isinstance(r, _RawFix):
            inner = dict(env)
            inner[r.var] = r.ty
            _unify(r.ty, ty_of(r.body, inner), subst)
            return r.ty
        raise TypeError(r)

    _unify(ty_of(raw, {}), O, subst)
    return Signature({name: _resolve_full(ty, subst) for name, ty in consts.items()})


# ---------------------------------------------------------------------------
# Rendering


def render(t: Term) -> str:
    """Parseable one line form; parse_term(render(t), sig) is alpha equal to t."""
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Const):
        return t.name
    if isinstance(t, Abs):
        return f"\\{t.var}:{_ty_atom(t.var_ty)}. {render(t.body)}"
    if isinstance(t, Fix):
        return f"Y {t.var}:{_ty_atom(t.var_ty)}. {render(t.body)}"
    if isinstance(t, App):
        return f"{_render_fn(t.fn)} {_render_atom(t.arg)}"
    raise TypeError(t)


def _ty_atom(ty: SimpleType) -> str:
    return str(ty) if isinstance(ty, Base) else f"({ty})"


def _render_fn(t: Term) -> str:
    if isinstance(t, (Abs, Fix)):
        return f"({render(t)})"
    return render(t)


def _render_atom(t: Term) -> str:
    if isinstance(t, (Var, Const)):
        return render(t)
    return f"({render(t)})"
