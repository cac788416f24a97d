"""Typing derivations and their syntactic checker.

A derivation is a tree of rule applications over subterm addresses of
one fixed term.  Each node records its rule name, the address of the
subterm it types, the environment (type sets for the free variables),
and the concluded type set.  Every rule's conclusion is determined by
its premises, so nodes carry no extra witnesses; the checker recomputes
each conclusion and rejects any deviation.

Positive derivations establish that the term has all types in the
concluded set.  Negated derivations (refutations) use the mirrored rule
names and are checked by rereading them as positive derivations for the
dualized automaton: the rule names drop their D prefix, except that the
split fixpoint rule and the plain fixpoint rule trade places, since
dualizing shifts every rank by one and swaps even with odd strata.

File format, one node per line, children indented two spaces:

    term: (Y F:(o->o)->o. \\g:o->o. g (b (F (\\x:o. g (g x))))) a
    negated: false
    App | | root >= {q2}
      Subsume | | 0 >= {...}
        ...

Columns are rule, environment (semicolon separated x: {...} entries),
and the judgment "path >= tyset" (with !>= in negated files).  Paths are
"root" or dot separated child indices, where a fixpoint binder has one
child, its lambda view.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .automata import WAA, dualize
from .itypes import (
    ArrowT,
    IType,
    StateT,
    TySet,
    parse_tyset,
    render_tyset,
    stratum,
    tle_set,
    type_apply,
    well_formed_set,
)
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
    free_vars,
    infer_simple_type,
    parse_term,
    render,
)


class DerivError(Exception):
    pass


POSITIVE_RULES = (
    "Axiom",
    "Intersect",
    "Subsume",
    "ConstNullary",
    "ConstTrans",
    "App",
    "Abs",
    "YOdd",
    "YEven",
)

# refutation rules, reread against the dualized automaton
DUAL_TO_POSITIVE = {
    "DAxiom": "Axiom",
    "DIntersect": "Intersect",
    "DSubsume": "Subsume",
    "DConstNullary": "ConstNullary",
    "DConstTrans": "ConstTrans",
    "DApp": "App",
    "DAbs": "Abs",
    "DYOdd": "YEven",
    "DYEven": "YOdd",
}
POSITIVE_TO_DUAL = {v: k for k, v in DUAL_TO_POSITIVE.items()}

Path = tuple[int, ...]


@dataclass
class DNode:
    rule: str
    path: Path
    env: dict[str, TySet]
    tyset: TySet
    premises: list["DNode"] = field(default_factory=list)

    def size(self) -> int:
        return 1 + sum(p.size() for p in self.premises)


@dataclass
class Derivation:
    term: Term
    negated: bool
    root: DNode

    def size(self) -> int:
        return self.root.size()


def subterm_at(t: Term, path: Path) -> Term:
    """Resolve a path; a fixpoint binder's single child is its lambda view."""
    for i in path:
        if isinstance(t, App) and i in (0, 1):
            t = t.fn if i == 0 else t.arg
        elif isinstance(t, Abs) and i == 0:
            t = t.body
        elif isinstance(t, Fix) and i == 0:
            t = Abs(t.var, t.var_ty, t.body)
        else:
            raise DerivError(f"no child {i} of {type(t).__name__} at {render_path(path)}")
    return t


def render_path(path: Path) -> str:
    return "root" if not path else ".".join(str(i) for i in path)


def parse_path(text: str) -> Path:
    text = text.strip()
    if text == "root":
        return ()
    try:
        return tuple(int(p) for p in text.split("."))
    except ValueError:
        raise DerivError(f"bad path {text!r}") from None


# -- checking

def check_derivation(deriv: Derivation, aut: WAA, cap: int = 100_000) -> TySet:
    """Verify every rule application; returns the root type set.

    Raises DerivError naming the failing node's path.  Negated
    derivations are checked against the dualized automaton after the
    rule renaming described in the module docstring.
    """
    if free_vars(deriv.term) - set(deriv.root.env):
        raise DerivError("root environment misses free variables of the term")
    if deriv.negated:
        checker = _Checker(dualize(aut, cap), negated=True)
    else:
        checker = _Checker(aut, negated=False)
    checker.check(deriv.root, deriv.term, {})
    return deriv.root.tyset


class _Checker:
    def __init__(self, aut: WAA, negated: bool):
        self.aut = aut
        self.negated = negated

    def fail(self, node: DNode, msg: str):
        raise DerivError(f"{node.rule} at {render_path(node.path)}: {msg}")

    def rule_of(self, node: DNode) -> str:
        if self.negated:
            rule = DUAL_TO_POSITIVE.get(node.rule)
            if rule is None:
                self.fail(node, "not a refutation rule")
            return rule
        if node.rule not in POSITIVE_RULES:
            self.fail(node, "not a positive rule")
        return node.rule

    def check(self, node: DNode, sub: Term, scope: dict[str, SimpleType]) -> None:
        rule = self.rule_of(node)
        missing = free_vars(sub) - set(node.env)
        if missing:
            self.fail(node, f"environment misses {sorted(missing)}")
        for x, s in node.env.items():
            if x not in scope:
                self.fail(node, f"environment binds {x} outside its scope")
            if not well_formed_set(s, self.aut, scope[x]):
                self.fail(node, f"ill formed types for {x}")
        ty = infer_simple_type(sub, scope)
        if not well_formed_set(node.tyset, self.aut, ty):
            self.fail(node, f"ill formed conclusion {render_tyset(node.tyset)}")
        getattr(self, "_" + rule.lower())(node, sub, scope, ty)

    def _expect_premises(self, node: DNode, n: int):
        if len(node.premises) != n:
            self.fail(node, f"expected {n} premises, found {len(node.premises)}")

    def _same_judgment_site(self, node: DNode, prem: DNode, path: Path):
        if prem.path != path:
            self.fail(node, f"premise addresses {render_path(prem.path)}, expected {render_path(path)}")
        if prem.env != node.env:
            self.fail(node, "premise environment differs")

    def _axiom(self, node: DNode, sub: Term, scope, ty):
        self._expect_premises(node, 0)
        if not isinstance(sub, Var):
            self.fail(node, "subterm is not a variable")
        if node.tyset != node.env.get(sub.name, frozenset()):
            self.fail(node, "conclusion must equal the environment entry")

    def _intersect(self, node: DNode, sub: Term, scope, ty):
        out: set[IType] = set()
        for prem in node.premises:
            self._same_judgment_site(node, prem, node.path)
            self.check(prem, sub, scope)
            out |= prem.tyset
        if node.tyset != frozenset(out):
            self.fail(node, "conclusion is not the union of the premises")

    def _subsume(self, node: DNode, sub: Term, scope, ty):
        self._expect_premises(node, 1)
        prem = node.premises[0]
        self._same_judgment_site(node, prem, node.path)
        self.check(prem, sub, scope)
        if not tle_set(node.tyset, prem.tyset):
            self.fail(node, "conclusion is not below the premise")

    def _constnullary(self, node: DNode, sub: Term, scope, ty):
        self._expect_premises(node, 0)
        if not isinstance(sub, Const) or self.aut.sig.arity(sub.name) != 0:
            self.fail(node, "subterm is not a leaf constant")
        want = frozenset(
            StateT(q) for q in self.aut.states if self.aut.tuples(q, sub.name)
        )
        if node.tyset != want:
            self.fail(node, f"conclusion must be {render_tyset(want)}")

    def _consttrans(self, node: DNode, sub: Term, scope, ty):
        self._expect_premises(node, 0)
        if not isinstance(sub, Const):
            self.fail(node, "subterm is not a constant")
        arity = self.aut.sig.arity(sub.name)
        if arity == 0:
            self.fail(node, "leaf constants use the nullary rule")
        if len(node.tyset) != 1:
            self.fail(node, "conclusion must be a single arrow chain")
        (t,) = node.tyset
        comps: list[frozenset[str]] = []
        for _ in range(arity):
            if not isinstance(t, ArrowT):
                self.fail(node, "arrow chain shorter than the constant's arity")
            if not all(isinstance(g, StateT) for g in t.prems):
                self.fail(node, "argument premises must be plain states")
            comps.append(frozenset(g.state for g in t.prems))
            t = t.res
        if not isinstance(t, StateT):
            self.fail(node, "arrow chain longer than the constant's arity")
        tup = tuple(comps)
        if tup not in self.aut.tuples(t.state, sub.name):
            self.fail(node, "no such transition")

    def _app(self, node: DNode, sub: Term, scope, ty):
        self._expect_premises(node, 2)
        if not isinstance(sub, App):
            self.fail(node, "subterm is not an application")
        pf, pa = node.premises
        self._same_judgment_site(node, pf, node.path + (0,))
        self._same_judgment_site(node, pa, node.path + (1,))
        self.check(pf, sub.fn, scope)
        self.check(pa, sub.arg, scope)
        if node.tyset != type_apply(pf.tyset, pa.tyset):
            self.fail(node, "conclusion is not the application of the premises")

    def _abs(self, node: DNode, sub: Term, scope, ty):
        self._expect_premises(node, 1)
        if not isinstance(sub, Abs):
            self.fail(node, "subterm is not an abstraction")
        if not node.tyset:
            self.fail(node, "empty conclusions come from an empty intersection")
        if any(not isinstance(t, ArrowT) for t in node.tyset):
            self.fail(node, "conclusion must consist of arrows")
        prems_sets = {t.prems for t in node.tyset}
        if len(prems_sets) != 1:
            self.fail(node, "all arrows must share one premise set")
        (s,) = prems_sets
        results = frozenset(t.res for t in node.tyset)
        strata = {stratum(t, self.aut.ranks) for t in results}
        if len(strata) != 1:
            self.fail(node, "result types must share one stratum")
        k = strata.pop()
        if any(stratum(g, self.aut.ranks) > k for g in s):
            self.fail(node, "premise stratum above the result stratum")
        prem = node.premises[0]
        if prem.path != node.path + (0,):
            self.fail(node, "premise must address the body")
        if prem.env != {**node.env, sub.var: s}:
            self.fail(node, "premise environment must bind the variable to the arrow premises")
        self.check(prem, sub.body, {**scope, sub.var: sub.var_ty})
        if prem.tyset != results:
            self.fail(node, "premise must conclude exactly the arrow results")

    def _yodd(self, node: DNode, sub: Term, scope, ty):
        self._expect_premises(node, 2)
        if not isinstance(sub, Fix):
            self.fail(node, "subterm is not a fixpoint")
        pf, py = node.premises
        self._same_judgment_site(node, pf, node.path + (0,))
        self._same_judgment_site(node, py, node.path)
        lam = Abs(sub.var, sub.var_ty, sub.body)
        self.check(pf, lam, scope)
        self.check(py, sub, scope)
        if node.tyset != type_apply(pf.tyset, py.tyset):
            self.fail(node, "conclusion is not the application of the premises")

    def _yeven(self, node: DNode, sub: Term, scope, ty):
        self._expect_premises(node, 2)
        if not isinstance(sub, Fix):
            self.fail(node, "subterm is not a fixpoint")
        pf, py = node.premises
        self._same_judgment_site(node, pf, node.path + (0,))
        self._same_judgment_site(node, py, node.path)
        t = py.tyset
        if not t <= node.tyset:
            self.fail(node, "second premise must be part of the conclusion")
        s = node.tyset - t
        if s:
            strata = {stratum(g, self.aut.ranks) for g in s}
            if len(strata) != 1:
                self.fail(node, "new types must share one stratum")
            j = strata.pop()
            if j % 2 != 0:
                self.fail(node, "new types must sit at an even stratum")
            if any(stratum(g, self.aut.ranks) >= j for g in t):
                self.fail(node, "carried types must sit below the new stratum")
        want = frozenset(ArrowT(node.tyset, g) for g in s)
        if pf.tyset != want:
            self.fail(node, "first premise must conclude the conclusion-guarded arrows")
        lam = Abs(sub.var, sub.var_ty, sub.body)
        self.check(pf, lam, scope)
        self.check(py, sub, scope)


# -- rendering and parsing

def render_env(env: dict[str, TySet]) -> str:
    return "; ".join(f"{x}: {render_tyset(s)}" for x, s in sorted(env.items()))


def parse_env(text: str) -> dict[str, TySet]:
    text = text.strip()
    if not text:
        return {}
    out: dict[str, TySet] = {}
    depth = 0
    start = 0
    parts = []
    for i, ch in enumerate(text):
        if ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
        elif ch == ";" and depth == 0:
            parts.append(text[start:i])
            start = i + 1
    parts.append(text[start:])
    for part in parts:
        if ":" not in part:
            raise DerivError(f"bad environment entry {part!r}")
        name, _, rest = part.partition(":")
        name = name.strip()
        if name in out:
            raise DerivError(f"duplicate environment entry {name!r}")
        out[name] = parse_tyset(rest)
    return out


def render_derivation(deriv: Derivation) -> str:
    lines = [f"term: {render(deriv.term)}"]
    lines.append(f"negated: {'true' if deriv.negated else 'false'}")
    sign = "!>=" if deriv.negated else ">="

    def emit(node: DNode, depth: int):
        judgment = f"{render_path(node.path)} {sign} {render_tyset(node.tyset)}"
        lines.append("  " * depth + " | ".join([node.rule, render_env(node.env), judgment]))
        for p in node.premises:
            emit(p, depth + 1)

    emit(deriv.root, 0)
    return "\n".join(lines) + "\n"


def parse_derivation(text: str, sig) -> Derivation:
    term: Optional[Term] = None
    negated = False
    root: Optional[DNode] = None
    stack: list[tuple[int, DNode]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped.startswith("term:"):
            term = parse_term(stripped[len("term:"):], sig)
            continue
        if stripped.startswith("negated:"):
            flag = stripped[len("negated:"):].strip().lower()
            if flag not in ("true", "false"):
                raise DerivError(f"line {lineno}: negated must be true or false")
            negated = flag == "true"
            continue
        if term is None:
            raise DerivError(f"line {lineno}: node before the term header")
        indent = len(raw) - len(raw.lstrip(" "))
        if indent % 2:
            raise DerivError(f"line {lineno}: odd indentation")
        cols = stripped.split("|")
        if len(cols) != 3:
            raise DerivError(f"line {lineno}: expected rule | env | judgment")
        rule = cols[0].strip()
        judgment = cols[2].strip()
        if negated:
            if "!>=" not in judgment:
                raise DerivError(f"line {lineno}: refutation judgments use !>=")
            left, _, right = judgment.partition("!>=")
        else:
            if "!>=" in judgment:
                raise DerivError(f"line {lineno}: positive judgments use >=")
            if ">=" not in judgment:
                raise DerivError(f"line {lineno}: judgment must use >=")
            left, _, right = judgment.partition(">=")
        try:
            env = parse_env(cols[1])
            path = parse_path(left)
            tyset = parse_tyset(right)
        except Exception as exc:
            raise DerivError(f"line {lineno}: {exc}") from exc
        node = DNode(rule, path, env, tyset)
        depth = indent // 2
        while stack and stack[-1][0] >= depth:
            stack.pop()
        if stack:
            if stack[-1][0] != depth - 1:
                raise DerivError(f"line {lineno}: indentation skips a level")
            stack[-1][1].premises.append(node)
        else:
            if depth != 0:
                raise DerivError(f"line {lineno}: root must not be indented")
            if root is not None:
                raise DerivError(f"line {lineno}: second root node")
            root = node
        stack.append((depth, node))
    if term is None:
        raise DerivError("missing term header")
    if root is None:
        raise DerivError("missing derivation root")
    return Derivation(term, negated, root)
