"""Weak alternating automata on ranked trees, and two game based oracles.

A weak alternating automaton assigns every state a rank; every state named in
a transition out of q must have rank at most rank(q), so along any play of
the acceptance game the rank never increases.  An infinite play is won by the
proponent iff the rank it stabilizes on is even.

Two decision procedures live here, both independent of the semantic engine:

* accept_prefix plays the acceptance game on a finite Bohm prefix, with a
  configurable reading of Cutoff leaves (optimistic, pessimistic, or refuse).
* solve_regular solves the acceptance game on a finite graph presentation of
  a regular tree exactly, by rank stratified fixpoints.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterable, Optional

from .terms import (
    BTConst,
    BTCutoff,
    BTNode,
    BTOmega,
    Signature,
    first_order_type,
)


class AutomatonError(Exception):
    pass


TransTuple = tuple[frozenset[str], ...]


class WAA:
    """states, ranks, initial state, and delta: (state, const) -> tuple set."""

    def __init__(
        self,
        states: Iterable[str],
        ranks: dict[str, int],
        initial: str,
        sig: Signature,
        delta: dict[tuple[str, str], frozenset[TransTuple]],
    ):
        self.states = tuple(states)
        self.ranks = dict(ranks)
        self.initial = initial
        self.sig = sig
        self.delta = {key: frozenset(val) for key, val in delta.items()}
        self._validate()

    def _validate(self) -> None:
        if not self.states:
            raise AutomatonError("no states declared")
        if len(set(self.states)) != len(self.states):
            raise AutomatonError("duplicate state")
        for q in self.states:
            if q not in self.ranks or self.ranks[q] < 0:
                raise AutomatonError(f"state {q} needs a nonnegative rank")
        if self.initial not in self.ranks:
            raise AutomatonError(f"initial state {self.initial} not declared")
        for (q, c), tuples in self.delta.items():
            if q not in self.ranks:
                raise AutomatonError(f"transition from undeclared state {q}")
            if c not in self.sig:
                raise AutomatonError(f"transition on unknown constant {c}")
            arity = self.sig.arity(c)
            for tup in tuples:
                if len(tup) != arity:
                    raise AutomatonError(
                        f"transition {q} {c}: tuple arity {len(tup)} differs from {arity}"
                    )
                for comp in tup:
                    for q2 in comp:
                        if q2 not in self.ranks:
                            raise AutomatonError(f"undeclared state {q2} in transition")
                        if self.ranks[q2] > self.ranks[q]:
                            raise AutomatonError(
                                f"rank increases {q}@{self.ranks[q]} -> {q2}@{self.ranks[q2]}"
                            )

    @property
    def max_rank(self) -> int:
        return max(self.ranks.values())

    def states_up_to(self, k: int) -> frozenset[str]:
        return frozenset(q for q in self.states if self.ranks[q] <= k)

    def states_at(self, k: int) -> frozenset[str]:
        return frozenset(q for q in self.states if self.ranks[q] == k)

    def tuples(self, q: str, c: str) -> frozenset[TransTuple]:
        return self.delta.get((q, c), frozenset())

    def accepts_leaf(self, q: str, c: str) -> bool:
        # nullary: the only tuple is (), its presence means the leaf is fine
        return bool(self.tuples(q, c))


# ---------------------------------------------------------------------------
# Text format


def parse_waa(text: str, sig: Signature) -> WAA:
    """Parse the line based automaton format.

    header lines:   states: q1@1 q2@2      initial: q2
    transitions:    q a -> ({q1}) | ({q1,q2})      q c -> ()
    A missing transition line means no transition; `()` is the accepting
    nullary tuple; `({})` is an arity one tuple with an empty obligation.
    """
    ranks: dict[str, int] = {}
    states: list[str] = []
    initial: Optional[str] = None
    delta: dict[tuple[str, str], set[TransTuple]] = {}
    for lineno, raw_line in enumerate(text.splitlines(), 1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            if line.startswith("states:"):
                for part in line[len("states:"):].split():
                    name, _, rank = part.partition("@")
                    if not rank:
                        raise AutomatonError(f"state {part} needs @rank")
                    states.append(name)
                    ranks[name] = int(rank)
            elif line.startswith("initial:"):
                initial = line[len("initial:"):].strip()
            else:
                q, c, tuples = _parse_transition(line)
                delta.setdefault((q, c), set()).update(tuples)
        except AutomatonError as err:
            raise AutomatonError(f"line {lineno}: {err}") from None
    if initial is None:
        raise AutomatonError("missing initial: line")
    return WAA(states, ranks, initial, sig, {k: frozenset(v) for k, v in delta.items()})


def _parse_transition(line: str) -> tuple[str, str, list[TransTuple]]:
    head, arrow, rhs = line.partition("->")
    if not arrow:
        raise AutomatonError(f"expected q c -> ..., got {line!r}")
    parts = head.split()
    if len(parts) != 2:
        raise AutomatonError(f"expected 'state const' before ->, got {head!r}")
    q, c = parts
    tuples = []
    for alt in rhs.split("|"):
        tuples.append(_parse_tuple(alt.strip()))
    return q, c, tuples


def _parse_tuple(text: str) -> TransTuple:
    if not (text.startswith("(") and text.endswith(")")):
        raise AutomatonError(f"expected a (...) tuple, got {text!r}")
    inner = text[1:-1].strip()
    if not inner:
        return ()
    comps = []
    depth = 0
    start = 0
    pieces = []
    for i, ch in enumerate(inner):
        if ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
        elif ch == "," and depth == 0:
            pieces.append(inner[start:i])
            start = i + 1
    pieces.append(inner[start:])
    for piece in pieces:
        piece = piece.strip()
        if not (piece.startswith("{") and piece.endswith("}")):
            raise AutomatonError(f"expected a {{...}} state set, got {piece!r}")
        body = piece[1:-1].strip()
        comps.append(frozenset(s.strip() for s in body.split(",") if s.strip()) if body else frozenset())
    return tuple(comps)


def render_waa(a: WAA) -> str:
    lines = ["states: " + " ".join(f"{q}@{a.ranks[q]}" for q in a.states)]
    lines.append(f"initial: {a.initial}")
    for (q, c) in sorted(a.delta):
        alts = " | ".join(_render_tuple(t) for t in sorted(a.delta[(q, c)], key=_tuple_key))
        lines.append(f"{q} {c} -> {alts}")
    return "\n".join(lines) + "\n"


def _render_tuple(tup: TransTuple) -> str:
    return "(" + ",".join("{" + ",".join(sorted(comp)) + "}" for comp in tup) + ")"


def _tuple_key(tup: TransTuple):
    return tuple(tuple(sorted(comp)) for comp in tup)


# ---------------------------------------------------------------------------
# Monotone completion and dualization


def monotone_completion(a: WAA, cap: int = 1 << 20) -> WAA:
    """Close every tuple set upward, componentwise, within the rank bound.

    Supersets of a satisfiable obligation are satisfiable too, so the
    accepted language does not change; the semantic engine assumes this
    closure implicitly and the explicit form is useful for comparisons.
    """
    delta: dict[tuple[str, str], frozenset[TransTuple]] = {}
    for (q, c), tuples in a.delta.items():
        allowed = a.states_up_to(a.ranks[q])
        closed: set[TransTuple] = set()
        for tup in tuples:
            if not tup:
                closed.add(tup)
                continue
            extensions = [_supersets(comp, allowed) for comp in tup]
            count = 1
            for ext in extensions:
                count *= len(ext)
            if count > cap:
                raise AutomatonError(f"completion of {q} {c} exceeds cap {cap}")
            closed.update(product(*extensions))
        delta[(q, c)] = frozenset(closed)
    return WAA(a.states, a.ranks, a.initial, a.sig, delta)


def _supersets(comp: frozenset[str], allowed: frozenset[str]) -> list[frozenset[str]]:
    extra = sorted(allowed - comp)
    out = []
    for mask in range(1 << len(extra)):
        add = frozenset(extra[i] for i in range(len(extra)) if mask >> i & 1)
        out.append(comp | add)
    return out


def dualize(a: WAA, cap: int = 1 << 20) -> WAA:
    """Complement construction: ranks shift by one, tuple sets transversalize.

    A dual tuple must intersect every original tuple in some component; a
    nullary transition is present exactly when the original one is absent.
    The result accepts a tree from q iff the original automaton does not.
    """
    ranks = {q: a.ranks[q] + 1 for q in a.states}
    delta: dict[tuple[str, str], frozenset[TransTuple]] = {}
    for c in a.sig.names():
        arity = a.sig.arity(c)
        for q in a.states:
            originals = a.tuples(q, c)
            if arity == 0:
                if not originals:
                    delta[(q, c)] = frozenset({()})
                continue
            if any(all(not comp for comp in tup) for tup in originals):
                # an all empty obligation cannot be hit: no dual transition
                continue
            allowed = sorted(a.states_up_to(a.ranks[q]))
            if (1 << len(allowed)) ** arity > cap:
                raise AutomatonError(f"dualization of {q} {c} exceeds cap {cap}")
            subsets = [frozenset(s) for s in _all_subsets(allowed)]
            hits = frozenset(
                tup
                for tup in product(subsets, repeat=arity)
                if all(any(tup[j] & orig[j] for j in range(arity)) for orig in originals)
            )
            if hits:
                delta[(q, c)] = hits
    return WAA(a.states, ranks, a.initial, a.sig, delta)


def _all_subsets(items: list[str]) -> list[frozenset[str]]:
    return [
        frozenset(items[i] for i in range(len(items)) if mask >> i & 1)
        for mask in range(1 << len(items))
    ]


# ---------------------------------------------------------------------------
# Acceptance on finite prefixes

MODES = ("exact", "optimistic", "pessimistic")


class CutoffReached(Exception):
    """Exact mode met a Cutoff leaf: the prefix does not determine the answer."""


def accept_prefix(a: WAA, prefix: BTNode, mode: str = "exact") -> dict[tuple[int, ...], frozenset[str]]:
    """States from which the proponent wins the game on the finite prefix.

    Returns the full table keyed by node path ('()' is the root).  On a
    Cutoff leaf, optimistic mode grants every state, pessimistic mode none,
    exact mode raises CutoffReached.  The prefix is finite so plain bottom-up
    evaluation of the and-or structure is exact.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    table: dict[tuple[int, ...], frozenset[str]] = {}

    def walk(node: BTNode, path: tuple[int, ...]) -> frozenset[str]:
        if isinstance(node, BTCutoff):
            if mode == "exact":
                raise CutoffReached(f"cutoff at {path}")
            win = frozenset(a.states) if mode == "optimistic" else frozenset()
        elif isinstance(node, BTOmega):
            win = frozenset(q for q in a.states if a.ranks[q] % 2 == 0)
        else:
            assert isinstance(node, BTConst)
            if node.name not in a.sig:
                raise AutomatonError(f"constant {node.name} outside the signature")
            kids = [walk(child, path + (i,)) for i, child in enumerate(node.children)]
            win = frozenset(
                q
                for q in a.states
                if any(
                    all(comp <= kids[j] for j, comp in enumerate(tup))
                    for tup in a.tuples(q, node.name)
                )
            )
        table[path] = win
        return win

    walk(prefix, ())
    return table


def accept_prefix_root(a: WAA, prefix: BTNode, mode: str = "exact") -> frozenset[str]:
    return accept_prefix(a, prefix, mode)[()]


# ---------------------------------------------------------------------------
# Regular trees and the exact game solver


@dataclass(frozen=True)
class RegularTree:
    """Finite graph unfolding to an infinite tree: vertex -> (label, succs)."""

    root: str
    vertices: dict[str, tuple[str, tuple[str, ...]]]

    def validate(self, sig: Signature) -> None:
        if self.root not in self.vertices:
            raise AutomatonError(f"root {self.root} is not a vertex")
        for v, (label, succs) in self.vertices.items():
            if label not in sig:
                raise AutomatonError(f"vertex {v}: constant {label} outside the signature")
            if len(succs) != sig.arity(label):
                raise AutomatonError(
                    f"vertex {v}: {label} needs {sig.arity(label)} successors, got {len(succs)}"
                )
            for s in succs:
                if s not in self.vertices:
                    raise AutomatonError(f"vertex {v}: undeclared successor {s}")

    def unfold(self, depth: int) -> BTNode:
        def go(v: str, d: int) -> BTNode:
            if d <= 0:
                return BTCutoff()
            label, succs = self.vertices[v]
            return BTConst(label, tuple(go(s, d - 1) for s in succs))

        return go(self.root, depth)


def parse_regular_tree(text: str) -> RegularTree:
    """Lines 'root: v' and 'v: label succ1 succ2 ...'."""
    root = None
    vertices: dict[str, tuple[str, tuple[str, ...]]] = {}
    for raw_line in text.splitlines():
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        name, colon, rest = line.partition(":")
        if not colon:
            raise AutomatonError(f"expected 'name: ...', got {line!r}")
        name = name.strip()
        fields = rest.split()
        if name == "root":
            if len(fields) != 1:
                raise AutomatonError("root line needs exactly one vertex")
            root = fields[0]
        else:
            if not fields:
                raise AutomatonError(f"vertex {name} needs a label")
            vertices[name] = (fields[0], tuple(fields[1:]))
    if root is None:
        raise AutomatonError("missing root: line")
    return RegularTree(root, vertices)


def solve_regular(a: WAA, tree: RegularTree) -> dict[str, frozenset[str]]:
    """Exact winning sets of the acceptance game on a regular tree.

    Processes ranks from low to high.  Within the rank k slice the winning
    positions are a greatest fixpoint when k is even (staying at rank k
    forever is a win) and a least fixpoint when k is odd (the play must leave
    the slice favourably), with lower rank results frozen.
    """
    tree.validate(a.sig)
    win: set[tuple[str, str]] = set()
    for k in range(a.max_rank + 1):
        slice_states = [q for q in a.states if a.ranks[q] == k]
        if not slice_states:
            continue
        positions = [(q, v) for q in slice_states for v in tree.vertices]
        if k % 2 == 0:
            current = set(positions)
        else:
            current = set()
        while True:
            def good(q: str, v: str) -> bool:
                label, succs = tree.vertices[v]
                for tup in a.tuples(q, label):
                    if not tup and not succs:
                        return True
                    ok = True
                    for j, comp in enumerate(tup):
                        for q2 in comp:
                            if a.ranks[q2] < k:
                                if (q2, succs[j]) not in win:
                                    ok = False
                                    break
                            elif (q2, succs[j]) not in current:
                                ok = False
                                break
                        if not ok:
                            break
                    if ok:
                        return True
                return False

            updated = {(q, v) for (q, v) in positions if good(q, v)}
            if updated == current:
                break
            current = updated
        win |= current
    out = {}
    for v in tree.vertices:
        out[v] = frozenset(q for q in a.states if (q, v) in win)
    return out


def regular_tree_of_chain(labels: list[str], loop_from: Optional[int] = None) -> RegularTree:
    """Helper: a unary chain v0 -> v1 -> ..., optionally looping back."""
    vertices = {}
    n = len(labels)
    for i, label in enumerate(labels):
        if i + 1 < n:
            succ: tuple[str, ...] = (f"v{i + 1}",)
        elif loop_from is not None:
            succ = (f"v{loop_from}",)
        else:
            succ = ()
        vertices[f"v{i}"] = (label, succ)
    return RegularTree("v0", vertices)


def signature_from_waa_text(text: str) -> Signature:
    """Harvest constant arities from transition lines of the automaton format."""
    consts: dict[str, int] = {}
    for raw_line in text.splitlines():
        line = raw_line.split("#", 1)[0].strip()
        if not line or line.startswith(("states:", "initial:")):
            continue
        q, c, tuples = _parse_transition(line)
        for tup in tuples:
            arity = len(tup)
            if c in consts and consts[c] != arity:
                raise AutomatonError(f"constant {c} used with arities {consts[c]} and {arity}")
            consts[c] = arity
    return Signature({c: first_order_type(n) for c, n in consts.items()})
