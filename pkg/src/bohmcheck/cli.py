"""Command line front end.

Exit codes: 0 accepted or valid, 1 rejected or invalid, 2 inconclusive
(a cutoff or fuel bound was hit before the answer was determined),
3 lattice cap exceeded, 64 usage error, 65 malformed input, 66 missing
or unreadable file.
"""

from __future__ import annotations

import argparse
import os
import sys

from .automata import (
    MODES,
    AutomatonError,
    CutoffReached,
    WAA,
    accept_prefix,
    parse_regular_tree,
    parse_waa,
    signature_from_waa_text,
    solve_regular,
)
from .derivations import DerivError, check_derivation, parse_derivation, render_derivation
from .derive import DeriveError, decide, derive_positive, derive_refutation
from .itypes import StateT, TypeError_, parse_tyset, render_tyset
from .model import DEFAULT_CAP, LatticeTooLarge, accept_by_model
from .properties import run_all
from .terms import (
    Term,
    TermError,
    bohm_prefix,
    bt_letters,
    bt_render,
    infer_signature,
    parse_term,
)

CAP_ENV = "BOHMCHECK_CAP"

EXIT_ACCEPT = 0
EXIT_REJECT = 1
EXIT_INCONCLUSIVE = 2
EXIT_CAP = 3
EXIT_USAGE = 64
EXIT_PARSE = 65
EXIT_NOFILE = 66


class _Parser(argparse.ArgumentParser):
    """argparse parser whose usage failures exit with the usage code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _read(path: str) -> str:
    try:
        with open(path) as f:
            return f.read()
    except OSError as e:
        print(f"bohmcheck: cannot read {path}: {e.strerror or e}", file=sys.stderr)
        raise SystemExit(EXIT_NOFILE)


def _strip_comments(text: str) -> str:
    return "\n".join(
        line for line in text.splitlines() if not line.lstrip().startswith("#")
    )


def _load_waa(path: str) -> WAA:
    text = _read(path)
    return parse_waa(text, signature_from_waa_text(text))


def _load_term(path: str, aut: WAA | None) -> Term:
    text = _strip_comments(_read(path))
    sig = aut.sig if aut is not None else infer_signature(text)
    return parse_term(text, sig)


def _cap(args) -> int:
    if getattr(args, "cap", None):
        return args.cap
    env = os.environ.get(CAP_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            print(f"bohmcheck: {CAP_ENV} must be an integer", file=sys.stderr)
            raise SystemExit(EXIT_USAGE)
    return DEFAULT_CAP


def cmd_bohm(args) -> int:
    term = _load_term(args.term, None)
    prefix = bohm_prefix(term, args.depth, args.fuel)
    if args.format == "letters":
        print(" ".join(bt_letters(prefix)) or "-")
    else:
        print(bt_render(prefix))
    return EXIT_ACCEPT


def cmd_eval(args) -> int:
    aut = _load_waa(args.automaton)
    term = _load_term(args.term, aut)
    value = accept_by_model(aut, term, cap=_cap(args))
    print("value:", ",".join(sorted(value)) or "-")
    print("initial:", aut.initial)
    accepted = aut.initial in value
    print("accepted:", "yes" if accepted else "no")
    return EXIT_ACCEPT if accepted else EXIT_REJECT


def cmd_check(args) -> int:
    aut = _load_waa(args.automaton)
    deriv = parse_derivation(_read(args.derivation), aut.sig)
    try:
        concl = check_derivation(deriv, aut, cap=_cap(args))
    except DerivError as e:
        print(f"invalid: {e}")
        return EXIT_REJECT
    sign = "does not have" if deriv.negated else "has"
    print(f"valid: the term {sign} {render_tyset(concl)}")
    return EXIT_ACCEPT


def cmd_derive(args) -> int:
    aut = _load_waa(args.automaton)
    term = _load_term(args.term, aut)
    if args.types:
        target = parse_tyset(args.types)
    else:
        states = args.state or [aut.initial]
        for q in states:
            if q not in aut.states:
                print(f"bohmcheck: unknown state {q}", file=sys.stderr)
                return EXIT_USAGE
        target = frozenset(StateT(q) for q in states)
    maker = derive_refutation if args.negated else derive_positive
    try:
        deriv = maker(aut, term, target, cap=_cap(args))
    except DeriveError as e:
        print(f"bohmcheck: {e}", file=sys.stderr)
        return EXIT_REJECT
    sys.stdout.write(render_derivation(deriv))
    return EXIT_ACCEPT


def cmd_verify(args) -> int:
    aut = _load_waa(args.automaton)
    term = _load_term(args.term, aut)
    dec = decide(aut, term, cap=_cap(args))
    print("value:", ",".join(sorted(dec.value)) or "-")
    print("initial:", aut.initial)
    print("accepted:", "yes" if dec.accepted else "no")
    print(f"positive certificate: {dec.positive.size()} nodes, checked")
    print(f"refutation certificate: {dec.refutation.size()} nodes, checked")
    return EXIT_ACCEPT if dec.accepted else EXIT_REJECT


def cmd_oracle(args) -> int:
    aut = _load_waa(args.automaton)
    if args.input.endswith(".rt"):
        tree = parse_regular_tree(_read(args.input))
        tree.validate(aut.sig)
        sol = solve_regular(aut, tree)
        for v in sorted(sol):
            print(f"{v}: {','.join(sorted(sol[v])) or '-'}")
        accepted = aut.initial in sol[tree.root]
        print("accepted:", "yes" if accepted else "no")
        return EXIT_ACCEPT if accepted else EXIT_REJECT
    term = _load_term(args.input, aut)
    prefix = bohm_prefix(term, args.depth, args.fuel)
    try:
        states = accept_prefix(aut, prefix, args.mode)[()]
    except CutoffReached:
        print("inconclusive: the prefix was cut off before the answer was fixed")
        return EXIT_INCONCLUSIVE
    print("value:", ",".join(sorted(states)) or "-")
    accepted = aut.initial in states
    print("accepted:", "yes" if accepted else "no")
    return EXIT_ACCEPT if accepted else EXIT_REJECT


def cmd_selftest(args) -> int:
    aut = _load_waa(args.automaton)
    rows = run_all(aut, cap=_cap(args))
    for name, cases in rows:
        print(f"ok: {name} ({cases} cases)")
    print(f"all checks passed: {sum(n for _, n in rows)} cases")
    return EXIT_ACCEPT


def cmd_report(args) -> int:
    from .report import write_report

    aut = _load_waa(args.automaton)
    named = []
    for path in args.terms:
        name = os.path.splitext(os.path.basename(path))[0]
        named.append((name, _load_term(path, aut)))
    for path in write_report(aut, named, args.out, depth=args.depth, cap=_cap(args)):
        print("wrote:", path)
    return EXIT_ACCEPT


def build_parser() -> _Parser:
    p = _Parser(prog="bohmcheck", description=__doc__.strip().splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(fn=fn)
        return sp

    sp = add("bohm", cmd_bohm, "print a Bohm tree prefix of a term")
    sp.add_argument("term")
    sp.add_argument("--depth", type=int, default=6)
    sp.add_argument("--fuel", type=int, default=10_000)
    sp.add_argument("--format", choices=("tree", "letters"), default="tree")

    sp = add("eval", cmd_eval, "evaluate a term in the finite model")
    sp.add_argument("automaton")
    sp.add_argument("term")
    sp.add_argument("--cap", type=int)

    sp = add("check", cmd_check, "check a derivation file against an automaton")
    sp.add_argument("automaton")
    sp.add_argument("derivation")
    sp.add_argument("--cap", type=int)

    sp = add("derive", cmd_derive, "produce a checkable derivation for a term")
    sp.add_argument("automaton")
    sp.add_argument("term")
    sp.add_argument("--state", action="append", help="target state, repeatable")
    sp.add_argument("--types", help="explicit target type set, overrides --state")
    sp.add_argument("--negated", action="store_true",
                    help="derive that the term has none of the target types")
    sp.add_argument("--cap", type=int)

    sp = add("verify", cmd_verify, "decide acceptance with certificates for both sides")
    sp.add_argument("automaton")
    sp.add_argument("term")
    sp.add_argument("--cap", type=int)

    sp = add("oracle", cmd_oracle, "solve the acceptance game directly")
    sp.add_argument("automaton")
    sp.add_argument("input", help="a regular tree (.rt) or a term file")
    sp.add_argument("--depth", type=int, default=12)
    sp.add_argument("--fuel", type=int, default=10_000)
    sp.add_argument("--mode", choices=MODES, default="exact")

    sp = add("selftest", cmd_selftest, "run the structural checks for an automaton")
    sp.add_argument("automaton")
    sp.add_argument("--cap", type=int)

    sp = add("report", cmd_report, "summary table and figures for a batch of terms")
    sp.add_argument("automaton")
    sp.add_argument("terms", nargs="+")
    sp.add_argument("-o", "--out", required=True)
    sp.add_argument("--depth", type=int, default=6)
    sp.add_argument("--cap", type=int)

    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    try:
        return args.fn(args)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    except LatticeTooLarge as e:
        print(f"bohmcheck: lattice cap exceeded: {e}", file=sys.stderr)
        return EXIT_CAP
    except (TermError, AutomatonError, TypeError_, DerivError) as e:
        print(f"bohmcheck: {e}", file=sys.stderr)
        return EXIT_PARSE
    except DeriveError as e:
        print(f"bohmcheck: {e}", file=sys.stderr)
        return EXIT_REJECT


if __name__ == "__main__":
    sys.exit(main())
