"""Deciding weak alternating tree automata acceptance of lambda-Y Bohm trees.

Three cooperating routes give the same answer and check each other:
finite-model evaluation, derivation generation with an independent
syntactic checker, and game solving on tree prefixes and regular trees.
"""

from .terms import (
    TermError,
    SimpleType,
    Base,
    Arrow,
    O,
    Signature,
    Term,
    Var,
    Const,
    App,
    Abs,
    Fix,
    first_order_type,
    free_vars,
    infer_simple_type,
    alpha_eq,
    head_normal_form,
    bohm_prefix,
    bt_letters,
    bt_render,
    BTConst,
    BTOmega,
    BTCutoff,
    parse_term,
    infer_signature,
    render,
)
from .automata import (
    AutomatonError,
    WAA,
    parse_waa,
    render_waa,
    dualize,
    monotone_completion,
    CutoffReached,
    accept_prefix,
    accept_prefix_root,
    RegularTree,
    parse_regular_tree,
    solve_regular,
    signature_from_waa_text,
)
from .model import (
    ModelError,
    LatticeTooLarge,
    DEFAULT_CAP,
    Ctx,
    accept_by_model,
)
from .itypes import (
    StateT,
    ArrowT,
    stratum,
    tle,
    tle_set,
    type_apply,
    render_itype,
    render_tyset,
    parse_tyset,
    interp,
    interp_set,
    dual_interp_set,
    represent,
)
from .derivations import (
    DerivError,
    DNode,
    Derivation,
    check_derivation,
    render_derivation,
    parse_derivation,
)
from .derive import (
    DeriveError,
    derive_positive,
    derive_refutation,
    Decision,
    decide,
)

__version__ = "0.1.0"

__all__ = [
    "TermError",
    "SimpleType",
    "Base",
    "Arrow",
    "O",
    "Signature",
    "Term",
    "Var",
    "Const",
    "App",
    "Abs",
    "Fix",
    "first_order_type",
    "free_vars",
    "infer_simple_type",
    "alpha_eq",
    "head_normal_form",
    "bohm_prefix",
    "bt_letters",
    "bt_render",
    "BTConst",
    "BTOmega",
    "BTCutoff",
    "parse_term",
    "infer_signature",
    "render",
    "AutomatonError",
    "WAA",
    "parse_waa",
    "render_waa",
    "dualize",
    "monotone_completion",
    "CutoffReached",
    "accept_prefix",
    "accept_prefix_root",
    "RegularTree",
    "parse_regular_tree",
    "solve_regular",
    "signature_from_waa_text",
    "ModelError",
    "LatticeTooLarge",
    "DEFAULT_CAP",
    "Ctx",
    "accept_by_model",
    "StateT",
    "ArrowT",
    "stratum",
    "tle",
    "tle_set",
    "type_apply",
    "render_itype",
    "render_tyset",
    "parse_tyset",
    "interp",
    "interp_set",
    "dual_interp_set",
    "represent",
    "DerivError",
    "DNode",
    "Derivation",
    "check_derivation",
    "render_derivation",
    "parse_derivation",
    "DeriveError",
    "derive_positive",
    "derive_refutation",
    "Decision",
    "decide",
]
