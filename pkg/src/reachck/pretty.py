"""Deterministic rendering of qualifiers, types and terms in the surface syntax."""

from __future__ import annotations

from itertools import count

from .core import (
    Abs,
    All,
    App,
    Ascribe,
    Assign,
    Base,
    Const,
    Deref,
    Fresh,
    Fun,
    Hole,
    Let,
    Prim,
    QType,
    Ref,
    RefAlloc,
    TAbs,
    TApp,
    Top,
    TVar,
    Type,
    Var,
    atom_key,
    free_qvars_q,
    free_tvars,
)


def pretty_atom(a) -> str:
    match a:
        case Fresh():
            return "*"
        case Hole(owner):
            return f"?{owner}"
    return str(a)


def pretty_qual(q, compact: bool = False) -> str:
    """``^{a, b, *}``; the empty qualifier is elided when ``compact``."""
    if compact and not q:
        return ""
    return "^{" + ", ".join(pretty_atom(a) for a in sorted(q, key=atom_key)) + "}"


def _is_unit_domain(dom: QType) -> bool:
    return isinstance(dom.ty, Base) and not dom.qual


def pretty_type(T: Type, compact: bool = False) -> str:
    match T:
        case Base():
            return "Unit"
        case Top():
            return "Top"
        case TVar(name):
            return name
        case Ref(referent):
            # an empty referent qualifier is always elided
            return f"Ref[{pretty_qtype(referent, compact, elide_empty=True)}]"
        case Fun(fn, arg, dom, cod):
            self_used = fn in free_qvars_q(dom) or fn in free_qvars_q(cod)
            head = fn if self_used else ""
            arg_used = arg in free_qvars_q(cod)
            if arg_used:
                param = f"({arg}: {pretty_qtype(dom, compact)})"
            elif _is_unit_domain(dom):
                param = "()"
            elif not self_used:
                return f"{pretty_qtype(dom, compact)} -> {pretty_qtype(cod, compact)}"
            else:
                param = f"({pretty_qtype(dom, compact)})"
            return f"{head}{param} -> {pretty_qtype(cod, compact)}"
        case All(fn, tvar, qvar, bound, body):
            self_used = fn in free_qvars_q(bound) or fn in free_qvars_q(body)
            head = f" {fn}" if self_used else " "
            return f"forall{head}[{tvar}^{qvar} <: {pretty_qtype(bound, compact)}]. {pretty_qtype(body, compact)}"
    raise TypeError(f"not a type: {T!r}")


def pretty_qtype(Q: QType, compact: bool = False, elide_empty: bool = False) -> str:
    inner = pretty_type(Q.ty, compact)
    if isinstance(Q.ty, (Fun, All)):
        inner = f"({inner})"
    return inner + pretty_qual(Q.qual, compact or elide_empty)


# Terms are printed at a requested precedence level; lower binds looser.
_EXPR, _APP, _PREFIX, _POSTFIX, _ATOM = range(5)


def pretty_term(t, compact: bool = True) -> str:
    return _term(t, _EXPR, compact)


def _paren(text: str, own: int, want: int) -> str:
    return f"({text})" if own < want else text


def _term(t, want: int, c: bool) -> str:
    match t:
        case Const():
            return "unit"
        case Var(name):
            return name
        case RefAlloc(init):
            return _paren(f"ref {_term(init, _APP, c)}", _EXPR, want)
        case Deref(ref):
            return _paren(f"!{_term(ref, _PREFIX, c)}", _PREFIX, want)
        case Assign(ref, value):
            return _paren(f"{_term(ref, _APP, c)} := {_term(value, _EXPR, c)}", _EXPR, want)
        case Abs(fn, arg, ann, body):
            param = arg if ann is None else f"{arg}: {pretty_qtype(ann, c)}"
            return _paren(f"\\{fn}({param}) => {_term(body, _EXPR, c)}", _EXPR, want)
        case App(fun, arg):
            return _paren(f"{_term(fun, _APP, c)} {_term(arg, _POSTFIX, c)}", _APP, want)
        case TAbs(fn, tvar, qvar, bound, body):
            head = f"/\\{fn}[{tvar}^{qvar} <: {pretty_qtype(bound, c)}]"
            return _paren(f"{head} => {_term(body, _EXPR, c)}", _EXPR, want)
        case TApp(fun, targ):
            return _paren(f"{_term(fun, _POSTFIX, c)}[{pretty_qtype(targ, c)}]", _POSTFIX, want)
        case Ascribe(term, qt):
            return f"({_term(term, _EXPR, c)} : {pretty_qtype(qt, c)})"
        case Let():
            return f"({_seq(t, c)})"
        case Prim(name, qt):
            return f"<extern {name} : {pretty_qtype(qt, c)}>"
    raise TypeError(f"not a term: {t!r}")


def _seq(t, c: bool) -> str:
    parts = []
    while isinstance(t, Let):
        parts.append(f"val {t.name} = {_term(t.rhs, _EXPR, c)}")
        t = t.body
    parts.append(_term(t, _EXPR, c))
    return "; ".join(parts)


# -- canonical naming for golden comparisons ------------------------------

_POOLS = {
    "self": ("f", "g", "h", "k"),
    "arg": ("x", "y", "z", "w"),
    "tvar": ("X", "Y", "Z"),
    "qvar": ("a", "b", "c"),
}


def canonicalize(Q: QType) -> QType:
    """Rename every binder of ``Q`` to a short name in binding order."""
    taken = set(free_qvars_q(Q)) | set(free_tvars(Q.ty))
    supply = {kind: _names(kind, taken) for kind in _POOLS}

    def go(T: Type, m: dict, tm: dict) -> Type:
        match T:
            case TVar(name):
                return TVar(tm.get(name, name))
            case Ref(referent):
                return Ref(goq(referent, m, tm))
            case Fun(fn, arg, dom, cod):
                f2, x2 = next(supply["self"]), next(supply["arg"])
                m1 = {**m, fn: f2}
                dom2 = goq(dom, m1, tm)
                cod2 = goq(cod, {**m1, arg: x2}, tm)
                return Fun(f2, x2, dom2, cod2)
            case All(fn, tvar, qvar, bound, body):
                f2, X2, x2 = next(supply["self"]), next(supply["tvar"]), next(supply["qvar"])
                m1 = {**m, fn: f2}
                bound2 = goq(bound, m1, tm)
                body2 = goq(body, {**m1, qvar: x2}, {**tm, tvar: X2})
                return All(f2, X2, x2, bound2, body2)
        return T

    def goq(Q: QType, m: dict, tm: dict) -> QType:
        return QType(go(Q.ty, m, tm), frozenset(m.get(a, a) if isinstance(a, str) else a for a in Q.qual))

    return goq(Q, {}, {})


def _names(kind: str, taken: set):
    pool = _POOLS[kind]
    for n in pool:
        if n not in taken:
            yield n
    for i in count(1):
        for n in pool:
            if f"{n}{i}" not in taken:
                yield f"{n}{i}"


def canonical_pretty(Q: QType) -> str:
    return pretty_qtype(canonicalize(Q))

