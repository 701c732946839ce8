"""Polarity-guided avoidance of out-of-scope variables."""

from __future__ import annotations

from .core import (
    EMPTY,
    FRESH,
    All,
    Base,
    Fun,
    Polarity,
    QType,
    Ref,
    Top,
    TVar,
    Type,
    free_qvars_q,
    occurs,
    qual_subst,
)
from . import trace


class AvoidFailure(Exception):
    def __init__(self, message: str, var: str, T: Type | None = None):
        super().__init__(message)
        self.var = var
        self.type = T


def polarized_subst(T: Type, r: frozenset, y: str, pol: Polarity) -> Type:
    """Substitute ``r`` for ``y`` at positions of polarity ``pol``; delete it elsewhere."""
    match T:
        case Base() | Top() | TVar():
            return T
        case Ref(referent):
            if y in free_qvars_q(referent):
                raise AvoidFailure(f"{y} occurs under a reference", y, T)
            return T
        case Fun(fn, arg, dom, cod):
            if y == fn:
                return T
            dom2, cod2 = _arrow(dom, None if y == arg else cod, r, y, pol)
            return Fun(fn, arg, dom2, cod if cod2 is None else cod2)
        case All(fn, tvar, qvar, bound, body):
            if y == fn:
                return T
            bound2, body2 = _arrow(bound, None if y == qvar else body, r, y, pol)
            return All(fn, tvar, qvar, bound2, body if body2 is None else body2)
    raise TypeError(f"not a type: {T!r}")


def _arrow(dom: QType, cod: QType | None, r: frozenset, y: str, pol: Polarity):
    if pol is Polarity.POS:
        dom2 = QType(polarized_subst(dom.ty, r, y, Polarity.NEG), dom.qual - {y})
        cod2 = None if cod is None else QType(polarized_subst(cod.ty, r, y, Polarity.POS), qual_subst(cod.qual, r, y))
    else:
        dom2 = QType(polarized_subst(dom.ty, r, y, Polarity.POS), qual_subst(dom.qual, r, y))
        cod2 = None if cod is None else QType(polarized_subst(cod.ty, r, y, Polarity.NEG), cod.qual - {y})
    return dom2, cod2


def avoid_var(T: Type, z: str) -> tuple[frozenset, Type]:
    """A supertype of ``T`` without ``z``, plus the qualifier increment it needs."""
    if not occurs(z, T, Polarity.ANY):
        return EMPTY, T
    if isinstance(T, (Fun, All)):
        mon = trace.active()
        if mon is not None:
            mon.rule("av-fun" if isinstance(T, Fun) else "av-all", z)
        return frozenset({z}), polarized_subst(T, frozenset({T.fn}), z, Polarity.POS)
    raise AvoidFailure(f"cannot avoid {z}: no enclosing self-reference", z, T)


def avoid_app(fname: str, q: frozenset, xname: str, p: frozenset, Q: QType) -> QType:
    """Remove the function's self name and argument name from a result type.

    Each pass only runs when the corresponding qualifier is fresh; otherwise
    the later substitution replaces the name by its qualifier.
    """
    ty = Q.ty
    d1 = d2 = EMPTY
    if FRESH in q:
        d1, ty = avoid_var(ty, fname)
    if FRESH in p:
        d2, ty = avoid_var(ty, xname)
    return QType(ty, Q.qual | d1 | d2)
