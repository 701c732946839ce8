"""Well-formedness of qualifiers, types and contexts, and context subsumption."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .core import (
    FRESH,
    All,
    Base,
    Context,
    Fun,
    Hole,
    Polarity,
    QType,
    Ref,
    SelfBind,
    Top,
    TVar,
    TVarBind,
    Type,
    VarBind,
    entry_qual,
    fresh_name,
    has_hole,
    occurs,
    open_all,
    open_fun,
    strip,
)


class WfKind(Enum):
    HOLE_IN_QUALIFIER = "HoleInQualifier"
    UNBOUND_VARIABLE = "UnboundVariable"
    SELF_IN_BAD_POLARITY = "SelfInBadPolarity"
    SELF_WITHOUT_FRESH = "SelfWithoutFresh"
    HOLE_OUTSIDE_SELF = "HoleOutsideSelf"


@dataclass
class WfError(Exception):
    kind: WfKind
    detail: str
    path: tuple[str, ...] = ()

    def __str__(self) -> str:
        where = "/".join(self.path) or "<top>"
        return f"{self.kind.value} at {where}: {self.detail}"


def wf_qual(ctx: Context, q: frozenset, path: tuple[str, ...] = ()) -> None:
    if has_hole(q):
        raise WfError(WfKind.HOLE_IN_QUALIFIER, "qualifier contains a hole", path)
    for a in q:
        if isinstance(a, str) and a not in ctx:
            raise WfError(WfKind.UNBOUND_VARIABLE, f"{a} is not bound", path)


def _fresh_binders(ctx: Context, *names: str) -> dict[str, str]:
    """Replacement names for binders that clash with the context."""
    return {n: fresh_name(n) for n in names if n in ctx}


def wf_type(ctx: Context, T: Type, path: tuple[str, ...] = ()) -> None:
    match T:
        case Base() | Top():
            return
        case TVar(name):
            if ctx.tlookup(name) is None:
                raise WfError(WfKind.UNBOUND_VARIABLE, f"type variable {name} is not bound", path)
        case Ref(referent):
            wf_qtype(ctx, referent, path + ("ref",))
        case Fun():
            ren = _fresh_binders(ctx, T.fn, T.arg)
            f, x = ren.get(T.fn, T.fn), ren.get(T.arg, T.arg)
            dom, cod = open_fun(T, f, x)
            inner = ctx.push(SelfBind(f, frozenset({FRESH})))
            wf_qtype(inner, dom, path + ("dom",))
            wf_qtype(inner.push(VarBind(x, dom)), cod, path + ("cod",))
            _self_constraints(f, dom, cod, path)
        case All():
            ren = _fresh_binders(ctx, T.fn, T.qvar)
            f, x = ren.get(T.fn, T.fn), ren.get(T.qvar, T.qvar)
            X = fresh_name(T.tvar) if ctx.tlookup(T.tvar) else T.tvar
            bound, body = open_all(T, f, X, x)
            inner = ctx.push(SelfBind(f, frozenset({FRESH})))
            wf_qtype(inner, bound, path + ("bound",))
            wf_qtype(inner.push(TVarBind(X, x, bound)), body, path + ("body",))
            _self_constraints(f, bound, body, path)
        case _:
            raise TypeError(f"not a type: {T!r}")


def _self_constraints(f: str, dom: QType, cod: QType, path: tuple[str, ...]) -> None:
    if occurs(f, dom.ty, Polarity.POS):
        raise WfError(WfKind.SELF_IN_BAD_POLARITY, f"{f} occurs positively in the domain", path)
    if f in dom.qual and FRESH not in dom.qual:
        raise WfError(WfKind.SELF_WITHOUT_FRESH, f"{f} in the domain qualifier requires ♦", path)
    if occurs(f, cod.ty, Polarity.NEG):
        raise WfError(WfKind.SELF_IN_BAD_POLARITY, f"{f} occurs negatively in the codomain", path)


def wf_qtype(ctx: Context, Q: QType, path: tuple[str, ...] = ()) -> None:
    wf_type(ctx, Q.ty, path)
    wf_qual(ctx, Q.qual, path)


def check_annotation(ctx: Context, f: str, dom: QType, path: tuple[str, ...] = ()) -> None:
    """The self-aware premises on a lambda or type-lambda annotation."""
    inner = ctx.push(SelfBind(f, frozenset({FRESH})))
    wf_qtype(inner, dom, path)
    if occurs(f, dom.ty, Polarity.POS):
        raise WfError(WfKind.SELF_IN_BAD_POLARITY, f"{f} occurs positively in the annotation", path)
    if f in dom.qual and FRESH not in dom.qual:
        raise WfError(WfKind.SELF_WITHOUT_FRESH, f"{f} in the annotation qualifier requires ♦", path)


def wf_context(ctx: Context) -> None:
    prefix = Context()
    for i, e in enumerate(ctx):
        path = (f"entry {i}", e.name)
        if isinstance(e, SelfBind):
            bad = [h for h in e.qual if isinstance(h, Hole) and h.owner != e.name]
            if bad:
                raise WfError(WfKind.HOLE_OUTSIDE_SELF, f"foreign hole {bad[0]!r}", path)
            wf_qual(prefix, strip(e.qual) | (e.qual & {FRESH}), path)
        else:
            q = entry_qual(e)
            if has_hole(q):
                raise WfError(WfKind.HOLE_OUTSIDE_SELF, "hole outside a self entry", path)
            wf_qtype(prefix, e.qt if isinstance(e, VarBind) else e.bound, path)
        prefix = prefix.push(e)


def ctx_subsumes(g1: Context, g2: Context) -> bool:
    """Whether ``g2`` arises from ``g1`` by instantiating self-entry holes."""
    if len(g1) != len(g2):
        return False
    for i, (a, b) in enumerate(zip(g1, g2)):
        if a == b:
            continue
        if not (isinstance(a, SelfBind) and isinstance(b, SelfBind) and a.name == b.name):
            return False
        if Hole(a.name) not in a.qual or Hole(a.name) not in b.qual or not a.qual <= b.qual:
            return False
        delta = b.qual - a.qual
        if FRESH in delta or has_hole(delta):
            return False
        prefix = g1.truncate(i)
        if any(x not in prefix for x in delta):
            return False
    return True
