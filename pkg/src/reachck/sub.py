"""Self-aware subtype checking with increment inference."""

from __future__ import annotations

from dataclasses import dataclass

from .core import (
    EMPTY,
    FRESH,
    ONLY_FRESH,
    All,
    Base,
    Context,
    Fun,
    Hole,
    QType,
    Ref,
    SelfBind,
    Top,
    TVar,
    TVarBind,
    Type,
    VarBind,
    alpha_eq,
    fresh_name,
    open_all,
    open_fun,
    strip,
    subst_qtype,
    subst_type,
    type_size,
)
from .qual import UnifyFailure, qual_infer
from . import trace


@dataclass(frozen=True)
class SubResult:
    delta: frozenset
    out_ctx: Context


class SubtypeFailure(Exception):
    def __init__(self, message: str, left: Type | None = None, right: Type | None = None, cause: Exception | None = None):
        super().__init__(message)
        self.left = left
        self.right = right
        self.cause = cause


def self_unpack(T: Type, q: frozenset) -> Type:
    """Replace the self-reference of ``T`` by ``q`` when ``q`` is not fresh.

    The domain qualifier is kept as written.
    """
    if FRESH in q or not isinstance(T, (Fun, All)):
        return T
    theta = {T.fn: frozenset(q)}
    if isinstance(T, Fun):
        dom = QType(subst_type(T.dom.ty, theta), T.dom.qual)
        return Fun(T.fn, T.arg, dom, subst_qtype(T.cod, theta))
    bound = QType(subst_type(T.bound.ty, theta), T.bound.qual)
    return All(T.fn, T.tvar, T.qvar, bound, subst_qtype(T.body, theta))


def type_expose(ctx: Context, T: Type) -> Type:
    """Unfold type variables to their bounds until the head is not a variable."""
    while isinstance(T, TVar):
        e = ctx.tlookup(T.name)
        if e is None:
            raise SubtypeFailure(f"unbound type variable {T.name}", T)
        T = e.bound.ty
    return T


def subtype_check(ctx: Context, T1: Type, q: frozenset, T2: Type) -> SubResult:
    """Check ``T1 <: T2`` for a value of ``T1`` qualified by ``q``."""
    mon = trace.active()
    if mon is not None:
        mon.depth = 0
    T1u = self_unpack(T1, q)
    delta, out = _check(ctx, T1u, frozenset(q), T2, 0)
    if mon is not None:
        mon.operation("subtype_check", ctx, out)
        mon.steps("subtype_check", mon.depth, size_bound(ctx, T1u, T2))
    return SubResult(delta, out)


# Each recursive step strictly shrinks the pair of types (with a type
# variable counted as its bound), so this is a generous static ceiling.
_DEPTH_LIMIT = 10_000


def _check(ctx: Context, T: Type, o: frozenset, U: Type, depth: int) -> tuple[frozenset, Context]:
    if depth > _DEPTH_LIMIT:
        raise SubtypeFailure("subtype recursion exceeded its bound", T, U)
    mon = trace.active()
    if mon is not None and depth > mon.depth:
        mon.depth = depth
    if isinstance(T, Base) and isinstance(U, Base):
        return EMPTY, ctx
    if isinstance(U, Top):
        return EMPTY, ctx
    if isinstance(T, TVar):
        if isinstance(U, TVar) and U.name == T.name:
            return EMPTY, ctx
        e = ctx.tlookup(T.name)
        if e is None:
            raise SubtypeFailure(f"unbound type variable {T.name}", T, U)
        if mon is not None:
            mon.rule("sa-tvar")
        return _check(ctx, e.bound.ty, o, U, depth + 1)
    if isinstance(T, Ref) and isinstance(U, Ref):
        return _check_ref(ctx, T, U, depth)
    if isinstance(T, Fun) and isinstance(U, Fun):
        return _check_fun(ctx, T, o, U, depth)
    if isinstance(T, All) and isinstance(U, All):
        return _check_all(ctx, T, o, U, depth)
    raise SubtypeFailure("type shapes differ", T, U)


def _infer(ctx: Context, p: frozenset, q: frozenset, T: Type, U: Type) -> Context:
    try:
        return qual_infer(ctx, p, q)
    except UnifyFailure as err:
        raise SubtypeFailure(str(err), T, U, err) from err


def _check_ref(ctx: Context, T: Ref, U: Ref, depth: int) -> tuple[frozenset, Context]:
    a, b = T.referent, U.referent
    d1, g1 = _check(ctx, a.ty, ONLY_FRESH, b.ty, depth + 1)
    if d1:
        raise SubtypeFailure("reference referents must match exactly", T, U)
    d2, g2 = _check(g1, b.ty, ONLY_FRESH, a.ty, depth + 1)
    if d2:
        raise SubtypeFailure("reference referents must match exactly", T, U)
    g3 = _infer(g2, a.qual, b.qual, T, U)
    g4 = _infer(g3, b.qual, a.qual, T, U)
    return EMPTY, g4


def _pick(ctx: Context, *names: str) -> list[str]:
    out = []
    for n in names:
        out.append(fresh_name(n) if n in ctx or n in out else n)
    return out


def _pop_self(ctx: Context, out: Context, f: str, o: frozenset) -> frozenset:
    entry = out[len(ctx)]
    assert isinstance(entry, SelfBind) and entry.name == f
    return strip(entry.qual) - o


def _check_fun(ctx: Context, T: Fun, o: frozenset, U: Fun, depth: int) -> tuple[frozenset, Context]:
    mon = trace.active()
    if mon is not None:
        mon.rule("sa-fun")
        mon.hole_opened()
    f, x = _pick(ctx, T.fn, T.arg)
    dom1, cod1 = open_fun(T, f, x)
    dom2, cod2 = open_fun(U, f, x)
    g = ctx.push(SelfBind(f, o | {Hole(f)}))
    delta1, g1 = _check(g, dom2.ty, ONLY_FRESH, dom1.ty, depth + 1)
    if {FRESH, f} <= dom1.qual:
        g2 = g1
    else:
        g2 = _infer(g1, dom2.qual | delta1, dom1.qual, T, U)
    shift = {x: frozenset({x}) | delta1}
    cod1s = subst_qtype(cod1, shift)
    g3in = g2.push(VarBind(x, dom2))
    delta2, g3 = _check(g3in, cod1s.ty, ONLY_FRESH, cod2.ty, depth + 1)
    g4 = _infer(g3, cod1s.qual | delta2, cod2.qual, T, U)
    delta0 = _pop_self(ctx, g4, f, o)
    delta = (delta0 | delta1 | delta2) - {FRESH, f, x}
    return frozenset(delta), g4.truncate(len(ctx))


def _check_all(ctx: Context, T: All, o: frozenset, U: All, depth: int) -> tuple[frozenset, Context]:
    mon = trace.active()
    if mon is not None:
        mon.rule("sa-all")
        mon.hole_opened()
    f, x = _pick(ctx, T.fn, T.qvar)
    X = fresh_name(T.tvar) if ctx.tlookup(T.tvar) else T.tvar
    bound1, body1 = open_all(T, f, X, x)
    bound2, body2 = open_all(U, f, X, x)
    if not alpha_eq(bound1.ty, bound2.ty):
        raise SubtypeFailure("quantifier bounds differ", T, U)
    g = ctx.push(SelfBind(f, o | {Hole(f)}))
    if {FRESH, f} <= bound1.qual:
        g2 = g
    else:
        g2 = _infer(g, bound2.qual, bound1.qual, T, U)
    g3in = g2.push(TVarBind(X, x, bound2))
    delta2, g3 = _check(g3in, body1.ty, ONLY_FRESH, body2.ty, depth + 1)
    g4 = _infer(g3, body1.qual | delta2, body2.qual, T, U)
    delta0 = _pop_self(ctx, g4, f, o)
    delta = (delta0 | delta2) - {FRESH, f, x}
    return frozenset(delta), g4.truncate(len(ctx))


def size_bound(ctx: Context, T: Type, U: Type) -> int:
    """Static ceiling on recursion depth: sizes with variables at their bounds."""
    total = type_size(T) + type_size(U)
    for e in ctx:
        if isinstance(e, TVarBind):
            total += type_size(e.bound.ty)
    return total
