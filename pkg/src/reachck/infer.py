"""Bidirectional typing: inference, checking with qualifier synthesis, full checking."""

from __future__ import annotations

import re

from dataclasses import dataclass
from typing import Callable

from .avoid import AvoidFailure, avoid_app, polarized_subst
from .core import (
    EMPTY,
    FRESH,
    ONLY_FRESH,
    TOP,
    UNIT_Q,
    Abs,
    All,
    App,
    Ascribe,
    Assign,
    Const,
    Context,
    Deref,
    Fun,
    Hole,
    Let,
    Polarity,
    Prim,
    QType,
    Ref,
    RefAlloc,
    SelfBind,
    TAbs,
    TApp,
    Term,
    TVarBind,
    Var,
    VarBind,
    fresh_name,
    occurs,
    open_fun,
    qvars,
    saturate,
    strip,
    subst_qtype,
    type_holes,
    type_subst_var,
)
from .diagnostics import CheckError, Code, Diagnostic
from .qual import UnifyFailure, qual_infer
from .sub import SubtypeFailure, subtype_check, type_expose
from .wf import WfError, check_annotation, wf_qtype
from . import trace


@dataclass(frozen=True)
class TypedResult:
    obs: frozenset
    qt: QType
    out_ctx: Context


def _show_q(q) -> str:
    from .pretty import pretty_qual

    return pretty_qual(q)


def _show_t(T) -> str:
    from .pretty import pretty_type

    return pretty_type(T)


_SUFFIX = re.compile(r"'\d+")


def _plain(text):
    """Drop the numeric suffixes that binder freshening adds, for display."""
    if isinstance(text, str):
        return _SUFFIX.sub("", text)
    if isinstance(text, list):
        return [_plain(a) for a in text]
    return text


def _fail(code: Code, message: str, t: Term | None, rule: str, **extra) -> CheckError:
    extra = {k: _plain(v) for k, v in extra.items()}
    return CheckError(Diagnostic(code, _plain(message), getattr(t, "span", None), rule, **extra))


def _note(rule: str, t: Term | None = None) -> None:
    mon = trace.active()
    if mon is not None:
        mon.rule(rule, type(t).__name__ if t is not None else "")


def _qinfer(ctx: Context, p: frozenset, q: frozenset, t: Term, rule: str, what: str) -> Context:
    try:
        return qual_infer(ctx, p, q)
    except UnifyFailure as err:
        code = Code.FRESH_ESCAPE if err.reason == "fresh" else Code.QUALIFIER_BOUND
        if code is Code.FRESH_ESCAPE:
            msg = f"{err.atom} not allowed in {what}: its reachability is fresh"
        else:
            msg = f"{what}: {_show_q(p)} is not bounded by {_show_q(q)}"
        raise _fail(code, msg, t, rule, expected=_show_q(q), actual=_show_q(p), atoms=[str(err.atom)]) from err


def _avoid(fname: str, q: frozenset, xname: str, p: frozenset, Q: QType, t: Term, rule: str) -> QType:
    try:
        return avoid_app(fname, q, xname, p, Q)
    except AvoidFailure as err:
        raise _fail(Code.AVOIDANCE, str(err), t, rule, actual=_show_t(Q.ty), atoms=[err.var]) from err


def _annotation(ctx: Context, f: str, dom: QType, t: Term, rule: str) -> None:
    try:
        check_annotation(ctx, f, dom)
    except WfError as err:
        code = Code.UNBOUND if err.kind.value == "UnboundVariable" else Code.ANNOTATION
        raise _fail(code, f"ill-formed annotation: {err}", t, rule) from err


def _fresh_binders(ctx: Context, F):
    """Rename the binders of a function or quantifier type away from ``ctx``."""
    clash = [n for n in (F.fn, F.arg if isinstance(F, Fun) else F.qvar) if n in ctx]
    if not clash:
        return F
    from .core import rename_binders

    return rename_binders(F)


class Checker:
    """One checking session.

    ``on_let`` is called as ``on_let(node, rhs_result)`` after the right-hand
    side of every ``Let`` has been inferred; the program driver uses it to
    report per-declaration types.
    """

    def __init__(self, on_let: Callable[[Let, TypedResult], None] | None = None):
        self.on_let = on_let

    # -- inference -------------------------------------------------------

    def infer(self, ctx: Context, t: Term) -> TypedResult:
        res = self._infer(ctx, t)
        mon = trace.active()
        if mon is not None:
            mon.operation("infer", ctx, res.out_ctx)
        return res

    def _infer(self, ctx: Context, t: Term) -> TypedResult:
        match t:
            case Const():
                _note("ti-cst", t)
                return TypedResult(EMPTY, UNIT_Q, ctx)
            case Var(name):
                _note("ti-var", t)
                e = ctx.lookup(name)
                if isinstance(e, VarBind):
                    return TypedResult(frozenset({name}), QType(e.qt.ty, frozenset({name})), ctx)
                if isinstance(e, SelfBind):
                    return TypedResult(frozenset({name}), QType(TOP, frozenset({name})), ctx)
                raise _fail(Code.UNBOUND, f"unbound variable {name}", t, "ti-var", atoms=[name])
            case RefAlloc(init):
                _note("ti-ref", t)
                r = self.infer(ctx, init)
                if FRESH in r.qt.qual:
                    raise _fail(
                        Code.FRESH_ESCAPE,
                        "cannot store a fresh value in a reference",
                        t,
                        "ti-ref",
                        actual=_show_q(r.qt.qual),
                    )
                return TypedResult(r.obs, QType(Ref(r.qt), ONLY_FRESH), r.out_ctx)
            case Deref(ref):
                _note("ti-get", t)
                r = self.infer(ctx, ref)
                R = self._expose_ref(r, ref, "ti-get")
                return TypedResult(r.obs | qvars(R.referent.qual), R.referent, r.out_ctx)
            case Assign(ref, value):
                _note("ti-put", t)
                r = self.infer(ctx, ref)
                R = self._expose_ref(r, ref, "ti-put")
                obs2, g2 = self.check_full(r.out_ctx, value, R.referent)
                return TypedResult(r.obs | obs2, UNIT_Q, g2)
            case Abs(fn, arg, ann, body):
                if ann is None:
                    raise _fail(
                        Code.MISSING_ANNOTATION,
                        f"cannot infer the type of parameter {arg}; annotate it or use it in checking position",
                        t,
                        "ti-abs",
                    )
                return self._infer_abs(ctx, t, fn, arg, ann, body)
            case Let():
                return self._infer_let(ctx, t)
            case App(fun, arg):
                return self._infer_app(ctx, t, fun, arg)
            case TAbs():
                return self._infer_tabs(ctx, t)
            case TApp():
                return self._infer_tapp(ctx, t)
            case Ascribe(term, qt):
                _note("ti-as", t)
                try:
                    wf_qtype(ctx, qt)
                except WfError as err:
                    code = Code.UNBOUND if err.kind.value == "UnboundVariable" else Code.ANNOTATION
                    raise _fail(code, f"ill-formed ascription: {err}", t, "ti-as") from err
                obs, g = self.check_full(ctx, term, qt)
                return TypedResult(obs, qt, g)
            case Prim(_, qt):
                _note("ti-prim", t)
                return TypedResult(EMPTY, qt, ctx)
        raise TypeError(f"not a term: {t!r}")

    def _expose_ref(self, r: TypedResult, t: Term, rule: str) -> Ref:
        R = type_expose(r.out_ctx, r.qt.ty)
        if not isinstance(R, Ref):
            raise _fail(Code.EXPOSURE, f"expected a reference, found {_show_t(r.qt.ty)}", t, rule)
        return R

    def _infer_abs(self, ctx: Context, t: Term, fn: str, arg: str, ann: QType, body: Term) -> TypedResult:
        _note("ti-abs", t)
        _annotation(ctx, fn, ann, t, "ti-abs")
        mon = trace.active()
        if mon is not None:
            mon.hole_opened()
        g = ctx.push(SelfBind(fn, frozenset({Hole(fn)})), VarBind(arg, ann))
        r = self.infer(g, body)
        try:
            V = polarized_subst(r.qt.ty, frozenset({fn}), fn, Polarity.POS)
        except AvoidFailure as err:
            raise _fail(Code.AVOIDANCE, str(err), t, "ti-abs", atoms=[fn]) from err
        hole_fill = strip(r.out_ctx[len(ctx)].qual)
        q = (qvars(ann.qual) | hole_fill | r.obs) - {fn, arg}
        F = Fun(fn, arg, ann, QType(V, r.qt.qual))
        return TypedResult(q, QType(F, q), r.out_ctx.truncate(len(ctx)))

    def _infer_tabs(self, ctx: Context, t: TAbs) -> TypedResult:
        _note("ti-tabs", t)
        fn, X, x, bound = t.fn, t.tvar, t.qvar, t.bound
        _annotation(ctx, fn, bound, t, "ti-tabs")
        mon = trace.active()
        if mon is not None:
            mon.hole_opened()
        g = ctx.push(SelfBind(fn, frozenset({Hole(fn)})), TVarBind(X, x, bound))
        r = self.infer(g, t.body)
        try:
            V = polarized_subst(r.qt.ty, frozenset({fn}), fn, Polarity.POS)
        except AvoidFailure as err:
            raise _fail(Code.AVOIDANCE, str(err), t, "ti-tabs", atoms=[fn]) from err
        hole_fill = strip(r.out_ctx[len(ctx)].qual)
        q = (qvars(bound.qual) | hole_fill | r.obs) - {fn, x}
        A = All(fn, X, x, bound, QType(V, r.qt.qual))
        return TypedResult(q, QType(A, q), r.out_ctx.truncate(len(ctx)))

    def _infer_let(self, ctx: Context, t: Let) -> TypedResult:
        _note("ti-let", t)
        r2 = self.infer(ctx, t.rhs)
        if self.on_let is not None:
            self.on_let(t, r2)
        p = r2.qt.qual
        fn = fresh_name("let")
        lam = Abs(fn, t.name, r2.qt, t.body, span=t.span)
        r1 = self._infer_abs(r2.out_ctx, lam, fn, t.name, r2.qt, t.body)
        F = r1.qt.ty
        assert isinstance(F, Fun)
        q = r1.qt.qual
        U = _avoid(fn, q, t.name, p, F.cod, t, "ti-let")
        obs = r1.obs | r2.obs | (qvars(U.qual) - {fn, t.name})
        result = subst_qtype(U, {t.name: p, fn: q})
        return TypedResult(frozenset(obs), result, r1.out_ctx)

    def _infer_app(self, ctx: Context, t: Term, fun: Term, arg: Term) -> TypedResult:
        _note("ti-app", t)
        r1 = self.infer(ctx, fun)
        F = type_expose(r1.out_ctx, r1.qt.ty)
        if not isinstance(F, Fun):
            raise _fail(Code.EXPOSURE, f"expected a function, found {_show_t(r1.qt.ty)}", fun, "ti-app")
        F = _fresh_binders(r1.out_ctx, F)
        q = r1.qt.qual
        f, x = F.fn, F.arg
        if FRESH in q and occurs(f, F.dom.ty):
            raise _fail(
                Code.FRESH_ESCAPE,
                f"a fresh function whose parameter type mentions its self-reference {f} cannot be applied",
                t,
                "ti-app",
            )
        dom_ty = type_subst_var(F.dom.ty, q, f)
        obs2, s, g2 = self.check_infer_qual(r1.out_ctx, arg, dom_ty)
        obs3, g3 = self.conformance(g2, f, q, s, F.dom.qual, t)
        U = _avoid(f, q, x, s, F.cod, t, "ti-app")
        obs = r1.obs | obs2 | obs3 | (qvars(U.qual) - {f, x})
        result = subst_qtype(U, {x: s, f: q})
        return TypedResult(frozenset(obs), result, g3)

    def _infer_tapp(self, ctx: Context, t: TApp) -> TypedResult:
        _note("ti-tapp", t)
        V = t.targ
        try:
            wf_qtype(ctx, V)
        except WfError as err:
            code = Code.UNBOUND if err.kind.value == "UnboundVariable" else Code.ANNOTATION
            raise _fail(code, f"ill-formed type argument: {err}", t, "ti-tapp") from err
        r1 = self.infer(ctx, t.fun)
        A = type_expose(r1.out_ctx, r1.qt.ty)
        if not isinstance(A, All):
            raise _fail(Code.EXPOSURE, f"expected a polymorphic value, found {_show_t(r1.qt.ty)}", t.fun, "ti-tapp")
        A = _fresh_binders(r1.out_ctx, A)
        q = r1.qt.qual
        f, X, x = A.fn, A.tvar, A.qvar
        if FRESH in q and occurs(f, A.bound.ty):
            raise _fail(
                Code.FRESH_ESCAPE,
                f"a fresh polymorphic value whose bound mentions its self-reference {f} cannot be instantiated",
                t,
                "ti-tapp",
            )
        bound_ty = type_subst_var(A.bound.ty, q, f)
        try:
            sr = subtype_check(r1.out_ctx, V.ty, ONLY_FRESH, bound_ty)
        except SubtypeFailure as err:
            raise _fail(
                Code.SUBTYPE,
                f"type argument does not conform to the bound: {err}",
                t,
                "ti-tapp",
                expected=_show_t(bound_ty),
                actual=_show_t(V.ty),
            ) from err
        if sr.delta:
            raise _fail(Code.SUBTYPE, "type argument needs a qualifier increment", t, "ti-tapp")
        s = V.qual
        obs2, g3 = self.conformance(sr.out_ctx, f, q, s, A.bound.qual, t)
        U = _avoid(f, q, x, s, A.body, t, "ti-tapp")
        obs = r1.obs | obs2 | (qvars(s | U.qual) - {f, x})
        result = subst_qtype(U, {x: s, f: q}, {X: V.ty})
        return TypedResult(frozenset(obs), result, g3)

    # -- checking --------------------------------------------------------

    def check_infer_qual(self, ctx: Context, t: Term, T) -> tuple[frozenset, frozenset, Context]:
        obs, q, out = self._check_infer_qual(ctx, t, T)
        mon = trace.active()
        if mon is not None:
            mon.operation("check_infer_qual", ctx, out)
        return obs, q, out

    def _check_infer_qual(self, ctx: Context, t: Term, T) -> tuple[frozenset, frozenset, Context]:
        if isinstance(t, RefAlloc) and isinstance(T, Ref):
            _note("tc-ref", t)
            obs, g = self.check_full(ctx, t.init, T.referent)
            return obs, ONLY_FRESH, g
        if isinstance(t, Abs) and t.ann is None and isinstance(T, Fun):
            return self._check_abs(ctx, t, T)
        _note("tc-sub", t)
        r = self.infer(ctx, t)
        try:
            sr = subtype_check(r.out_ctx, r.qt.ty, r.qt.qual, T)
        except SubtypeFailure as err:
            raise _fail(
                Code.SUBTYPE,
                f"type mismatch: {err}",
                t,
                "tc-sub",
                expected=_show_t(T),
                actual=_show_t(r.qt.ty),
            ) from err
        q = r.qt.qual | sr.delta
        obs = r.obs | sr.delta | qvars(r.qt.qual)
        return frozenset(obs), frozenset(q), sr.out_ctx

    def _check_abs(self, ctx: Context, t: Abs, T: Fun) -> tuple[frozenset, frozenset, Context]:
        _note("tc-abs", t)
        fn, arg = t.fn, t.arg
        dom, cod = open_fun(T, fn, arg)
        try:
            wf_qtype(ctx.push(SelfBind(fn, ONLY_FRESH)), dom)
        except WfError as err:
            raise _fail(Code.ANNOTATION, f"ill-formed expected domain: {err}", t, "tc-abs") from err
        mon = trace.active()
        if mon is not None:
            mon.hole_opened()
        g = ctx.push(SelfBind(fn, frozenset({Hole(fn)})), VarBind(arg, dom))
        obs, g1 = self.check_full(g, t.body, cod)
        hole_fill = strip(g1[len(ctx)].qual)
        r = (qvars(dom.qual) | hole_fill | obs) - {fn, arg}
        return frozenset(r), frozenset(r), g1.truncate(len(ctx))

    def check_full(self, ctx: Context, t: Term, Q: QType) -> tuple[frozenset, Context]:
        obs, q, g1 = self.check_infer_qual(ctx, t, Q.ty)
        _note("tq-sub", t)
        g2 = _qinfer(g1, q, Q.qual, t, "tq-sub", "the expected qualifier")
        mon = trace.active()
        if mon is not None:
            mon.operation("check_full", ctx, g2)
        return obs | qvars(Q.qual), g2

    # -- application conformance -----------------------------------------

    def conformance(
        self, ctx: Context, f: str, q: frozenset, s: frozenset, p: frozenset, t: Term | None = None
    ) -> tuple[frozenset, Context]:
        if {FRESH, f} <= p:
            _note("fa-wild", t)
            return EMPTY, ctx
        try:
            out = qual_infer(ctx, s, p)
            _note("fa-sub", t)
            return EMPTY, out
        except UnifyFailure:
            pass
        ov = None
        if FRESH in p:
            ss, sq = saturate(ctx, s), saturate(ctx, q)
            ov = ONLY_FRESH | (ss.vars & sq.vars)
            if not ss.hole_seen and not sq.hole_seen:
                try:
                    out = qual_infer(ctx, ov, p | ONLY_FRESH)
                    _note("fa-fresh", t)
                    mon = trace.active()
                    if mon is not None:
                        mon.operation("conformance", ctx, out)
                    return ov - ONLY_FRESH, out
                except UnifyFailure:
                    pass
        shared = sorted(a for a in (ov or EMPTY) if isinstance(a, str))
        if shared:
            msg = f"argument and function both reach {', '.join(shared)}"
        else:
            msg = f"argument reachability {_show_q(s)} does not conform to {_show_q(p)}"
        raise _fail(
            Code.CONFORMANCE,
            msg,
            t,
            "fa-fresh" if FRESH in p else "fa-sub",
            expected=_show_q(p),
            actual=_show_q(s),
            atoms=shared,
        )


# -- top-level driving -------------------------------------------------------


@dataclass
class DeclResult:
    name: str
    display: str
    kind: str
    qt: QType | None = None
    obs: frozenset = EMPTY
    status: str = "skipped"
    diagnostics: list[Diagnostic] | None = None
    span: tuple[int, int] | None = None


@dataclass
class Report:
    decls: list[DeclResult]
    diagnostics: list[Diagnostic]

    @property
    def ok(self) -> bool:
        return not self.diagnostics

    def result(self, display: str) -> DeclResult:
        for d in reversed(self.decls):
            if d.display == display:
                return d
        raise KeyError(display)


def program_term(decls) -> Term:
    """Nest the value declarations into one ``Let`` chain ending in ``unit``."""
    body: Term = Const()
    for d in reversed([d for d in decls if d.term is not None]):
        body = Let(d.name, d.term, body, span=d.span)
    return body


def typecheck_program(decls, first_reported: int = 0) -> Report:
    """Check declarations in order and report each one.

    Declarations before ``first_reported`` (the prelude) are checked but not
    included in the report.
    """
    decls = [d for d in decls if d.term is not None]
    results = [DeclResult(d.name, d.display or d.name, d.kind, span=d.span) for d in decls]
    by_node: dict[int, DeclResult] = {}
    term = program_term(decls)
    node = term
    for r in results:
        assert isinstance(node, Let)
        by_node[id(node)] = r
        node = node.body

    def on_let(node: Let, res: TypedResult) -> None:
        r = by_node.get(id(node))
        if r is None:
            return
        r.qt, r.obs, r.status = res.qt, res.obs, "ok"
        mon = trace.active()
        if mon is not None:
            mon.top_level(r.display, res.qt.qual)
            if type_holes(res.qt.ty):
                mon.top_level(r.display, frozenset(type_holes(res.qt.ty)))

    checker = Checker(on_let)
    diags: list[Diagnostic] = []
    try:
        checker.infer(Context(), term)
    except CheckError as err:
        diags.append(err.diag)
        culprit = _decl_at(results, err.diag.span)
        if culprit is not None:
            culprit.status = "error"
            culprit.diagnostics = [err.diag]
            if results.index(culprit) < first_reported:
                err.diag.origin = "prelude"
    return Report(results[first_reported:], diags)


def _decl_at(results: list[DeclResult], span) -> DeclResult | None:
    # Declarations are inferred in order, so the first one without a result failed.
    pending = [r for r in results if r.status != "ok"]
    return pending[0] if pending else None
