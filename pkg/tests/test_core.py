from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gen import Gen
from reachck.core import (
    BASE,
    FRESH,
    TOP,
    UNIT_Q,
    Context,
    Fun,
    Hole,
    MalformedQualifier,
    Polarity,
    QType,
    Ref,
    SelfBind,
    TVar,
    VarBind,
    alpha_eq,
    occurs,
    overlap,
    qual_subst,
    saturate,
    type_subst_tvar,
    type_subst_var,
)
from reachck.syntax import ParseState, parse_qtype


def ty(text: str, *free: str):
    """Parse a type whose free qualifier names are ``free``."""
    return parse_qtype(text, ParseState(scope={n: n for n in free})).ty


def ref(q=()):
    return QType(Ref(UNIT_Q), frozenset(q))


def closure_oracle(ctx: Context, q) -> tuple[frozenset, bool, bool]:
    """Saturation via Warshall closure of the entry-to-entry reach matrix."""
    names = ctx.names()
    n = len(names)
    R = np.eye(n, dtype=bool)
    for i, e in enumerate(ctx):
        qual = e.qt.qual if isinstance(e, VarBind) else e.qual
        for a in qual:
            if isinstance(a, str):
                R[i, names.index(a)] = True
    for k in range(n):
        R |= np.outer(R[:, k], R[k, :])
    start = [names.index(a) for a in q if isinstance(a, str)]
    reached = {names[j] for i in start for j in range(n) if R[i, j]}
    quals = [set(q)] + [
        set(ctx[names.index(x)].qt.qual if isinstance(ctx[names.index(x)], VarBind) else ctx[names.index(x)].qual)
        for x in reached
    ]
    fresh = any(FRESH in s for s in quals)
    hole = any(isinstance(a, Hole) for s in quals for a in s)
    return frozenset(reached), fresh, hole


# -- qualifier substitution ----------------------------------------------------


def test_qual_subst_examples():
    assert qual_subst(frozenset({"x", "a"}), frozenset({"b", "c"}), "x") == {"a", "b", "c"}
    assert qual_subst(frozenset({"a"}), frozenset({"b"}), "x") == {"a"}
    assert qual_subst(frozenset({"x"}), frozenset({"a"}), "x") == {"a"}


def test_type_subst_var_examples():
    assert type_subst_var(Ref(QType(BASE, frozenset({"x"}))), frozenset({"a"}), "x") == Ref(QType(BASE, frozenset({"a"})))
    T = ty("f(y: Unit^{x}) -> Unit^{x}", "x")
    assert alpha_eq(type_subst_var(T, frozenset({"a", "b"}), "x"), ty("f(y: Unit^{a, b}) -> Unit^{a, b}", "a", "b"))
    # the result type of identityAB applied to a
    assert type_subst_var(ty("Ref[Unit]", "x"), frozenset({"a"}), "x") == Ref(UNIT_Q)


def test_type_subst_tvar_examples():
    X = TVar("X")
    assert type_subst_tvar(X, BASE, frozenset({"a"}), "X", "x") == BASE
    assert type_subst_tvar(Ref(QType(X, frozenset())), BASE, frozenset(), "X", "x") == Ref(UNIT_Q)
    inner = Ref(QType(X, frozenset({"x"})))
    assert type_subst_tvar(inner, BASE, frozenset({"s"}), "X", "x") == Ref(QType(BASE, frozenset({"s"})))


# -- saturation and overlap -----------------------------------------------------


def test_saturate_examples():
    assert tuple(saturate(Context(), frozenset())) == (frozenset(), False, False)
    ctx = Context([VarBind("a", ref({FRESH})), VarBind("c", ref({"a"}))])
    assert tuple(saturate(ctx, {"c"})) == (frozenset({"c", "a"}), True, False)
    holed = Context([SelfBind("f", frozenset({Hole("f")}))])
    assert tuple(saturate(holed, {"f"})) == (frozenset({"f"}), False, True)


def test_saturate_examples_agree_with_closure_oracle():
    ctx = Context([VarBind("a", ref({FRESH})), VarBind("c", ref({"a"}))])
    assert closure_oracle(ctx, {"c"}) == (frozenset({"c", "a"}), True, False)
    holed = Context([SelfBind("f", frozenset({Hole("f")}))])
    assert closure_oracle(holed, {"f"}) == (frozenset({"f"}), False, True)


def test_saturate_unknown_variable():
    with pytest.raises(MalformedQualifier):
        saturate(Context(), {"ghost"})


def test_overlap_examples():
    sep = Context([VarBind("a", ref({FRESH})), VarBind("b", ref({FRESH}))])
    assert overlap(sep, {"a"}, {"b"}) == {FRESH}
    alias = Context([VarBind("a", ref({FRESH})), VarBind("c", ref({"a"}))])
    assert overlap(alias, {"a"}, {"c"}) == {FRESH, "a"}
    assert overlap(sep, frozenset(), {"a", "b"}) == {FRESH}


# -- occurrence --------------------------------------------------------------------


def test_occurs_examples():
    assert not occurs("x", BASE, Polarity.ANY)
    T = ty("f(x: Unit^{}) -> Unit^{z}", "z")
    assert occurs("z", T, Polarity.POS)
    assert not occurs("z", T, Polarity.NEG)
    assert occurs("f", Ref(QType(BASE, frozenset({"f"}))), Polarity.NEG)


def test_occurs_binders_shadow():
    T = ty("f(x: Unit^{}) -> Unit^{f, x}")
    assert not occurs(T.fn, T) and not occurs(T.arg, T)


# -- properties ----------------------------------------------------------------------

seeds = st.integers(0, 10**6)


@given(seeds)
def test_identity_substitution(seed):
    g = Gen(seed)
    names = [g.name("a") for _ in range(4)]
    q = g.qual(names, 4, 0.3)
    x = g.rng.choice(names)
    assert qual_subst(q, frozenset({x}), x) == q


@given(seeds)
def test_saturation_is_closed_and_matches_oracle(seed):
    g = Gen(seed)
    ctx = g.context(6, 5, tvars=False)
    q = g.qual(ctx.names(), 5, 0.3)
    s = saturate(ctx, q)
    again = saturate(ctx, s.vars)
    assert again.vars == s.vars
    if FRESH not in q:
        assert (again.fresh_seen, again.hole_seen) == (s.fresh_seen, s.hole_seen)
    assert tuple(s) == closure_oracle(ctx, q)


@given(seeds)
def test_overlap_symmetric_and_fresh(seed):
    g = Gen(seed)
    ctx = g.context(6, 5)
    p, q = g.qual(ctx.names(), 5, 0.3), g.qual(ctx.names(), 5, 0.3)
    o = overlap(ctx, p, q)
    assert o == overlap(ctx, q, p)
    assert FRESH in o


@given(seeds)
def test_absent_means_absent_at_each_polarity(seed):
    g = Gen(seed)
    ctx = g.context(4, 3)
    T = g.wf_type(ctx, 3)
    if T is None:
        return
    for y in ctx.names():
        if not occurs(y, T, Polarity.ANY):
            assert not occurs(y, T, Polarity.POS)
            assert not occurs(y, T, Polarity.NEG)


@given(seeds)
def test_substituting_an_unused_variable_is_identity(seed):
    g = Gen(seed)
    ctx = g.context(4, 3)
    T = g.wf_type(ctx, 3)
    if T is None:
        return
    assert type_subst_var(T, frozenset({"unused"}), "never_bound") == T


def test_fun_shapes_compare_up_to_renaming():
    a = Fun("f", "x", UNIT_Q, QType(TOP, frozenset({"f", "x"})))
    b = Fun("g", "y", UNIT_Q, QType(TOP, frozenset({"g", "y"})))
    assert alpha_eq(a, b)
    assert not alpha_eq(a, Fun("g", "y", UNIT_Q, QType(TOP, frozenset({"y"}))))
