from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

import suites
from conftest import GOLDEN
from gen import Gen
from reachck.avoid import AvoidFailure, avoid_app, avoid_var, polarized_subst
from reachck.core import BASE, FRESH, UNIT_Q, Context, Fun, Polarity, QType, Ref, VarBind, alpha_eq
from reachck.pretty import canonical_pretty
from reachck.sub import subtype_check
from reachck.syntax import ParseState, parse_qtype


def qty(text: str, *free: str) -> QType:
    return parse_qtype(text, ParseState(scope={n: n for n in free}))


def ty(text: str, *free: str):
    return qty(text, *free).ty


def test_polarized_subst_examples():
    T = ty("f(x: Unit^{y}) -> Unit^{y}", "y")
    assert polarized_subst(T, frozenset({"g"}), "w", Polarity.POS) == T
    out = polarized_subst(T, frozenset({"g"}), "y", Polarity.POS)
    assert out == Fun(T.fn, T.arg, UNIT_Q, QType(BASE, frozenset({"g"})))
    with pytest.raises(AvoidFailure):
        polarized_subst(Ref(QType(BASE, frozenset({"y"}))), frozenset({"g"}), "y", Polarity.POS)


def test_polarized_subst_negative_mirrors():
    T = ty("f(x: Unit^{y}) -> Unit^{y}", "y")
    out = polarized_subst(T, frozenset({"g"}), "y", Polarity.NEG)
    assert out == Fun(T.fn, T.arg, QType(BASE, frozenset({"g"})), UNIT_Q)


def test_avoid_var_examples():
    T = ty("Unit^{}")
    assert avoid_var(T, "x") == (frozenset(), T)
    with pytest.raises(AvoidFailure):
        avoid_var(Ref(QType(BASE, frozenset({"z"}))), "z")


def test_minimality_of_outermost_avoidance():
    ctx = Context([VarBind("x", QType(Ref(UNIT_Q), frozenset({FRESH})))])
    T = ty("f(Unit^{}) -> (g(Unit^{}) -> Ref[Unit]^{x})^{x}", "x")
    delta, T1 = avoid_var(T, "x")
    assert delta == {"x"}
    assert alpha_eq(T1, ty("f(Unit^{}) -> (g(Unit^{}) -> Ref[Unit]^{f})^{f}"))
    T2 = ty("f(Unit^{}) -> (g(Unit^{}) -> Ref[Unit]^{g})^{f}")
    # succeeds whatever the initial reachability; any increment is already in q
    for q in (frozenset(), frozenset({"x"}), frozenset({FRESH})):
        assert subtype_check(ctx, T1, q, T2).delta <= q


def test_escaped_foo_avoidance_golden():
    Q = qty("(f((Ref[Unit]^{x} -> Ref[Unit]^{x})^{*, x}) -> (Ref[Unit]^{x} -> Ref[Unit]^{x})^{x})^{x}", "x")
    delta, T = avoid_var(Q.ty, "x")
    assert delta == {"x"}
    got = canonical_pretty(QType(T, Q.qual | delta))
    assert got + "\n" == (GOLDEN / "escaped-foo-avoid.golden").read_text(encoding="utf-8")


def test_avoid_app_examples():
    Q = qty("(g() -> Ref[Unit]^{g})^{x}", "x")
    assert avoid_app("f", frozenset(), "x", frozenset({"a"}), Q) == Q
    # a fresh argument that the result type never mentions: only the qualifier keeps x
    out = avoid_app("f", frozenset(), "x", frozenset({FRESH}), Q)
    assert out == Q
    fresh_fn = qty("(g() -> Ref[Unit]^{h})^{}", "h")
    out = avoid_app("h", frozenset({FRESH}), "x", frozenset(), fresh_fn)
    assert out.qual == {"h"} and alpha_eq(out.ty, ty("g() -> Ref[Unit]^{g}"))


def test_avoid_app_propagates_failure():
    Q = qty("Ref[Unit^{x}]^{}", "x")
    with pytest.raises(AvoidFailure):
        avoid_app("f", frozenset(), "x", frozenset({FRESH}), Q)


seeds = st.integers(0, 10**6)


@given(seeds)
def test_postconditions_on_kernel_fragment(seed):
    case = suites.avoid_case(Gen(seed))
    if case is None:
        return
    ctx, T, z, q = case
    try:
        delta, T2 = avoid_var(T, z)
    except AvoidFailure:
        return
    clauses = suites.avoid_clauses(ctx, T, z, q, delta, T2)
    if suites.in_kernel(T, z):
        assert clauses == []
    else:
        # only the subtyping witness may fail, and only on bound equality
        assert all(c == "(1) " + suites.KERNEL_BOUNDS for c in clauses)


def test_avoidance_suite_sample():
    t = suites.avoid_suite(400, seed=50_000)
    assert t.cases == 400 and t.extra["avoided"] > 100
    assert t.violations == 0, t.examples


def test_outside_kernel_fragment_only_trips_bound_equality():
    t = suites.avoid_suite(150, seed=50_000, kernel=False)
    assert t.violations > 0
    for *_, msg in t.examples:
        assert msg == "(1) " + suites.KERNEL_BOUNDS


def test_result_is_avoidance_fixpoint():
    T = ty("f(Unit^{}) -> (g(Unit^{}) -> Ref[Unit]^{x})^{x}", "x")
    _, T1 = avoid_var(T, "x")
    assert avoid_var(T1, "x") == (frozenset(), T1)
