from __future__ import annotations

from functools import lru_cache
from itertools import combinations

from hypothesis import given
from hypothesis import strategies as st

import suites
from gen import Gen
from reachck.core import FRESH, UNIT_Q, Context, Hole, QType, Ref, SelfBind, TVarBind, VarBind, has_hole
from reachck.oracle import decl_subqual
from reachck.qual import qual_check


def ref(*q):
    return QType(Ref(UNIT_Q), frozenset(q))


ABC = Context([VarBind("a", ref(FRESH)), VarBind("b", ref(FRESH)), VarBind("c", ref("a", "b"))])


def naive(ctx: Context, p, q, depth: int) -> bool:
    """Top-down search applying each subqualifying rule literally."""
    # the full universe, ♦ included, so the oracle's pruning is checked too
    universe = tuple(set(ctx.names()) | {a for a in p | q if isinstance(a, str)}) + (FRESH,)
    subsets = [frozenset(c) for k in range(len(universe) + 1) for c in combinations(universe, k)]

    def axiom(p, q) -> bool:
        if p <= q:
            return True
        for e in ctx:
            match e:
                case VarBind(x, qt):
                    r = qt.qual
                case TVarBind(_, x, bound):
                    r = bound.qual
                case SelfBind(x, r):
                    # only self entries pack; an ordinary variable packing its own
                    # qualifier would make b and c comparable in the ABC context
                    if p == frozenset(a for a in r if a is not FRESH and not isinstance(a, Hole)) and q == {x}:
                        return True
            if p == {x} and FRESH not in r and not has_hole(r) and q == r:
                return True
        return False

    @lru_cache(maxsize=None)
    def go(p, q, d) -> bool:
        if d <= 0:
            return False
        if axiom(p, q):
            return True
        if d == 1:
            return False
        if any(go(p, r, d - 1) and go(r, q, d - 1) for r in subsets):
            return True
        for p1 in subsets:
            if not p1 <= p:
                continue
            for q1 in subsets:
                if not q1 <= q or not go(p1, q1, d - 1):
                    continue
                for p2 in subsets:
                    if p1 | p2 != p:
                        continue
                    for q2 in subsets:
                        if q1 | q2 == q and go(p2, q2, d - 1):
                            return True
        return False

    return go(frozenset(p), frozenset(q), depth)



def test_examples():
    assert decl_subqual(Context(), frozenset(), {"a"}, 1)
    assert not decl_subqual(ABC, {"b"}, {"c"}, 8)
    assert not decl_subqual(ABC, {"c"}, {"b"}, 8)
    assert decl_subqual(ABC, {"c"}, {"a", "b"}, 8)


def test_freshness_is_never_absorbed():
    assert not decl_subqual(ABC, {FRESH}, {"a"}, 8)
    assert decl_subqual(ABC, {FRESH, "c"}, {FRESH, "a", "b"}, 8)


def test_ordinary_variables_do_not_pack():
    assert not decl_subqual(ABC, {"a", "b"}, {"c"}, 8)


def test_self_packing():
    ctx = Context([VarBind("x", ref(FRESH)), SelfBind("f", frozenset({"x"}))])
    assert decl_subqual(ctx, {"x"}, {"f"}, 1)
    assert decl_subqual(ctx, {"x", "f"}, {"f"}, 2)


seeds = st.integers(0, 10**6)


@given(seeds)
def test_monotone_in_depth(seed):
    g = Gen(seed)
    ctx = g.context(5, 4)
    p, q = g.qual(ctx.names(), 4, 0.3), g.qual(ctx.names(), 4, 0.3)
    answers = [decl_subqual(ctx, p, q, d) for d in range(1, 9)]
    assert answers == sorted(answers)


@given(seeds)
def test_matrix_search_matches_literal_search(seed):
    g = Gen(seed)
    ctx = g.context(3, 3)
    p, q = g.qual(ctx.names(), 3, 0.3), g.qual(ctx.names(), 3, 0.3)
    for d in (1, 2, 3):
        assert decl_subqual(ctx, p, q, d) == naive(ctx, p, q, d)


def test_differential_suite_sample():
    t = suites.oracle_suite(300, seed=60_000)
    assert t.cases == 300 and t.violations == 0, t.examples
    assert 0 < t.extra["derivable"] < 300


def test_agrees_with_check_on_fixed_context():
    for p in ({"a"}, {"b"}, {"c"}, {"a", "b"}, {"a", "c"}):
        for q in ({"a"}, {"b"}, {"c"}, {"a", "b"}, {"b", "c"}):
            assert decl_subqual(ABC, p, q, 8) == qual_check(ABC, frozenset(p), frozenset(q))
