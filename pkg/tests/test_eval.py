from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

import suites
from conftest import GOLDEN, corpus_files, expectation
from reachck.driver import audit, check_source, with_deep_stack
from reachck.interp import UNIT, Closure, Loc, OutOfFuel, Store, Stuck, evaluate, reachable_locs
from reachck.syntax import parse_term


def run(text: str, fuel: int = 1_000_000):
    return evaluate({}, Store(), parse_term(text), fuel)


def test_evaluate_unit():
    v, store, tr = run("unit")
    assert v == UNIT and store.cells == []


def test_read_after_alloc():
    v, store, tr = run("val x = ref unit; !x")
    assert v == UNIT
    assert len(store.cells) == 1
    assert tr.reads == {0} and tr.fresh_locs == {0} and tr.writes == set()


def test_capture_fresh_closure():
    v, store, tr = run(r"(\f(x: Ref[Unit]^{*}) => \g() => x) (ref unit)")
    assert isinstance(v, Closure)
    assert tr.fresh_locs == {0}
    assert reachable_locs(v) == {0}


def test_assignment_records_write():
    v, store, tr = run("val x = ref unit; x := unit")
    assert v == UNIT and tr.writes == {0}


def test_reachable_locs_examples():
    assert reachable_locs(UNIT) == frozenset()
    assert reachable_locs(Loc(3)) == {3}
    c = Closure({"x": Loc(0), "y": UNIT}, "f", "z", parse_term("unit"))
    assert reachable_locs(c) == {0}


def test_shallow_model_ignores_store_contents():
    v, store, _ = run("ref (ref unit)")
    assert reachable_locs(v) == {v.index}


def test_stuck_and_fuel():
    with pytest.raises(Stuck):
        run("!unit")
    with pytest.raises(OutOfFuel):
        run("val x = ref unit; !x", fuel=2)


def test_fresh_ref_audit_passes():
    checked = check_source("val r = new Ref(unit)\n")
    report = audit(checked)
    assert report.passed and [d.name for d in report.decls] == ["r"]


def test_negative_control_fails_value_clause():
    report = suites.negative_control()
    assert not report.passed
    assert not report.clause("b")
    assert report.clause("a") and report.clause("c")


def test_capture_fresh_program_audit():
    src = (GOLDEN / "capture-fresh.rt").read_text(encoding="utf-8")
    checked = check_source(src)
    assert checked.ok
    report = audit(checked)
    assert report.passed, [d.detail for d in report.decls]


@pytest.mark.parametrize("path", [p for p in corpus_files() if expectation(p) == "ok"], ids=lambda p: p.stem)
def test_corpus_audit(path):
    checked = with_deep_stack(check_source, path.read_text(encoding="utf-8"))
    report = with_deep_stack(audit, checked, 1_000_000)
    assert report.clause("a") and report.clause("b") and report.clause("c"), [d.detail for d in report.decls]
    assert report.passed


TERMS = [
    "val x = ref unit; val y = ref x; !y := unit",
    r"val c = ref unit; val f = \g() => c := unit; f ()",
    r"/\[X^x <: Top^{}] => \(y: X^{x}) => y",
]


@given(st.sampled_from(TERMS))
def test_evaluation_is_deterministic(text):
    a = run(text)
    b = run(text)
    assert len(a[1].cells) == len(b[1].cells)
    assert (a[2].fresh_locs, a[2].reads, a[2].writes) == (b[2].fresh_locs, b[2].reads, b[2].writes)


@given(st.sampled_from(TERMS))
def test_store_only_grows(text):
    store = Store()
    evaluate({}, store, parse_term("ref unit"))
    n = len(store.cells)
    _, _, tr = evaluate({}, store, parse_term(text))
    # existing locations stay valid and new ones are appended after them
    assert len(store.cells) >= n
    assert tr.fresh_locs == set(range(n, len(store.cells)))
