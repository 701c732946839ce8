from __future__ import annotations

import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import CORPUS, GOLDEN, corpus_files
from gen import Gen, canon_term
from reachck import cli
from reachck.core import EMPTY, FRESH, UNIT_Q, Abs, Const, Prim, QType, Ref, Var, alpha_eq_q
from reachck.diagnostics import CheckError, Code
from reachck.driver import check_source, load_prelude, prelude_path
from reachck.pretty import canonical_pretty, pretty_qual, pretty_qtype, pretty_term
from reachck.syntax import ParseState, parse_program, parse_qtype, parse_term


def test_parse_constant():
    assert parse_term("unit") == Const()


def test_parse_capture_fresh():
    t = parse_term(r"\f(x: Ref[Unit]^{*}) => \g() => x")
    assert isinstance(t, Abs) and t.ann == QType(Ref(UNIT_Q), frozenset({FRESH}))
    inner = t.body
    assert isinstance(inner, Abs) and inner.body == Var(t.arg)
    # the thunk takes an explicitly empty-qualified Unit
    assert inner.ann == UNIT_Q


def test_syntax_error_has_span():
    with pytest.raises(CheckError) as info:
        parse_program("val x = ;")
    d = info.value.diag
    assert d.code is Code.SYNTAX and d.span is not None
    assert d.span[0] == "val x = ;".index(";")


def test_new_ref_is_sugar():
    assert parse_term("new Ref(unit)") == parse_term("ref unit")


def test_binders_are_unique():
    t = parse_term(r"\f(x: Unit^{}) => \f(x: Unit^{}) => x")
    assert t.fn != t.body.fn and t.arg != t.body.arg


def test_qualifier_rendering():
    assert pretty_qual(EMPTY) == "^{}"
    assert pretty_qual(EMPTY, compact=True) == ""
    assert pretty_qual(frozenset({"b", FRESH, "a"})) == "^{a, b, *}"


def test_unicode_input_is_accepted():
    assert alpha_eq_q(parse_qtype("(f() → Ref[Unit]^{f})^{♦}"), parse_qtype("(f() -> Ref[Unit]^{f})^{*}"))


def test_escaped_foo_renders_golden():
    checked = check_source((GOLDEN / "escaped-foo.rt").read_text(encoding="utf-8"))
    line = f"escapedFoo : {canonical_pretty(checked.report.result('escapedFoo').qt)}\n"
    assert line == (GOLDEN / "escaped-foo.golden").read_text(encoding="utf-8")


seeds = st.integers(0, 10**6)


@given(seeds)
def test_round_trip_random_terms(seed):
    t = Gen(seed).term([], [], 4)
    assert canon_term(parse_term(pretty_term(t))) == canon_term(t)


@given(seeds)
def test_round_trip_random_types(seed):
    g = Gen(seed)
    ctx = g.context(3, 2, selves=False, tvars=False)
    T = g.wf_type(ctx, 3)
    if T is None:
        return
    Q = QType(T, g.qual(ctx.names(), 2, 0.3))
    state = ParseState(scope={n: n for n in ctx.names()})
    assert alpha_eq_q(parse_qtype(pretty_qtype(Q), state), Q)


def test_round_trip_thousand_terms():
    for i in range(1000):
        t = Gen(i).term([], [], 4)
        assert canon_term(parse_term(pretty_term(t))) == canon_term(t), pretty_term(t)


@pytest.mark.parametrize("path", corpus_files() + [prelude_path()], ids=lambda p: p.stem)
def test_round_trip_declarations(path):
    pre = load_prelude()
    state = pre.state.copy() if path != prelude_path() else None
    prog = parse_program(path.read_text(encoding="utf-8"), state, private_locals=state is None)
    scope = ParseState(scope={v: v for v in prog.state.scope.values()})
    n = 0
    for d in prog.decls:
        if d.term is None or isinstance(d.term, Prim):
            continue  # extern primitives have no surface syntax
        again = parse_term(pretty_term(d.term), scope.copy())
        assert canon_term(again) == canon_term(d.term), d.name
        n += 1
    assert n > 0


def test_prelude_checks_cleanly():
    checked = check_source("")
    assert checked.ok and checked.prelude_count > 10


# -- command line ----------------------------------------------------------------


def run_cli(capsys, *args):
    code = cli.main([str(a) for a in args])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cli_ok_file(capsys):
    code, out, _ = run_cli(capsys, CORPUS / "pair-trans.rt")
    assert code == cli.EXIT_OK and " : " in out


def test_cli_escape_diagnostic(capsys):
    code, out, _ = run_cli(capsys, CORPUS / "try-esc.rt")
    assert code == cli.EXIT_DIAG
    assert "error[fresh-escape]" in out and "try-esc.rt:3:" in out


def test_cli_missing_file(capsys, tmp_path):
    code, _, err = run_cli(capsys, tmp_path / "absent.rt")
    assert code == cli.EXIT_USAGE and "cannot read" in err


def test_cli_usage_errors(capsys, tmp_path):
    assert run_cli(capsys)[0] == cli.EXIT_USAGE
    assert run_cli(capsys, "--bogus")[0] == cli.EXIT_USAGE
    assert run_cli(capsys, CORPUS / "pair-trans.rt", "--fuel", "0")[0] == cli.EXIT_USAGE
    assert run_cli(capsys, CORPUS / "pair-trans.rt", "--prelude", tmp_path / "none.rt")[0] == cli.EXIT_USAGE


def test_cli_json_is_stable(capsys):
    _, first, _ = run_cli(capsys, CORPUS / "par-ctr2.rt", "--emit-json")
    _, second, _ = run_cli(capsys, CORPUS / "par-ctr2.rt", "--emit-json")
    assert first == second
    records = [json.loads(line) for line in first.splitlines()]
    for rec in records:
        assert rec["schema"] == 1
        assert set(rec) == {"schema", "file", "name", "type", "qualifier", "filter", "status", "diagnostics"}
        assert list(rec) == sorted(rec)
        if rec["qualifier"] is not None:
            assert rec["qualifier"] == sorted(rec["qualifier"], key=lambda a: (a == "*", a))
    errors = [r for r in records if r["status"] == "error"]
    assert errors and errors[0]["diagnostics"][0]["code"] == "conformance-failure"


def test_cli_eval(capsys):
    code, out, _ = run_cli(capsys, CORPUS / "pair-trans.rt", "--eval")
    assert code == cli.EXIT_OK and "eval " in out and ": pass" in out


def test_cli_trace(capsys):
    code, _, err = run_cli(capsys, GOLDEN / "capture-fresh.rt", "--trace")
    assert code == cli.EXIT_OK and "ti-app" in err and "sa-fun" in err


def test_cli_env_prelude(capsys, monkeypatch, tmp_path):
    alt = tmp_path / "tiny.rt"
    alt.write_text("val one = unit\n", encoding="utf-8")
    src = tmp_path / "use.rt"
    src.write_text("val two = one\n", encoding="utf-8")
    monkeypatch.setenv("REACHCK_PRELUDE", str(alt))
    code, out, _ = run_cli(capsys, src)
    assert code == cli.EXIT_OK and "two : Unit^{one}" in out


def test_cli_jobs(capsys):
    files = [CORPUS / "pair-trans.rt", CORPUS / "try-esc.rt"]
    code, out, _ = run_cli(capsys, *files, "--jobs", "2")
    assert code == cli.EXIT_DIAG
    # results keep argument order even when files are checked in parallel
    assert out.index("first : ") < out.index("try-esc.rt:3:")
    assert out.count("error[") == 1


def test_cli_bench(capsys, tmp_path):
    fig = tmp_path / "bench.png"
    code, out, _ = run_cli(capsys, "--bench", "--sizes", "5,10,20", "--plot", fig)
    assert code == cli.EXIT_OK
    rows = [line.split("\t") for line in out.splitlines() if line and not line.startswith(("#", "size"))]
    assert [int(r[0]) for r in rows] == [5, 10, 20]
    assert "R^2" in out and fig.stat().st_size > 0


def test_cli_golden_files(capsys):
    for rt in sorted(GOLDEN.glob("*.rt")):
        code, out, _ = run_cli(capsys, rt)
        assert code == cli.EXIT_OK
        assert out == rt.with_suffix(".golden").read_text(encoding="utf-8")
