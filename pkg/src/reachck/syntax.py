"""Lexer and recursive-descent parser for the surface language.

Every binder is renamed to a name unique within one parsing session: the
first binding of a source name keeps it, later ones get a ``'N`` suffix.
"""

from __future__ import annotations

import re
from contextlib import ExitStack
from dataclasses import dataclass, field

from .core import (
    EMPTY,
    FRESH,
    TOP,
    UNIT_Q,
    Abs,
    All,
    App,
    Ascribe,
    Assign,
    Base,
    Const,
    Deref,
    Fun,
    Let,
    Prim,
    QType,
    Ref,
    RefAlloc,
    TAbs,
    TApp,
    Term,
    Top,
    TVar,
    Var,
    fresh_name,
    rename_binders,
    subst_type,
    _subst_qual,
)
from .diagnostics import CheckError, Code, Diagnostic

KEYWORDS = frozenset({"unit", "ref", "val", "def", "type", "extern", "new", "forall", "Unit", "Top", "Ref"})

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|//[^\n]*|/\*.*?\*/)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<sym>/\\|=>|->|:=|<:|[()\[\]{},:;^*=!\\.]|♦|→|⇒|∀)
    """,
    re.VERBOSE | re.DOTALL,
)

_UNICODE = {"♦": "*", "→": "->", "⇒": "=>", "∀": "forall"}


@dataclass(frozen=True)
class Token:
    kind: str  # "ident", "kw", "sym" or "eof"
    text: str
    start: int
    end: int
    col: int = 0


def tokenize(text: str) -> list[Token]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise _syntax(f"unexpected character {text[pos]!r}", (pos, pos + 1))
        col = m.start() - (text.rfind("\n", 0, m.start()) + 1)
        if m.lastgroup == "ident":
            kind = "kw" if m.group() in KEYWORDS else "ident"
            out.append(Token(kind, m.group(), m.start(), m.end(), col))
        elif m.lastgroup == "sym":
            sym = _UNICODE.get(m.group(), m.group())
            out.append(Token("kw" if sym == "forall" else "sym", sym, m.start(), m.end(), col))
        pos = m.end()
    out.append(Token("eof", "", len(text), len(text)))
    return out


def _syntax(message: str, span) -> CheckError:
    return CheckError(Diagnostic(Code.SYNTAX, message, span, "parse"))


@dataclass(frozen=True)
class Decl:
    kind: str  # "val", "type", "extern" or "expr"
    name: str
    term: Term | None
    span: tuple[int, int]
    display: str = ""


@dataclass
class Alias:
    params: list[tuple[str, str | None]]
    body: QType


@dataclass
class ParseState:
    """Name-resolution state that persists from the prelude into a program."""

    scope: dict[str, str] = field(default_factory=dict)
    tscope: dict[str, str] = field(default_factory=dict)
    aliases: dict[str, Alias] = field(default_factory=dict)
    used: set[str] = field(default_factory=set)

    def copy(self) -> ParseState:
        return ParseState(dict(self.scope), dict(self.tscope), dict(self.aliases), set(self.used))


@dataclass
class Program:
    decls: list[Decl]
    source: str
    state: ParseState


class Parser:
    def __init__(self, text: str, state: ParseState | None = None, private_locals: bool = False):
        # With private_locals every local binder gets a generated name, which
        # keeps a library's internals from claiming names its users want.
        self.private_locals = private_locals
        self.text = text
        self.toks = tokenize(text)
        self.i = 0
        self.state = state.copy() if state is not None else ParseState()
        self.reserved = self._top_level_names()

    def _top_level_names(self) -> set[str]:
        """Names declared at the top level; local binders must not take them."""
        out, depth = set(), 0
        for k, t in enumerate(self.toks):
            if t.text in ("(", "{", "["):
                depth += 1
            elif t.text in (")", "}", "]"):
                depth -= 1
            elif depth == 0 and t.kind == "kw" and t.text in ("val", "def", "extern"):
                nxt = self.toks[k + 1]
                if nxt.kind == "ident":
                    out.add(nxt.text)
        return out

    # -- token helpers ----------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        return self.tok.kind in ("sym", "kw") and self.tok.text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.error(f"expected '{text}'")
        t = self.tok
        self.i += 1
        return t

    def ident(self) -> str:
        if self.tok.kind != "ident":
            raise self.error("expected an identifier")
        t = self.tok
        self.i += 1
        return t.text

    def error(self, message: str) -> CheckError:
        t = self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        return _syntax(f"{message}, found {found}", (t.start, max(t.end, t.start + 1)))

    def span_from(self, start: int) -> tuple[int, int]:
        return (start, self.toks[self.i - 1].end if self.i else start)

    # -- names --------------------------------------------------------------

    def bind(self, name: str, top: bool = False) -> str:
        used = self.state.used
        clash = name in used or (not top and (name in self.reserved or self.private_locals))
        if name == "_" or clash:
            name = fresh_name(name)
            while name in used:
                name = fresh_name(name)
        used.add(name)
        return name

    def scoped(self, **bindings):
        return _Scope(self, bindings)

    def resolve(self, name: str) -> str:
        return self.state.scope.get(name, name)

    # -- qualifiers and types --------------------------------------------------

    def qual(self) -> frozenset:
        self.expect("^")
        if self.accept("*"):
            return frozenset({FRESH})
        if self.tok.kind == "ident":
            return frozenset({self.resolve(self.ident())})
        self.expect("{")
        atoms = set()
        while not self.at("}"):
            if self.accept("*"):
                atoms.add(FRESH)
            else:
                atoms.add(self.resolve(self.ident()))
            if not self.accept(","):
                break
        self.expect("}")
        return frozenset(atoms)

    def qtype(self) -> QType:
        ty, q0 = self.type_primary()
        if self.at("^"):
            if q0:
                raise self.error("qualifier given twice")
            q = self.qual()
        else:
            q = q0 or EMPTY
        Q = QType(ty, q)
        if self.at("->") or self.at("=>"):
            self.i += 1
            cod = self.qtype()
            return QType(Fun(fresh_name("f"), fresh_name("x"), Q, cod), EMPTY)
        return Q

    def arrow(self) -> None:
        if not (self.accept("->") or self.accept("=>")):
            raise self.error("expected '->'")

    def fun_type(self, self_name: str | None) -> Fun:
        """Parse ``(x: T^p) -> U^q`` after an optional self name."""
        f = self.bind(self_name) if self_name else fresh_name("f")
        with self.scoped(**({self_name: f} if self_name else {})):
            self.expect("(")
            if self.accept(")"):
                x, dom = fresh_name("x"), UNIT_Q
                self.arrow()
                return Fun(f, x, dom, self.qtype())
            if self.tok.kind == "ident" and self.peek().text == ":":
                src = self.ident()
                self.expect(":")
                dom = self.qtype()
                self.expect(")")
                self.arrow()
                x = self.bind(src)
                with self.scoped(**{src: x}):
                    return Fun(f, x, dom, self.qtype())
            dom = self.qtype()
            self.expect(")")
            self.arrow()
            return Fun(f, fresh_name("x"), dom, self.qtype())

    def type_primary(self):
        t = self.tok
        if self.accept("Unit"):
            return Base(), None
        if self.accept("Top"):
            return Top(), None
        if self.accept("Ref"):
            self.expect("[")
            r = self.qtype()
            self.expect("]")
            return Ref(r), None
        if self.accept("forall"):
            return self.all_type(), None
        if t.kind == "ident":
            if self.peek().text == "(":
                name = self.ident()
                return self.fun_type(name), None
            return self.type_name()
        if self.at("("):
            # Either a function domain or a parenthesized type.
            save = self.i
            self.i += 1
            if self.at(")") or (self.tok.kind == "ident" and self.peek().text == ":"):
                self.i = save
                return self.fun_type(None), None
            inner = self.qtype()
            self.expect(")")
            if self.at("->") or self.at("=>"):
                self.i = save
                return self.fun_type(None), None
            return inner.ty, inner.qual or None
        raise self.error("expected a type")

    def all_type(self) -> All:
        src_f = self.ident() if self.tok.kind == "ident" else None
        f = self.bind(src_f) if src_f else fresh_name("f")
        with self.scoped(**({src_f: f} if src_f else {})):
            self.expect("[")
            src_X = self.ident()
            self.expect("^")
            src_x = self.ident()
            bound = self.qtype() if self.accept("<:") else QType(TOP, frozenset({FRESH}))
            self.expect("]")
            self.expect(".")
            X, x = self.bind(src_X), self.bind(src_x)
            with self.scoped(**{src_x: x}), self.tscoped(src_X, X):
                body = self.qtype()
        return All(f, X, x, bound, body)

    def tscoped(self, src: str, name: str):
        return _TScope(self, src, name)

    def type_name(self):
        start = self.tok.start
        name = self.ident()
        if name in self.state.tscope:
            return TVar(self.state.tscope[name]), None
        alias = self.state.aliases.get(name)
        if alias is None:
            raise _syntax(f"unknown type {name}", (start, start + len(name)))
        args: list[QType] = []
        if self.accept("["):
            while True:
                args.append(self.qtype())
                if not self.accept(","):
                    break
            self.expect("]")
        if len(args) != len(alias.params):
            raise _syntax(f"type {name} expects {len(alias.params)} argument(s)", self.span_from(start))
        tmap = {X: a.ty for (X, _), a in zip(alias.params, args)}
        qmap = {x: a.qual for (_, x), a in zip(alias.params, args) if x is not None}
        ty = rename_binders(subst_type(alias.body.ty, qmap, tmap))
        q = _subst_qual(alias.body.qual, qmap)
        return ty, q or None

    # -- terms --------------------------------------------------------------

    def program(self) -> Program:
        decls = []
        while self.tok.kind != "eof":
            if self.accept(";"):
                continue
            decls.append(self.top_decl(len(decls)))
        return Program(decls, self.text, self.state)

    def top_decl(self, index: int) -> Decl:
        start = self.tok.start
        if self.at("type"):
            self.type_decl()
            return Decl("type", "", None, self.span_from(start))
        if self.accept("extern"):
            src = self.ident()
            self.expect(":")
            qt = self.qtype()
            name = self.bind(src, top=True)
            self.state.scope[src] = name
            return Decl("extern", name, Prim(name, qt, span=self.span_from(start)), self.span_from(start), src)
        if self.at("val") or self.at("def"):
            src, rhs = self.binding()
            name = self.bind(src, top=True)
            self.state.scope[src] = name
            return Decl("val", name, rhs, self.span_from(start), src)
        term = self.expr()
        name = self.bind(f"it{index}")
        return Decl("expr", name, term, self.span_from(start), "-")

    def type_decl(self) -> None:
        self.expect("type")
        src = self.ident()
        params: list[tuple[str, str | None]] = []
        tbind: dict[str, str] = {}
        qbind: dict[str, str] = {}
        if self.accept("["):
            while True:
                X = self.ident()
                tbind[X] = self.bind(X)
                x = None
                if self.accept("^"):
                    xs = self.ident()
                    x = qbind[xs] = self.bind(xs)
                params.append((tbind[X], x))
                if not self.accept(","):
                    break
            self.expect("]")
        self.expect("=")
        saved = dict(self.state.tscope)
        self.state.tscope.update(tbind)
        try:
            with self.scoped(**qbind):
                body = self.qtype()
        finally:
            self.state.tscope = saved
        self.state.aliases[src] = Alias(params, body)

    def binding(self) -> tuple[str, Term]:
        """``val x [: T] = e`` or ``def f(params)... [: T] = e``; returns the source name and the rhs."""
        start = self.tok.start
        if self.accept("val"):
            src = self.ident()
            ann = self.qtype() if self.accept(":") else None
            self.expect("=")
            rhs = self.expr()
            if ann is not None:
                rhs = Ascribe(rhs, ann, span=self.span_from(start))
            return src, rhs
        self.expect("def")
        src = self.ident()
        return src, self.def_body(src, start)

    def def_body(self, src: str, start: int) -> Term:
        # the self name is always fresh so the binding itself keeps the source name
        fn = self.bind(fresh_name(src))
        params: list[tuple[str, QType]] = []
        with ExitStack() as stack:
            stack.enter_context(self.scoped(**{src: fn}))
            while self.accept("("):
                if self.accept(")"):
                    params.append((fresh_name("_"), UNIT_Q))
                    continue
                while True:
                    p = self.ident()
                    self.expect(":")
                    dom = self.qtype()
                    x = self.bind(p)
                    # later parameters and the body see earlier ones
                    stack.enter_context(self.scoped(**{p: x}))
                    params.append((x, dom))
                    if not self.accept(","):
                        break
                self.expect(")")
            if not params:
                raise self.error("expected a parameter list")
            ann = self.qtype() if self.accept(":") else None
            self.expect("=")
            body = self.expr()
        if ann is not None:
            body = Ascribe(body, ann, span=body.span)
        span = self.span_from(start)
        for k in range(len(params) - 1, -1, -1):
            x, dom = params[k]
            f = fn if k == 0 else fresh_name(src)
            body = Abs(f, x, dom, body, span=span)
        return body

    def seq(self) -> Term:
        start = self.tok.start
        if self.at("val") or self.at("def"):
            src, rhs = self.binding()
            self.expect(";")
            name = self.bind(src)
            with self.scoped(**{src: name}):
                body = self.seq()
            return Let(name, rhs, body, span=self.span_from(start))
        e = self.expr()
        if self.accept(";") and not (self.at(")") or self.at("}")):
            body = self.seq()
            return Let(fresh_name("_"), e, body, span=self.span_from(start))
        return e

    def expr(self) -> Term:
        start = self.tok.start
        if self.accept("\\"):
            return self.lambda_rest(start)
        if self.accept("/\\"):
            return self.tlambda_rest(start)
        if self.accept("ref"):
            init = self.app()
            return RefAlloc(init, span=self.span_from(start))
        lhs = self.app()
        if self.accept(":="):
            rhs = self.expr()
            return Assign(lhs, rhs, span=self.span_from(start))
        return lhs

    def lambda_rest(self, start: int) -> Abs:
        src_f = self.ident() if self.tok.kind == "ident" else None
        f = self.bind(src_f) if src_f else fresh_name("f")
        with self.scoped(**({src_f: f} if src_f else {})):
            self.expect("(")
            if self.accept(")"):
                src_x, ann = None, UNIT_Q
            else:
                src_x = self.ident()
                ann = self.qtype() if self.accept(":") else None
                self.expect(")")
            self.expect("=>")
            x = self.bind(src_x or "_")
            with self.scoped(**({src_x: x} if src_x else {})):
                body = self.expr()
        return Abs(f, x, ann, body, span=self.span_from(start))

    def tlambda_rest(self, start: int) -> TAbs:
        src_f = self.ident() if self.tok.kind == "ident" else None
        f = self.bind(src_f) if src_f else fresh_name("f")
        with self.scoped(**({src_f: f} if src_f else {})):
            self.expect("[")
            src_X = self.ident()
            self.expect("^")
            src_x = self.ident()
            bound = self.qtype() if self.accept("<:") else QType(TOP, frozenset({FRESH}))
            self.expect("]")
            self.expect("=>")
            X, x = self.bind(src_X), self.bind(src_x)
            with self.scoped(**{src_x: x}), self.tscoped(src_X, X):
                body = self.expr()
        return TAbs(f, X, x, bound, body, span=self.span_from(start))

    def starts_atom(self) -> bool:
        t = self.tok
        if t.col == 0:
            # layout: a line starting in the first column begins a new declaration
            return False
        if t.kind == "ident":
            return True
        return t.text in ("unit", "(", "{", "new", "!") and t.kind in ("kw", "sym")

    def app(self) -> Term:
        start = self.tok.start
        f = self.prefix()
        while self.starts_atom():
            arg = self.prefix()
            f = App(f, arg, span=self.span_from(start))
        return f

    def prefix(self) -> Term:
        start = self.tok.start
        if self.accept("!"):
            return Deref(self.prefix(), span=self.span_from(start))
        return self.postfix()

    def postfix(self) -> Term:
        start = self.tok.start
        t = self.atom()
        while self.at("["):
            self.i += 1
            targ = self.qtype()
            self.expect("]")
            t = TApp(t, targ, span=self.span_from(start))
        return t

    def atom(self) -> Term:
        start = self.tok.start
        t = self.tok
        if self.accept("unit"):
            return Const(span=self.span_from(start))
        if t.kind == "ident":
            name = self.ident()
            return Var(self.resolve(name), span=self.span_from(start))
        if self.accept("new"):
            self.expect("Ref")
            self.expect("(")
            init = self.expr()
            self.expect(")")
            return RefAlloc(init, span=self.span_from(start))
        if self.accept("("):
            if self.accept(")"):
                return Const(span=self.span_from(start))
            inner = self.seq()
            if self.accept(":"):
                qt = self.qtype()
                self.expect(")")
                return Ascribe(inner, qt, span=self.span_from(start))
            self.expect(")")
            return inner
        if self.accept("{"):
            return self.block_rest(start)
        raise self.error("expected an expression")

    def block_rest(self, start: int) -> Abs:
        """``{ x => e }`` is a lambda with an inferred parameter; ``{ e }`` a thunk."""
        f = fresh_name("f")
        if self.tok.kind == "ident" and self.peek().text == "=>":
            src = self.ident()
            self.expect("=>")
            x, ann = self.bind(src), None
            with self.scoped(**{src: x}):
                body = self.seq()
        else:
            x, ann = fresh_name("_"), UNIT_Q
            body = self.seq()
        self.expect("}")
        return Abs(f, x, ann, body, span=self.span_from(start))


class _Scope:
    def __init__(self, parser: Parser, bindings: dict[str, str]):
        self.parser = parser
        self.bindings = bindings
        self.saved: dict = {}

    def __enter__(self):
        scope = self.parser.state.scope
        self.saved = {k: scope.get(k) for k in self.bindings}
        scope.update(self.bindings)
        return self

    def __exit__(self, *exc):
        scope = self.parser.state.scope
        for k, v in self.saved.items():
            if v is None:
                scope.pop(k, None)
            else:
                scope[k] = v
        return False


class _TScope:
    def __init__(self, parser: Parser, src: str, name: str):
        self.parser, self.src, self.name = parser, src, name
        self.saved = None

    def __enter__(self):
        ts = self.parser.state.tscope
        self.saved = ts.get(self.src)
        ts[self.src] = self.name
        return self

    def __exit__(self, *exc):
        ts = self.parser.state.tscope
        if self.saved is None:
            ts.pop(self.src, None)
        else:
            ts[self.src] = self.saved
        return False


def parse_program(text: str, state: ParseState | None = None, private_locals: bool = False) -> Program:
    return Parser(text, state, private_locals).program()


def parse_term(text: str, state: ParseState | None = None) -> Term:
    p = Parser(text, state)
    t = p.seq()
    if p.tok.kind != "eof":
        raise p.error("unexpected input after expression")
    return t


def parse_qtype(text: str, state: ParseState | None = None) -> QType:
    p = Parser(text, state)
    q = p.qtype()
    if p.tok.kind != "eof":
        raise p.error("unexpected input after type")
    return q
