"""Syntax of the calculus and the pure operations over it.

Qualifiers are frozensets of atoms.  An atom is a variable name (``str``),
the freshness marker :data:`FRESH`, or a :class:`Hole` owned by a self entry.
Types, terms and context entries are frozen dataclasses, so every operation
here returns new values.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Mapping, Union


# -- atoms and qualifiers ---------------------------------------------------


@dataclass(frozen=True)
class Fresh:
    """The freshness marker."""

    def __repr__(self) -> str:
        return "♦"


@dataclass(frozen=True)
class Hole:
    """Inference placeholder inside the qualifier of self entry ``owner``."""

    owner: str

    def __repr__(self) -> str:
        return f"∇{self.owner}"


FRESH = Fresh()

Atom = Union[str, Fresh, Hole]
Qual = frozenset
EMPTY: frozenset = frozenset()
ONLY_FRESH: frozenset = frozenset({FRESH})


def qual(*atoms: Atom) -> frozenset:
    return frozenset(atoms)


def qvars(q: Iterable[Atom]) -> frozenset:
    """The variable atoms of ``q``."""
    return frozenset(a for a in q if isinstance(a, str))


def holes(q: Iterable[Atom]) -> frozenset:
    return frozenset(a for a in q if isinstance(a, Hole))


def has_hole(q: Iterable[Atom]) -> bool:
    return any(isinstance(a, Hole) for a in q)


def strip(q: Iterable[Atom]) -> frozenset:
    """Drop the freshness marker and any holes."""
    return qvars(q)


def qual_subst(q: frozenset, p: frozenset, x: str) -> frozenset:
    if x in q:
        return (q - {x}) | p
    return q


def atom_key(a: Atom) -> tuple:
    """Sort key giving variables first (by name), then ♦, then holes."""
    if isinstance(a, str):
        return (0, a)
    if isinstance(a, Fresh):
        return (1, "")
    return (2, a.owner)


# -- fresh names ------------------------------------------------------------

_counter = itertools.count(1)


def base_name(name: str) -> str:
    return name.split("'", 1)[0] or "v"


def fresh_name(base: str = "v") -> str:
    return f"{base_name(base)}'{next(_counter)}"


# -- types ------------------------------------------------------------------


@dataclass(frozen=True)
class Base:
    def __repr__(self) -> str:
        return "Unit"


@dataclass(frozen=True)
class Top:
    def __repr__(self) -> str:
        return "Top"


@dataclass(frozen=True)
class TVar:
    name: str


@dataclass(frozen=True)
class Ref:
    referent: QType


@dataclass(frozen=True)
class Fun:
    """Dependent function type ``fn(arg: dom) -> cod`` with self name ``fn``."""

    fn: str
    arg: str
    dom: QType
    cod: QType


@dataclass(frozen=True)
class All:
    """Bounded quantification ``forall fn[tvar^qvar <: bound]. body``."""

    fn: str
    tvar: str
    qvar: str
    bound: QType
    body: QType


Type = Union[Base, Top, TVar, Ref, Fun, All]


@dataclass(frozen=True)
class QType:
    ty: Type
    qual: frozenset = EMPTY


BASE = Base()
TOP = Top()
UNIT_Q = QType(BASE, EMPTY)


class Polarity(Enum):
    ANY = "any"
    POS = "pos"
    NEG = "neg"

    def flip(self) -> Polarity:
        if self is Polarity.POS:
            return Polarity.NEG
        if self is Polarity.NEG:
            return Polarity.POS
        return self


# -- terms ------------------------------------------------------------------

Span = tuple[int, int]


@dataclass(frozen=True)
class Node:
    span: Span | None = field(default=None, compare=False, repr=False, kw_only=True)


@dataclass(frozen=True)
class Const(Node):
    pass


@dataclass(frozen=True)
class Var(Node):
    name: str


@dataclass(frozen=True)
class RefAlloc(Node):
    init: Term


@dataclass(frozen=True)
class Deref(Node):
    ref: Term


@dataclass(frozen=True)
class Assign(Node):
    ref: Term
    value: Term


@dataclass(frozen=True)
class Abs(Node):
    fn: str
    arg: str
    ann: QType | None
    body: Term


@dataclass(frozen=True)
class App(Node):
    fun: Term
    arg: Term


@dataclass(frozen=True)
class TAbs(Node):
    fn: str
    tvar: str
    qvar: str
    bound: QType
    body: Term


@dataclass(frozen=True)
class TApp(Node):
    fun: Term
    targ: QType


@dataclass(frozen=True)
class Ascribe(Node):
    term: Term
    qt: QType


@dataclass(frozen=True)
class Let(Node):
    name: str
    rhs: Term
    body: Term


@dataclass(frozen=True)
class Prim(Node):
    """An opaque primitive with a declared type; the interpreter supplies it."""

    name: str
    qt: QType


Term = Union[Const, Var, RefAlloc, Deref, Assign, Abs, App, TAbs, TApp, Ascribe, Let, Prim]


# -- contexts ---------------------------------------------------------------


@dataclass(frozen=True)
class VarBind:
    name: str
    qt: QType


@dataclass(frozen=True)
class TVarBind:
    tname: str
    name: str
    bound: QType


@dataclass(frozen=True)
class SelfBind:
    name: str
    qual: frozenset


Entry = Union[VarBind, TVarBind, SelfBind]


def entry_qual(e: Entry) -> frozenset:
    if isinstance(e, VarBind):
        return e.qt.qual
    if isinstance(e, TVarBind):
        return e.bound.qual
    return e.qual


class Context:
    """An ordered, immutable sequence of bindings with name lookup.

    ``positions`` maps every atom name (term variables, quantifier qualifier
    names, self names) to its index; ``tpositions`` maps type variables.
    """

    __slots__ = ("entries", "positions", "tpositions")

    def __init__(self, entries: Iterable[Entry] = ()):
        self.entries: tuple[Entry, ...] = tuple(entries)
        self.positions: dict[str, int] = {}
        self.tpositions: dict[str, int] = {}
        for i, e in enumerate(self.entries):
            self.positions[e.name] = i
            if isinstance(e, TVarBind):
                self.tpositions[e.tname] = i

    @classmethod
    def _derive(cls, entries, positions, tpositions) -> Context:
        c = cls.__new__(cls)
        c.entries = entries
        c.positions = positions
        c.tpositions = tpositions
        return c

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[Entry]:
        return iter(self.entries)

    def __getitem__(self, i: int) -> Entry:
        return self.entries[i]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Context) and self.entries == other.entries

    def __hash__(self) -> int:
        return hash(self.entries)

    def __repr__(self) -> str:
        return f"Context({list(self.entries)!r})"

    def __contains__(self, name: str) -> bool:
        return name in self.positions

    def lookup(self, name: str) -> Entry | None:
        i = self.positions.get(name)
        return None if i is None else self.entries[i]

    def position(self, name: str) -> int:
        return self.positions[name]

    def tlookup(self, tname: str) -> TVarBind | None:
        i = self.tpositions.get(tname)
        return None if i is None else self.entries[i]

    def push(self, *entries: Entry) -> Context:
        positions = dict(self.positions)
        tpositions = self.tpositions
        n = len(self.entries)
        for k, e in enumerate(entries):
            positions[e.name] = n + k
            if isinstance(e, TVarBind):
                if tpositions is self.tpositions:
                    tpositions = dict(tpositions)
                tpositions[e.tname] = n + k
        return Context._derive(self.entries + tuple(entries), positions, tpositions)

    def truncate(self, n: int) -> Context:
        if n == len(self.entries):
            return self
        return Context(self.entries[:n])

    def replace(self, i: int, entry: Entry) -> Context:
        old = self.entries[i]
        assert old.name == entry.name
        entries = self.entries[:i] + (entry,) + self.entries[i + 1 :]
        return Context._derive(entries, self.positions, self.tpositions)

    def extend_hole(self, owner: str, atoms: Iterable[str]) -> Context:
        """Record ``atoms`` into the hole of self entry ``owner``."""
        i = self.positions[owner]
        e = self.entries[i]
        assert isinstance(e, SelfBind) and Hole(owner) in e.qual
        new = e.qual | frozenset(atoms)
        if new == e.qual:
            return self
        return self.replace(i, SelfBind(owner, new))

    def names(self) -> list[str]:
        return [e.name for e in self.entries]


EMPTY_CTX = Context()


# -- substitution -----------------------------------------------------------


def _subst_qual(q: frozenset, qmap: Mapping[str, frozenset]) -> frozenset:
    if not qmap or not any(isinstance(a, str) and a in qmap for a in q):
        return q
    out: set = set()
    for a in q:
        if isinstance(a, str) and a in qmap:
            out |= qmap[a]
        else:
            out.add(a)
    return frozenset(out)


def _without(m: Mapping, *names: str) -> Mapping:
    if any(n in m for n in names):
        return {k: v for k, v in m.items() if k not in names}
    return m


def subst_type(T: Type, qmap: Mapping[str, frozenset], tmap: Mapping[str, Type] | None = None) -> Type:
    """Simultaneous substitution of qualifier variables and type variables.

    Bound names shadow entries of the maps, so the result is correct even
    when a binder happens to reuse a substituted name.
    """
    tmap = tmap or {}
    if not qmap and not tmap:
        return T
    match T:
        case Base() | Top():
            return T
        case TVar(name):
            return tmap.get(name, T)
        case Ref(referent):
            return Ref(subst_qtype(referent, qmap, tmap))
        case Fun(fn, arg, dom, cod):
            qm = _without(qmap, fn)
            dom2 = subst_qtype(dom, qm, tmap)
            cod2 = subst_qtype(cod, _without(qm, arg), tmap)
            return Fun(fn, arg, dom2, cod2)
        case All(fn, tvar, qvar, bound, body):
            qm = _without(qmap, fn)
            bound2 = subst_qtype(bound, qm, tmap)
            body2 = subst_qtype(body, _without(qm, qvar), _without(tmap, tvar))
            return All(fn, tvar, qvar, bound2, body2)
    raise TypeError(f"not a type: {T!r}")


def subst_qtype(Q: QType, qmap: Mapping[str, frozenset], tmap: Mapping[str, Type] | None = None) -> QType:
    return QType(subst_type(Q.ty, qmap, tmap), _subst_qual(Q.qual, qmap))


def type_subst_var(T: Type, p: frozenset, x: str) -> Type:
    return subst_type(T, {x: frozenset(p)})


def qtype_subst_var(Q: QType, p: frozenset, x: str) -> QType:
    return subst_qtype(Q, {x: frozenset(p)})


def type_subst_tvar(T: Type, V: Type, s: frozenset, X: str, x: str) -> Type:
    return subst_type(T, {x: frozenset(s)}, {X: V})


def rename_binders(T: Type, names: Mapping[str, str] | None = None) -> Type:
    """Rename every binder inside ``T`` to a fresh name."""
    names = dict(names or {})

    def go(T: Type, names: dict) -> Type:
        match T:
            case Base() | Top():
                return T
            case TVar(name):
                return TVar(names.get(name, name))
            case Ref(r):
                return Ref(goq(r, names))
            case Fun(fn, arg, dom, cod):
                f2, x2 = fresh_name(fn), fresh_name(arg)
                inner = {**names, fn: f2}
                dom2 = goq(dom, inner)
                cod2 = goq(cod, {**inner, arg: x2})
                return Fun(f2, x2, dom2, cod2)
            case All(fn, tvar, qvar, bound, body):
                f2, X2, x2 = fresh_name(fn), fresh_name(tvar), fresh_name(qvar)
                inner = {**names, fn: f2}
                bound2 = goq(bound, inner)
                body2 = goq(body, {**inner, tvar: X2, qvar: x2})
                return All(f2, X2, x2, bound2, body2)
        raise TypeError(f"not a type: {T!r}")

    def goq(Q: QType, names: dict) -> QType:
        return QType(go(Q.ty, names), frozenset(names.get(a, a) if isinstance(a, str) else a for a in Q.qual))

    return go(T, names)


def open_fun(F: Fun, fn: str, arg: str) -> tuple[QType, QType]:
    """Domain and codomain of ``F`` with its binders renamed to ``fn``/``arg``."""
    if F.fn == fn and F.arg == arg:
        return F.dom, F.cod
    fm = {F.fn: frozenset({fn})}
    dom = subst_qtype(F.dom, fm)
    cod = subst_qtype(F.cod, {**fm, F.arg: frozenset({arg})})
    return dom, cod


def open_all(A: All, fn: str, tvar: str, qvar: str) -> tuple[QType, QType]:
    if A.fn == fn and A.tvar == tvar and A.qvar == qvar:
        return A.bound, A.body
    fm = {A.fn: frozenset({fn})}
    bound = subst_qtype(A.bound, fm)
    tm = {A.tvar: TVar(tvar)} if A.tvar != tvar else {}
    body = subst_qtype(A.body, {**fm, A.qvar: frozenset({qvar})}, tm)
    return bound, body


# -- structural queries ------------------------------------------------------


def free_qvars(T: Type) -> frozenset:
    """Free qualifier variables of a type."""
    match T:
        case Base() | Top() | TVar():
            return EMPTY
        case Ref(r):
            return free_qvars_q(r)
        case Fun(fn, arg, dom, cod):
            return (free_qvars_q(dom) | (free_qvars_q(cod) - {arg})) - {fn}
        case All(fn, tvar, qvar, bound, body):
            return (free_qvars_q(bound) | (free_qvars_q(body) - {qvar})) - {fn}
    raise TypeError(f"not a type: {T!r}")


def free_qvars_q(Q: QType) -> frozenset:
    return free_qvars(Q.ty) | qvars(Q.qual)


def free_tvars(T: Type) -> frozenset:
    match T:
        case Base() | Top():
            return EMPTY
        case TVar(name):
            return frozenset({name})
        case Ref(r):
            return free_tvars(r.ty)
        case Fun(_, _, dom, cod):
            return free_tvars(dom.ty) | free_tvars(cod.ty)
        case All(_, tvar, _, bound, body):
            return free_tvars(bound.ty) | (free_tvars(body.ty) - {tvar})
    raise TypeError(f"not a type: {T!r}")


def type_holes(T: Type) -> frozenset:
    match T:
        case Base() | Top() | TVar():
            return EMPTY
        case Ref(r):
            return holes(r.qual) | type_holes(r.ty)
        case Fun(_, _, dom, cod):
            return holes(dom.qual) | holes(cod.qual) | type_holes(dom.ty) | type_holes(cod.ty)
        case All(_, _, _, bound, body):
            return holes(bound.qual) | holes(body.qual) | type_holes(bound.ty) | type_holes(body.ty)
    raise TypeError(f"not a type: {T!r}")


def binders(T: Type) -> list[str]:
    """All names bound inside ``T`` in preorder."""
    match T:
        case Base() | Top() | TVar():
            return []
        case Ref(r):
            return binders(r.ty)
        case Fun(fn, arg, dom, cod):
            return [fn, arg] + binders(dom.ty) + binders(cod.ty)
        case All(fn, tvar, qvar, bound, body):
            return [fn, tvar, qvar] + binders(bound.ty) + binders(body.ty)
    raise TypeError(f"not a type: {T!r}")


def type_size(T: Type) -> int:
    match T:
        case Base() | Top() | TVar():
            return 1
        case Ref(r):
            return 1 + type_size(r.ty)
        case Fun(_, _, dom, cod):
            return 1 + type_size(dom.ty) + type_size(cod.ty)
        case All(_, _, _, bound, body):
            return 1 + type_size(bound.ty) + type_size(body.ty)
    raise TypeError(f"not a type: {T!r}")


def occurs(y: str, T: Type, pol: Polarity = Polarity.ANY) -> bool:
    """Whether ``y`` occurs in ``T`` at polarity ``pol``.

    A function type's domain qualifier counts as negative and its codomain
    qualifier as positive.  Anything under a ``Ref`` counts at every polarity.
    """
    match T:
        case Base() | Top() | TVar():
            return False
        case Ref(r):
            return y in r.qual or occurs(y, r.ty, Polarity.ANY)
        case Fun(fn, arg, dom, cod):
            if y == fn:
                return False
            return _occurs_arrow(y, dom, cod if y != arg else None, pol)
        case All(fn, tvar, qvar, bound, body):
            if y == fn:
                return False
            return _occurs_arrow(y, bound, body if y != qvar else None, pol)
    raise TypeError(f"not a type: {T!r}")


def _occurs_arrow(y: str, dom: QType, cod: QType | None, pol: Polarity) -> bool:
    if pol is Polarity.ANY:
        return (
            y in dom.qual
            or occurs(y, dom.ty, pol)
            or (cod is not None and (y in cod.qual or occurs(y, cod.ty, pol)))
        )
    if pol is Polarity.POS:
        return occurs(y, dom.ty, Polarity.NEG) or (
            cod is not None and (occurs(y, cod.ty, Polarity.POS) or y in cod.qual)
        )
    return (
        occurs(y, dom.ty, Polarity.POS)
        or y in dom.qual
        or (cod is not None and occurs(y, cod.ty, Polarity.NEG))
    )


# -- saturation and overlap -------------------------------------------------


class MalformedQualifier(Exception):
    def __init__(self, atom: str):
        super().__init__(f"unknown variable {atom!r} in qualifier")
        self.atom = atom


@dataclass(frozen=True)
class Saturation:
    vars: frozenset
    fresh_seen: bool
    hole_seen: bool

    def __iter__(self):
        return iter((self.vars, self.fresh_seen, self.hole_seen))


def saturate(ctx: Context, q: Iterable[Atom]) -> Saturation:
    """Transitive closure of ``q`` through the recorded entry qualifiers."""
    q = frozenset(q)
    fresh = FRESH in q
    hole = has_hole(q)
    seen: set[str] = set()
    todo = [a for a in q if isinstance(a, str)]
    while todo:
        x = todo.pop()
        if x in seen:
            continue
        e = ctx.lookup(x)
        if e is None:
            raise MalformedQualifier(x)
        seen.add(x)
        r = entry_qual(e)
        fresh = fresh or FRESH in r
        hole = hole or has_hole(r)
        todo.extend(a for a in r if isinstance(a, str) and a not in seen)
    return Saturation(frozenset(seen), fresh, hole)


def overlap(ctx: Context, p: Iterable[Atom], q: Iterable[Atom]) -> frozenset:
    return ONLY_FRESH | (saturate(ctx, p).vars & saturate(ctx, q).vars)


# -- alpha equivalence ------------------------------------------------------


def canonical(T: Type) -> Type:
    """Rename binders positionally so alpha-equivalent types compare equal."""
    counter = itertools.count()

    def name(kind: str) -> str:
        return f"#{kind}{next(counter)}"

    def go(T: Type, m: dict) -> Type:
        match T:
            case Base() | Top():
                return T
            case TVar(n):
                return TVar(m.get(n, n))
            case Ref(r):
                return Ref(goq(r, m))
            case Fun(fn, arg, dom, cod):
                f2, x2 = name("f"), name("x")
                inner = {**m, fn: f2}
                return Fun(f2, x2, goq(dom, inner), goq(cod, {**inner, arg: x2}))
            case All(fn, tvar, qvar, bound, body):
                f2, X2, x2 = name("f"), name("X"), name("x")
                inner = {**m, fn: f2}
                return All(f2, X2, x2, goq(bound, inner), goq(body, {**inner, tvar: X2, qvar: x2}))
        raise TypeError(f"not a type: {T!r}")

    def goq(Q: QType, m: dict) -> QType:
        return QType(go(Q.ty, m), frozenset(m.get(a, a) if isinstance(a, str) else a for a in Q.qual))

    return go(T, {})


def alpha_eq(T1: Type, T2: Type) -> bool:
    return T1 == T2 or canonical(T1) == canonical(T2)


def alpha_eq_q(Q1: QType, Q2: QType) -> bool:
    return Q1.qual == Q2.qual and alpha_eq(Q1.ty, Q2.ty)


# -- term helpers -------------------------------------------------------------


def free_term_vars(t: Term) -> frozenset:
    match t:
        case Const() | Prim():
            return EMPTY
        case Var(name):
            return frozenset({name})
        case RefAlloc(e) | Deref(e):
            return free_term_vars(e)
        case Assign(a, b) | App(a, b):
            return free_term_vars(a) | free_term_vars(b)
        case Abs(fn, arg, _, body):
            return free_term_vars(body) - {fn, arg}
        case TAbs(fn, _, _, _, body):
            return free_term_vars(body) - {fn}
        case TApp(e, _) | Ascribe(e, _):
            return free_term_vars(e)
        case Let(name, rhs, body):
            return free_term_vars(rhs) | (free_term_vars(body) - {name})
    raise TypeError(f"not a term: {t!r}")


def term_size(t: Term) -> int:
    """Number of AST nodes, counting annotation types by their size."""
    match t:
        case Const() | Var():
            return 1
        case Prim(_, qt):
            return 1 + type_size(qt.ty)
        case RefAlloc(e) | Deref(e):
            return 1 + term_size(e)
        case Assign(a, b) | App(a, b):
            return 1 + term_size(a) + term_size(b)
        case Abs(_, _, ann, body):
            return 1 + (type_size(ann.ty) if ann else 0) + term_size(body)
        case TAbs(_, _, _, bound, body):
            return 1 + type_size(bound.ty) + term_size(body)
        case TApp(e, qt) | Ascribe(e, qt):
            return 1 + term_size(e) + type_size(qt.ty)
        case Let(_, rhs, body):
            return 1 + term_size(rhs) + term_size(body)
    raise TypeError(f"not a term: {t!r}")
