"""Big-step interpreter with a store, plus a dynamic reachability audit."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .core import (
    FRESH,
    Abs,
    App,
    Ascribe,
    Assign,
    Const,
    Deref,
    Let,
    Prim,
    QType,
    RefAlloc,
    TAbs,
    TApp,
    Term,
    Var,
    free_term_vars,
)


@dataclass(frozen=True)
class UnitV:
    def __repr__(self) -> str:
        return "unit"


UNIT = UnitV()


@dataclass(frozen=True)
class Loc:
    index: int


@dataclass(frozen=True, eq=False)
class Closure:
    env: Mapping[str, "Value"]
    fn: str
    arg: str
    body: Term


@dataclass(frozen=True, eq=False)
class TypeClosure:
    env: Mapping[str, "Value"]
    fn: str
    body: Term


@dataclass(frozen=True)
class NativeV:
    """An ``extern`` declaration; applying or instantiating it yields ``unit``
    after the arguments have been evaluated."""

    name: str


Value = UnitV | Loc | Closure | TypeClosure | NativeV


@dataclass
class Store:
    cells: list = field(default_factory=list)

    def alloc(self, v: Value) -> Loc:
        self.cells.append(v)
        return Loc(len(self.cells) - 1)


@dataclass
class AuditTrace:
    fresh_locs: set[int] = field(default_factory=set)
    writes: set[int] = field(default_factory=set)
    reads: set[int] = field(default_factory=set)


class Stuck(Exception):
    pass


class OutOfFuel(Exception):
    pass


class _Machine:
    def __init__(self, store: Store, fuel: int):
        self.store = store
        self.fuel = fuel
        self.trace = AuditTrace()
        self._fv: dict[int, frozenset] = {}

    def tick(self) -> None:
        self.fuel -= 1
        if self.fuel < 0:
            raise OutOfFuel()

    def capture(self, env: Mapping[str, Value], t: Term, bound: tuple[str, ...]) -> dict:
        fv = self._fv.get(id(t))
        if fv is None:
            fv = self._fv[id(t)] = free_term_vars(t)
        return {x: env[x] for x in fv if x not in bound and x in env}

    def eval(self, env: Mapping[str, Value], t: Term) -> Value:
        self.tick()
        match t:
            case Const():
                return UNIT
            case Var(name):
                if name not in env:
                    raise Stuck(f"unbound variable {name}")
                return env[name]
            case RefAlloc(init):
                v = self.eval(env, init)
                loc = self.store.alloc(v)
                self.trace.fresh_locs.add(loc.index)
                return loc
            case Deref(ref):
                loc = self.eval(env, ref)
                if not isinstance(loc, Loc):
                    raise Stuck(f"dereferencing a non-location {loc!r}")
                self.trace.reads.add(loc.index)
                return self.store.cells[loc.index]
            case Assign(ref, value):
                loc = self.eval(env, ref)
                v = self.eval(env, value)
                if not isinstance(loc, Loc):
                    raise Stuck(f"assigning to a non-location {loc!r}")
                self.store.cells[loc.index] = v
                self.trace.writes.add(loc.index)
                return UNIT
            case Abs(fn, arg, _, body):
                return Closure(self.capture(env, body, (fn, arg)), fn, arg, body)
            case TAbs(fn, _, _, _, body):
                return TypeClosure(self.capture(env, body, (fn,)), fn, body)
            case App(fun, arg):
                f = self.eval(env, fun)
                v = self.eval(env, arg)
                match f:
                    case Closure(cenv, fn, x, body):
                        return self.eval({**cenv, fn: f, x: v}, body)
                    case NativeV():
                        return UNIT
                raise Stuck(f"applying a non-function {f!r}")
            case TApp(fun, _):
                f = self.eval(env, fun)
                match f:
                    case TypeClosure(cenv, fn, body):
                        return self.eval({**cenv, fn: f}, body)
                    case NativeV():
                        return f
                raise Stuck(f"instantiating a non-polymorphic value {f!r}")
            case Ascribe(term, _):
                return self.eval(env, term)
            case Let(name, rhs, body):
                v = self.eval(env, rhs)
                return self.eval({**env, name: v}, body)
            case Prim(name, _):
                return NativeV(name)
        raise Stuck(f"not a term: {t!r}")


def evaluate(env: Mapping[str, Value], store: Store, t: Term, fuel: int = 1_000_000):
    """Evaluate ``t``; the store is extended in place and returned."""
    m = _Machine(store, fuel)
    v = m.eval(env, t)
    return v, store, m.trace


def reachable_locs(v: Value, _seen: dict | None = None) -> frozenset:
    """Locations a value reaches under the shallow model: store contents are not followed."""
    seen = {} if _seen is None else _seen
    match v:
        case Loc(i):
            return frozenset({i})
        case Closure(env) | TypeClosure(env):
            key = id(v)
            if key in seen:
                return seen[key]
            seen[key] = frozenset()
            out = frozenset().union(*(reachable_locs(w, seen) for w in env.values()))
            seen[key] = out
            return out
    return frozenset()


# -- the audit ----------------------------------------------------------------


@dataclass
class DeclAudit:
    name: str
    outcome: str  # "pass", "fail" or "inconclusive"
    stuck: str | None = None
    value_ok: bool = True
    writes_ok: bool = True
    detail: str = ""


@dataclass
class AuditReport:
    decls: list[DeclAudit]

    @property
    def passed(self) -> bool:
        return all(d.outcome == "pass" for d in self.decls)

    def clause(self, which: str) -> bool:
        match which:
            case "a":
                return all(d.stuck is None for d in self.decls)
            case "b":
                return all(d.value_ok for d in self.decls)
            case "c":
                return all(d.writes_ok for d in self.decls)
        raise ValueError(which)


def _denote(env: Mapping[str, Value], q, fresh: set[int], cache: dict) -> frozenset:
    out = set()
    for a in q:
        if a is FRESH:
            out |= fresh
        elif a in env:
            out |= reachable_locs(env[a], cache)
    return frozenset(out)


def dynamic_check(entries, fuel: int = 1_000_000, audit_from: int = 0) -> AuditReport:
    """Run checked declarations on one shared store and audit each result.

    ``entries`` is a sequence of ``(name, term, qt, obs)`` where ``qt`` and
    ``obs`` are what the checker reported for the declaration.  Entries
    before ``audit_from`` are evaluated to populate the environment but not
    audited.
    """
    env: dict[str, Value] = {}
    store = Store()
    out = []
    for k, (name, term, qt, obs) in enumerate(entries):
        try:
            v, store, tr = evaluate(env, store, term, fuel)
        except Stuck as err:
            out.append(DeclAudit(name, "fail", stuck=str(err)))
            break
        except (OutOfFuel, RecursionError):
            out.append(DeclAudit(name, "inconclusive", detail="out of fuel"))
            break
        if k >= audit_from:
            out.append(audit_value(name, env, v, tr, qt, obs))
        env[name] = v
    return AuditReport(out)


def audit_value(name: str, env: Mapping[str, Value], v: Value, tr: AuditTrace, qt: QType, obs) -> DeclAudit:
    cache: dict = {}
    allowed = _denote(env, qt.qual, tr.fresh_locs, cache)
    reach = reachable_locs(v, cache)
    value_ok = reach <= allowed
    writes_allowed = _denote(env, obs, tr.fresh_locs, cache) | tr.fresh_locs
    writes_ok = tr.writes <= writes_allowed
    detail = []
    if not value_ok:
        detail.append(f"value reaches {sorted(reach - allowed)} outside its qualifier")
    if not writes_ok:
        detail.append(f"writes {sorted(tr.writes - writes_allowed)} outside its filter")
    return DeclAudit(name, "pass" if value_ok and writes_ok else "fail", None, value_ok, writes_ok, "; ".join(detail))
