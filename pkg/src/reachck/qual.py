"""Algorithmic subqualifying: exposure, unification against holes, check and infer."""

from __future__ import annotations

from .core import FRESH, Context, Fresh, Hole, SelfBind, entry_qual, has_hole, strip
from . import trace


class UnifyFailure(Exception):
    """Raised when ``p`` cannot be made a subqualifier of ``q``.

    ``reason`` is ``"fresh"`` when a leftover variable only expands to a
    fresh qualifier, ``"hole"`` when it expands through an uninstantiated
    self entry, ``"marker"`` when ♦ or a hole itself is left over, and
    ``"unbound"`` for an unknown variable.
    """

    def __init__(self, reason: str, atom, p: frozenset, q: frozenset):
        super().__init__(f"cannot bound {sorted(map(str, p))} by {sorted(map(str, q))}: {atom} ({reason})")
        self.reason = reason
        self.atom = atom
        self.p = p
        self.q = q


def expose(ctx: Context, q: frozenset) -> frozenset:
    """The largest superset of ``q`` that is still a subqualifier of ``q``."""
    out = set(q)
    visited = 0
    for e in reversed(ctx.entries):
        visited += 1
        if isinstance(e, SelfBind) and e.name in out:
            out |= strip(e.qual)
    for e in ctx.entries:
        visited += 1
        if e.name in out:
            continue
        r = entry_qual(e)
        if FRESH in r or has_hole(r):
            continue
        if r <= out:
            out.add(e.name)
    mon = trace.active()
    if mon is not None:
        mon.steps("expose", visited, 2 * len(ctx))
    return frozenset(out)


def qual_check(ctx: Context, p: frozenset, q: frozenset) -> bool:
    return p <= expose(ctx, q)


def unify(ctx: Context, p: frozenset, q: frozenset) -> Context:
    """Make ``p`` a subqualifier of the exposed qualifier ``q``.

    Leftover variables are handled latest-first.  A variable is recorded into
    the hole of the earliest self entry in ``q`` that comes after it, or else
    replaced by its recorded qualifier.
    """
    selves = sorted(
        ctx.position(a)
        for a in q
        if isinstance(a, str) and a in ctx and _open_self(ctx, a)
    )
    work = set(p)
    pending: dict[str, set[str]] = {}
    rounds = 0
    while True:
        rest = work - q
        if not rest:
            break
        for a in rest:
            if isinstance(a, (Fresh, Hole)):
                raise UnifyFailure("marker", a, p, q)
            if a not in ctx:
                raise UnifyFailure("unbound", a, p, q)
        rounds += 1
        x = max(rest, key=ctx.position)
        px = ctx.position(x)
        later = [i for i in selves if i > px]
        work.discard(x)
        if later:
            owner = ctx[later[0]].name
            pending.setdefault(owner, set()).add(x)
            continue
        r = entry_qual(ctx.lookup(x))
        if FRESH in r:
            raise UnifyFailure("fresh", x, p, q)
        if has_hole(r):
            raise UnifyFailure("hole", x, p, q)
        work |= r
    mon = trace.active()
    if mon is not None:
        mon.steps("unify", rounds, 2 * len(ctx))
    out = ctx
    for owner, atoms in pending.items():
        out = out.extend_hole(owner, atoms)
        if mon is not None:
            mon.instantiated(owner, atoms)
    return out


def _open_self(ctx: Context, name: str) -> bool:
    e = ctx.lookup(name)
    return isinstance(e, SelfBind) and Hole(name) in e.qual


def qual_infer(ctx: Context, p: frozenset, q: frozenset) -> Context:
    if p <= q:
        out = ctx
    else:
        out = unify(ctx, p, expose(ctx, q))
    mon = trace.active()
    if mon is not None:
        mon.operation("qual_infer", ctx, out)
    return out
