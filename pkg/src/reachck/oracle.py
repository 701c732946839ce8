"""Bounded declarative subqualifying, computed bottom-up over a finite atom universe.

The derivable pairs of height at most ``d`` are built level by level: height
one holds the axioms (subset, variable expansion, type-variable expansion,
self introduction), and each further level closes the previous one under
transitivity and congruence.  Qualifiers are bitmasks over the universe, so a
level is a boolean matrix; transitivity is a boolean matrix product and
congruence a union-product computed with zeta/Möbius transforms.
"""

from __future__ import annotations

import numpy as np

from .core import FRESH, Context, Fresh, SelfBind, TVarBind, VarBind, atom_key, has_hole

# 2^10 qualifiers squared is the largest matrix we are willing to build.
MAX_UNIVERSE = 10


def _mask(q, index: dict) -> int:
    m = 0
    for a in q:
        m |= 1 << index[a]
    return m


def _axioms(ctx: Context, universe: tuple) -> np.ndarray:
    n = len(universe)
    N = 1 << n
    index = {a: i for i, a in enumerate(universe)}
    masks = np.arange(N)
    # q-sub: p ⊆ q
    D = (masks[:, None] & ~masks[None, :]) == 0
    for e in ctx:
        match e:
            case VarBind(x, qt):
                r = qt.qual
            case TVarBind(_, x, bound):
                r = bound.qual
            case SelfBind(x, r):
                if has_hole(r):
                    continue
                # q-self: the recorded qualifier, minus ♦, is bounded by the self name
                D[_mask((a for a in r if not isinstance(a, Fresh) and a in index), index), 1 << index[x]] = True
        if FRESH in r or has_hole(r) or x not in index:
            continue
        if not all(a in index for a in r):
            continue
        # q-var / q-tvar: a variable is bounded by its recorded qualifier
        D[1 << index[x], _mask(r, index)] = True
    return D


def _zeta(Z: np.ndarray, n: int) -> np.ndarray:
    Z = Z.reshape((2,) * (2 * n))
    for ax in range(2 * n):
        Z = np.cumsum(Z, axis=ax)
    return Z.reshape(1 << n, 1 << n)


def _mobius(Z: np.ndarray, n: int) -> np.ndarray:
    Z = Z.reshape((2,) * (2 * n))
    for ax in range(2 * n):
        Z = np.diff(Z, axis=ax, prepend=0)
    return Z.reshape(1 << n, 1 << n)


def _step(D: np.ndarray, n: int) -> np.ndarray:
    Di = D.astype(np.int64)
    trans = (Di @ Di) > 0
    if n == 0:
        return D | trans
    Z = _zeta(Di, n)
    cong = _mobius(Z * Z, n) > 0
    return D | trans | cong


def derivable(ctx: Context, universe: tuple, depth: int) -> np.ndarray:
    """Matrix of pairs ``(p, q)`` with a derivation of height at most ``depth``.

    Levels are built in order and each is kept only until the next one
    exists; once a level adds nothing, all higher levels equal it.
    """
    n = len(universe)
    if n > MAX_UNIVERSE:
        raise ValueError(f"atom universe of {n} exceeds {MAX_UNIVERSE}")
    if depth <= 0:
        return np.zeros((1 << n, 1 << n), dtype=bool)
    level = _axioms(ctx, universe)
    for _ in range(depth - 1):
        nxt = _step(level, n)
        if np.array_equal(nxt, level):
            break
        level = nxt
    return level


def universe_of(ctx: Context, p, q) -> tuple:
    """Context names plus the endpoints' variables, with ♦ only when ``q`` has it.

    Every rule preserves "♦ on the left implies ♦ on the right", so ♦ is
    useless in any intermediate of a derivation whose conclusion lacks it on
    the right.
    """
    atoms = set(ctx.names()) | {a for a in p if isinstance(a, str)} | {a for a in q if isinstance(a, str)}
    if FRESH in q:
        atoms.add(FRESH)
    return tuple(sorted(atoms, key=atom_key))


def decl_subqual(ctx: Context, p, q, depth: int) -> bool:
    if FRESH in p and FRESH not in q:
        return False
    if has_hole(p) or has_hole(q):
        raise ValueError("the oracle only handles hole-free qualifiers")
    universe = universe_of(ctx, p, q)
    index = {a: i for i, a in enumerate(universe)}
    D = derivable(ctx, universe, depth)
    return bool(D[_mask(p, index), _mask(q, index)])
