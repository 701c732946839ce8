"""Optional instrumentation of the checking algorithms.

Nothing is recorded unless a :class:`Monitor` is installed with
:func:`monitoring`.  When installed, every algorithmic operation reports its
input and output contexts, and the monitor verifies that the output only
instantiates holes of the input.
"""

from __future__ import annotations

from collections import Counter
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Callable, Iterator

from .core import Context, has_hole


@dataclass
class Violation:
    op: str
    detail: str


@dataclass
class Monitor:
    log: Callable[[str], None] | None = None
    check_contexts: bool = True
    calls: Counter = field(default_factory=Counter)
    violations: list[Violation] = field(default_factory=list)
    holes_opened: int = 0
    instantiations: int = 0
    depth: int = 0  # deepest subtype recursion of the current check

    def operation(self, op: str, ctx_in: Context, ctx_out: Context) -> None:
        self.calls[op] += 1
        if self.check_contexts:
            from .wf import ctx_subsumes

            if not ctx_subsumes(ctx_in, ctx_out):
                self.violations.append(Violation(op, "output context does not subsume input"))

    def rule(self, name: str, detail: str = "") -> None:
        self.calls["rule:" + name] += 1
        if self.log is not None:
            self.log(f"{name} {detail}".rstrip())

    def steps(self, op: str, count: int, limit: int) -> None:
        """Record a loop count and flag it when it exceeds its static ceiling."""
        self.calls["steps:" + op] += count
        if count > limit:
            self.violations.append(Violation(op, f"{count} steps exceed the bound {limit}"))

    def hole_opened(self) -> None:
        self.holes_opened += 1

    def instantiated(self, owner: str, atoms) -> None:
        self.instantiations += 1
        if self.log is not None:
            self.log(f"  instantiate ∇{owner} += {{{', '.join(sorted(atoms))}}}")

    def top_level(self, what: str, qual) -> None:
        self.calls["top-level"] += 1
        if has_hole(qual):
            self.violations.append(Violation("top-level", f"{what} carries a hole"))


_active: Monitor | None = None


def active() -> Monitor | None:
    return _active


@contextmanager
def monitoring(monitor: Monitor | None = None) -> Iterator[Monitor]:
    global _active
    previous = _active
    _active = monitor or Monitor()
    try:
        yield _active
    finally:
        _active = previous
