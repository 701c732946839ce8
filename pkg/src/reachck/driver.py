"""Checking whole source files against the prelude."""

from __future__ import annotations

import os
import sys
import threading
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .diagnostics import CheckError
from .infer import Report, typecheck_program
from .interp import AuditReport, dynamic_check
from .syntax import Decl, Program, parse_program

PRELUDE_ENV = "REACHCK_PRELUDE"


def prelude_path(explicit: str | os.PathLike | None = None) -> Path:
    if explicit is not None:
        return Path(explicit)
    env = os.environ.get(PRELUDE_ENV)
    if env:
        return Path(env)
    return Path(str(resources.files("reachck") / "prelude.rt"))


@lru_cache(maxsize=8)
def _load(path: str, mtime: float) -> Program:
    return parse_program(Path(path).read_text(encoding="utf-8"), private_locals=True)


def load_prelude(path: str | os.PathLike | None = None) -> Program:
    p = prelude_path(path)
    return _load(str(p), p.stat().st_mtime)


@dataclass
class Checked:
    source: str
    program: Program | None
    decls: list[Decl]
    prelude_count: int
    report: Report

    @property
    def ok(self) -> bool:
        return self.report.ok


def check_source(text: str, prelude: Program | None = None) -> Checked:
    prelude = load_prelude() if prelude is None else prelude
    pre = [d for d in prelude.decls if d.term is not None]
    try:
        program = parse_program(text, prelude.state)
    except CheckError as err:
        return Checked(text, None, [], len(pre), Report([], [err.diag]))
    decls = pre + [d for d in program.decls if d.term is not None]
    report = typecheck_program(decls, first_reported=len(pre))
    return Checked(text, program, decls, len(pre), report)


def audit(checked: Checked, fuel: int = 1_000_000) -> AuditReport:
    """Evaluate every declaration and audit the program's own ones."""
    results = {d.name: d for d in checked.report.decls}
    entries = []
    for k, d in enumerate(checked.decls):
        r = results.get(d.name)
        qt = r.qt if r is not None else None
        obs = r.obs if r is not None else frozenset()
        entries.append((d.name, d.term, qt, obs))
    return dynamic_check(entries, fuel, audit_from=checked.prelude_count)


def with_deep_stack(fn, *args, stack_mb: int = 512, recursion: int = 200_000):
    """Run ``fn`` on a thread with a large stack; deep let chains recurse deeply."""
    out: dict = {}

    def run():
        try:
            out["value"] = fn(*args)
        except BaseException as err:  # re-raised on the caller's thread
            out["error"] = err

    old_limit = sys.getrecursionlimit()
    old_size = threading.stack_size()
    sys.setrecursionlimit(max(old_limit, recursion))
    threading.stack_size(stack_mb * 1024 * 1024)
    try:
        t = threading.Thread(target=run)
        t.start()
        t.join()
    finally:
        threading.stack_size(old_size)
        sys.setrecursionlimit(old_limit)
    if "error" in out:
        raise out["error"]
    return out["value"]
