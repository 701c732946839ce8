"""Command line driver: ``reachck FILE... [options]``.

Exit status is 0 when every file checks (and, with ``--eval``, passes the
audit), 1 when any diagnostic is reported, and 2 on usage errors such as a
missing file or prelude.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__, trace
from .diagnostics import CheckError
from .driver import Checked, audit, check_source, load_prelude, prelude_path, with_deep_stack
from .interp import DeclAudit
from .pretty import canonicalize, pretty_atom, pretty_qtype, pretty_type

EXIT_OK, EXIT_DIAG, EXIT_USAGE = 0, 1, 2
SCHEMA = 1


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="reachck", description="Check reachability-typed programs.")
    ap.add_argument("files", nargs="*", metavar="FILE", help="source files (.rt)")
    ap.add_argument("--emit-json", action="store_true", help="one JSON object per declaration")
    ap.add_argument("--eval", action="store_true", help="run checked programs and audit their reachability")
    ap.add_argument("--trace", action="store_true", help="log rule applications to stderr")
    ap.add_argument("--fuel", type=int, default=1_000_000, help="evaluation step budget (default 10^6)")
    ap.add_argument("--prelude", metavar="PATH", help="prelude file (default: $REACHCK_PRELUDE, then the bundled one)")
    ap.add_argument("--bench", action="store_true", help="run the Church numeral scaling benchmark")
    ap.add_argument("--sizes", metavar="N,N,...", help="benchmark sizes")
    ap.add_argument("--plot", metavar="PATH", default="reachck-bench.png", help="benchmark figure path")
    ap.add_argument("--jobs", type=int, default=1, metavar="N", help="check files in N processes")
    ap.add_argument("--version", action="version", version=f"reachck {__version__}")
    return ap


def _atoms(q) -> list[str]:
    from .core import atom_key

    return [pretty_atom(a) for a in sorted(q, key=atom_key)]


def _json_records(path: str, checked: Checked) -> list[dict]:
    out = []
    if checked.program is None:
        out.append(
            {
                "schema": SCHEMA,
                "file": path,
                "name": None,
                "type": None,
                "qualifier": None,
                "filter": None,
                "status": "error",
                "diagnostics": [d.to_json() for d in checked.report.diagnostics],
            }
        )
        return out
    for r in checked.report.decls:
        out.append(
            {
                "schema": SCHEMA,
                "file": path,
                "name": r.display,
                "type": pretty_type(canonicalize(r.qt).ty) if r.qt else None,
                "qualifier": _atoms(r.qt.qual) if r.qt else None,
                "filter": _atoms(r.obs) if r.status == "ok" else None,
                "status": r.status,
                "diagnostics": [d.to_json() for d in r.diagnostics or []],
            }
        )
    # prelude failures are not attached to any of the file's declarations
    for d in checked.report.diagnostics:
        if d.origin == "prelude":
            out.append(
                {
                    "schema": SCHEMA,
                    "file": path,
                    "name": None,
                    "type": None,
                    "qualifier": None,
                    "filter": None,
                    "status": "error",
                    "diagnostics": [d.to_json()],
                }
            )
    return out


def _render_text(path: str, checked: Checked, prelude_file: Path) -> list[str]:
    lines = []
    for r in checked.report.decls:
        if r.status == "ok":
            lines.append(f"{r.display} : {pretty_qtype(canonicalize(r.qt))}")
    for d in checked.report.diagnostics:
        if d.origin == "prelude":
            lines.append(d.render(prelude_file.read_text(encoding="utf-8"), str(prelude_file)))
        else:
            lines.append(d.render(checked.source, path))
    return lines


def _render_audit(rows: list[DeclAudit]) -> list[str]:
    lines = []
    for a in rows:
        text = f"eval {a.name}: {a.outcome}"
        if a.stuck:
            text += f" (stuck: {a.stuck})"
        if a.detail:
            text += f" ({a.detail})"
        lines.append(text)
    return lines


def _check_file(path: str, opts: dict) -> tuple[int, list[str], list[str]]:
    """Check one file; returns (exit code, stdout lines, stderr lines)."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        return EXIT_USAGE, [], [f"reachck: cannot read {path}: {err.strerror}"]
    log: list[str] = []
    prelude = load_prelude(opts["prelude"])
    monitor = trace.Monitor(log=log.append, check_contexts=False) if opts["trace"] else None

    def work():
        if monitor is None:
            return check_source(text, prelude)
        with trace.monitoring(monitor):
            return check_source(text, prelude)

    checked = with_deep_stack(work)
    code = EXIT_OK if checked.ok else EXIT_DIAG
    if opts["emit_json"]:
        out = [json.dumps(rec, sort_keys=True, ensure_ascii=False) for rec in _json_records(path, checked)]
    else:
        out = _render_text(path, checked, prelude_path(opts["prelude"]))
    if opts["eval"] and checked.ok:
        report = with_deep_stack(audit, checked, opts["fuel"])
        if not report.passed:
            code = EXIT_DIAG
        if opts["emit_json"]:
            out += [
                json.dumps(
                    {"schema": SCHEMA, "file": path, "eval": a.name, "outcome": a.outcome, "detail": a.detail or a.stuck or ""},
                    sort_keys=True,
                    ensure_ascii=False,
                )
                for a in report.decls
            ]
        else:
            out += _render_audit(report.decls)
    return code, out, log


def _check_file_entry(args):
    return _check_file(*args)


def _bench(opts) -> int:
    from . import bench

    sizes = bench.DEFAULT_SIZES
    if opts.sizes:
        try:
            sizes = tuple(int(s) for s in opts.sizes.split(","))
        except ValueError:
            print(f"reachck: bad --sizes {opts.sizes!r}", file=sys.stderr)
            return EXIT_USAGE
    if len(sizes) < 3:
        print("reachck: a quadratic fit needs at least three sizes", file=sys.stderr)
        return EXIT_USAGE
    points = bench.run(sizes)
    print("size\tseconds")
    for n, t in points:
        print(f"{n}\t{t:.6f}")
    fit = bench.quadratic_fit(points)
    a, b, c = fit.coeffs
    print(f"# fit t = {a:.4e} n^2 + {b:.4e} n + {c:.4e}  R^2 = {fit.r2:.4f}  log-log slope = {fit.slope:.2f}")
    bench.plot(points, fit, opts.plot)
    print(f"# figure written to {opts.plot}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    ap = _parser()
    try:
        opts = ap.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    if opts.fuel <= 0 or opts.jobs <= 0:
        print("reachck: --fuel and --jobs must be positive", file=sys.stderr)
        return EXIT_USAGE
    try:
        load_prelude(opts.prelude)
    except OSError as err:
        print(f"reachck: cannot read prelude {prelude_path(opts.prelude)}: {err.strerror}", file=sys.stderr)
        return EXIT_USAGE
    except CheckError as err:
        path = prelude_path(opts.prelude)
        print(err.diag.render(path.read_text(encoding="utf-8"), str(path)), file=sys.stderr)
        return EXIT_DIAG
    if opts.bench:
        return _bench(opts)
    if not opts.files:
        ap.print_usage(sys.stderr)
        print("reachck: no input files", file=sys.stderr)
        return EXIT_USAGE

    flags = {k: getattr(opts, k) for k in ("emit_json", "eval", "trace", "fuel", "prelude")}
    jobs = [(f, flags) for f in opts.files]
    if opts.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=opts.jobs) as pool:
            results = list(pool.map(_check_file_entry, jobs))
    else:
        results = [_check_file(*j) for j in jobs]

    status = EXIT_OK
    for code, out, err in results:
        for line in err:
            print(line, file=sys.stderr)
        for line in out:
            print(line)
        status = max(status, code)
    return status


if __name__ == "__main__":
    sys.exit(main())
