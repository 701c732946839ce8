"""Reachability type checker with qualifier inference, avoidance and a dynamic audit."""

from .core import Context, QType
from .infer import Checker, Report, typecheck_program
from .syntax import parse_program, parse_qtype, parse_term

__version__ = "0.1.0"

__all__ = [
    "Checker",
    "Context",
    "QType",
    "Report",
    "parse_program",
    "parse_qtype",
    "parse_term",
    "typecheck_program",
]
