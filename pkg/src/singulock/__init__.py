"""Topological deadlock and livelock detection for a small CSP-style calculus."""

from .calculus import Program, ProgramError, parse_program, pretty_print, validate
from .semantics import ExecutionGraph, explore

__version__ = "0.1.0"

__all__ = [
    "ExecutionGraph",
    "Program",
    "ProgramError",
    "explore",
    "parse_program",
    "pretty_print",
    "validate",
]
